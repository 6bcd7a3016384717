#include "mpmwg/timetag_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "mpmwg/errors.hpp"

namespace mpmwg {

namespace {

constexpr std::array<char, 4> kMagic{'T', 'T', 'A', 'G'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 16;
constexpr std::size_t kRecordBytes = 9;

template <typename T>
void put_le(char* out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t k = 0; k < sizeof(T); ++k) out[k] = static_cast<char>((value >> (8 * k)) & 0xffU);
}

template <typename T>
T get_le(const char* in) {
  T value = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) {
    value |= static_cast<T>(static_cast<T>(static_cast<unsigned char>(in[k])) << (8 * k));
  }
  return value;
}

std::vector<std::string> default_labels(std::size_t n) {
  for (SplitterLayout l : {SplitterLayout::two_detector, SplitterLayout::three_detector}) {
    if (static_cast<std::size_t>(channel_count(l)) == n) return channel_labels(l);
  }
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < n; ++k) labels.push_back("ch" + std::to_string(k));
  return labels;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  return in;
}

}  // namespace

void write_timetags_binary(const TimeTagStream& stream, const std::filesystem::path& path) {
  auto out = open_out(path, std::ios::binary | std::ios::trunc);
  std::array<char, kHeaderBytes> header{};
  std::memcpy(header.data(), kMagic.data(), kMagic.size());
  put_le<std::uint16_t>(header.data() + 4, kVersion);
  put_le<std::uint16_t>(header.data() + 6, static_cast<std::uint16_t>(stream.labels.size()));
  put_le<std::uint64_t>(header.data() + 8, static_cast<std::uint64_t>(std::llround(stream.duration_s * 1e12)));
  out.write(header.data(), header.size());

  std::vector<char> buffer(stream.tags.size() * kRecordBytes);
  for (std::size_t k = 0; k < stream.tags.size(); ++k) {
    char* rec = buffer.data() + k * kRecordBytes;
    rec[0] = static_cast<char>(stream.tags[k].channel);
    put_le<std::uint64_t>(rec + 1, stream.tags[k].timestamp_ps);
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (!out) throw Error(Errc::io_error, "write failed for " + path.string());
}

TimeTagStream read_timetags_binary(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::array<char, kHeaderBytes> header{};
  if (!in.read(header.data(), header.size()) || std::memcmp(header.data(), kMagic.data(), 4) != 0) {
    throw Error(Errc::io_error, path.string() + " is not a time-tag file");
  }
  if (get_le<std::uint16_t>(header.data() + 4) != kVersion) {
    throw Error(Errc::io_error, path.string() + " has an unsupported version");
  }
  TimeTagStream stream;
  stream.labels = default_labels(get_le<std::uint16_t>(header.data() + 6));
  stream.duration_s = static_cast<double>(get_le<std::uint64_t>(header.data() + 8)) * 1e-12;

  std::vector<char> body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (body.size() % kRecordBytes != 0) throw Error(Errc::io_error, path.string() + " is truncated");
  stream.tags.resize(body.size() / kRecordBytes);
  for (std::size_t k = 0; k < stream.tags.size(); ++k) {
    const char* rec = body.data() + k * kRecordBytes;
    stream.tags[k] = {static_cast<std::uint8_t>(rec[0]), get_le<std::uint64_t>(rec + 1)};
  }
  try {
    stream.validate();
  } catch (const Error& e) {
    throw Error(Errc::io_error, path.string() + ": " + e.what());
  }
  return stream;
}

void write_timetags_csv(const TimeTagStream& stream, const std::filesystem::path& path) {
  auto out = open_out(path, std::ios::trunc);
  out << "channel,timestamp_ps\n";
  for (const auto& t : stream.tags) out << static_cast<int>(t.channel) << ',' << t.timestamp_ps << '\n';
  if (!out) throw Error(Errc::io_error, "write failed for " + path.string());
}

TimeTagStream read_timetags_csv(const std::filesystem::path& path, std::optional<double> duration_s) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("channel,timestamp_ps", 0) != 0) {
    throw Error(Errc::io_error, path.string() + ": missing 'channel,timestamp_ps' header");
  }
  TimeTagStream stream;
  std::size_t max_channel = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("no comma");
      const unsigned long ch = std::stoul(line.substr(0, comma));
      const unsigned long long ts = std::stoull(line.substr(comma + 1));
      if (ch > 255) throw std::out_of_range("channel");
      stream.tags.push_back({static_cast<std::uint8_t>(ch), ts});
      max_channel = std::max<std::size_t>(max_channel, ch);
    } catch (const std::exception&) {
      throw Error(Errc::io_error, path.string() + ":" + std::to_string(lineno) + ": malformed record");
    }
  }
  stream.labels = default_labels(std::max<std::size_t>(max_channel + 1, 2));
  stream.duration_s = duration_s.value_or(
      stream.tags.empty() ? 0.0 : static_cast<double>(stream.tags.back().timestamp_ps + 1) * 1e-12);
  try {
    stream.validate();
  } catch (const Error& e) {
    throw Error(Errc::io_error, path.string() + ": " + e.what());
  }
  return stream;
}

TimeTagStream read_timetags(const std::filesystem::path& path, std::optional<double> duration_s) {
  std::array<char, 4> magic{};
  {
    auto in = open_in(path);
    in.read(magic.data(), magic.size());
  }
  if (magic == kMagic) {
    auto s = read_timetags_binary(path);
    if (duration_s) s.duration_s = *duration_s;
    return s;
  }
  return read_timetags_csv(path, duration_s);
}

}  // namespace mpmwg
