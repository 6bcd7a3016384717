#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <unistd.h>

#include "mpmwg/timetag_io.hpp"
#include "test_support.hpp"

using namespace mpmwg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("mpmwg_io_" + std::to_string(::getpid()));
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
};

TimeTagStream sample_stream() {
  SourceDetectionSpec s;
  s.pair_rate_hz = 2e5;
  s.duration_s = 0.02;
  s.channel_efficiencies = {0.4};
  s.dark_rates_hz = {500.0};
  s.timing_jitter_sigma_ps = {40.0};
  s.layout = SplitterLayout::three_detector;
  s.rng_seed = 11;
  return simulate_timetags(s);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("binary round trip") {
  TempDir dir;
  const auto stream = sample_stream();
  REQUIRE(!stream.tags.empty());
  const auto file = dir.path / "tags.ttag";
  write_timetags_binary(stream, file);
  CHECK(fs::file_size(file) == 16 + 9 * stream.tags.size());
  const auto back = read_timetags_binary(file);
  CHECK(back.tags == stream.tags);
  CHECK(back.duration_s == doctest::Approx(stream.duration_s).epsilon(1e-15));
  CHECK(back.labels == stream.labels);
  CHECK(read_timetags(file).tags == stream.tags);
  CHECK(read_timetags(file, 0.5).duration_s == 0.5);

  const auto again = dir.path / "again.ttag";
  write_timetags_binary(back, again);
  CHECK(slurp(file) == slurp(again));
}

TEST_CASE("csv round trip") {
  TempDir dir;
  const auto stream = sample_stream();
  const auto file = dir.path / "tags.csv";
  write_timetags_csv(stream, file);
  CHECK(slurp(file).rfind("channel,timestamp_ps\n", 0) == 0);
  const auto back = read_timetags_csv(file, stream.duration_s);
  CHECK(back.tags == stream.tags);
  CHECK(back.labels.size() == 3);
  CHECK(back.duration_s == stream.duration_s);
  const auto inferred = read_timetags(file);
  CHECK(inferred.duration_s == doctest::Approx((stream.tags.back().timestamp_ps + 1) * 1e-12));
}

TEST_CASE("empty streams") {
  TempDir dir;
  TimeTagStream empty{.tags = {}, .duration_s = 1.0, .labels = {"a", "b"}};
  write_timetags_binary(empty, dir.path / "e.ttag");
  const auto back = read_timetags(dir.path / "e.ttag");
  CHECK(back.tags.empty());
  CHECK(back.duration_s == 1.0);
  CHECK(back.labels.size() == 2);
  write_timetags_csv(empty, dir.path / "e.csv");
  CHECK(read_timetags(dir.path / "e.csv").tags.empty());
}

TEST_CASE("malformed input") {
  TempDir dir;
  CHECK_ERRC(read_timetags(dir.path / "missing.ttag"), Errc::io_error);

  std::ofstream(dir.path / "bad.csv") << "time,channel\n1,2\n";
  CHECK_ERRC(read_timetags(dir.path / "bad.csv"), Errc::io_error);
  std::ofstream(dir.path / "junk.csv") << "channel,timestamp_ps\n0,12\nzero,13\n";
  CHECK_ERRC(read_timetags(dir.path / "junk.csv"), Errc::io_error);
  std::ofstream(dir.path / "unsorted.csv") << "channel,timestamp_ps\n0,20\n1,10\n";
  CHECK_ERRC(read_timetags(dir.path / "unsorted.csv"), Errc::io_error);

  write_timetags_binary(sample_stream(), dir.path / "full.ttag");
  auto bytes = slurp(dir.path / "full.ttag");
  {
    std::ofstream out(dir.path / "cut.ttag", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 4));
  }
  CHECK_ERRC(read_timetags_binary(dir.path / "cut.ttag"), Errc::io_error);
  bytes[0] = 'X';
  {
    std::ofstream out(dir.path / "magic.ttag", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_ERRC(read_timetags_binary(dir.path / "magic.ttag"), Errc::io_error);
  bytes[0] = 'T';
  bytes[4] = 9;
  {
    std::ofstream out(dir.path / "version.ttag", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_ERRC(read_timetags_binary(dir.path / "version.ttag"), Errc::io_error);

  CHECK_ERRC(write_timetags_binary(sample_stream(), dir.path / "no_such_dir" / "x.ttag"), Errc::io_error);
}
