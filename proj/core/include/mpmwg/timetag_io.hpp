#pragma once

#include <filesystem>
#include <optional>

#include "mpmwg/photon_stats.hpp"

namespace mpmwg {

// Binary layout, little-endian: "TTAG", u16 version (1), u16 channel count,
// u64 duration in ps, then 9-byte records of u8 channel and u64 timestamp in ps.
void write_timetags_binary(const TimeTagStream& stream, const std::filesystem::path& path);
TimeTagStream read_timetags_binary(const std::filesystem::path& path);

// CSV with header "channel,timestamp_ps". The duration is not stored; when
// absent it is taken as the last timestamp plus one picosecond.
void write_timetags_csv(const TimeTagStream& stream, const std::filesystem::path& path);
TimeTagStream read_timetags_csv(const std::filesystem::path& path,
                                std::optional<double> duration_s = std::nullopt);

// Dispatches on the magic bytes. Throws Errc::io_error.
TimeTagStream read_timetags(const std::filesystem::path& path,
                            std::optional<double> duration_s = std::nullopt);

}  // namespace mpmwg
