#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "mpmwg/geometry.hpp"
#include "mpmwg/mode_solver.hpp"
#include "mpmwg/photon_stats.hpp"

namespace mpmwg::cli {

struct GeometrySection {
  WaveguideGeometry geometry;
  std::string core = "ln_e";
  std::string substrate = "silica";
  std::string cladding = "air";
  std::string materials_file;  // optional YAML material library
};

struct SolverSection {
  RasterOptions raster;
  SolverOptions solver;
  int pump_modes = 4;
};

struct SweepSection {
  double signal_wavelength_um = 1.53;
  double width_min_um = 1.2;
  double width_max_um = 1.7;
  int width_samples = 11;
  double etch_min_nm = 350.0;
  double etch_max_nm = 500.0;
  int etch_samples = 4;
  double pump_min_um = 0.70;
  double pump_max_um = 0.84;
  double mpm_width_min_um = 1.35;
  double mpm_width_max_um = 1.60;
};

// 41.77 GHz/mW at 0.25 uW on chip, with a 5 % per-channel link budget.
inline SourceDetectionSpec default_source_spec() {
  SourceDetectionSpec s;
  s.pair_rate_hz = 41.77e9 * 0.25e-3;
  s.duration_s = 0.1;
  s.channel_efficiencies = {0.05};
  s.dark_rates_hz = {100.0};
  s.timing_jitter_sigma_ps = {40.0};
  s.coincidence_window_ps = 1000.0;
  s.histogram_bin_ps = 100.0;
  s.layout = SplitterLayout::two_detector;
  s.rng_seed = 1;
  return s;
}

struct SpdcSection {
  SourceDetectionSpec spec = default_source_spec();
  double histogram_span_ps = 1e6;
  std::string format = "binary";  // binary | csv
};

struct IoSection {
  std::filesystem::path output_dir = "mpmwg_out";
  std::filesystem::path cache_dir = ".mpmwg_cache";
};

/// Complete run description. Defaults reproduce the nominal design point.
struct RunConfig {
  GeometrySection geometry;
  SolverSection solver;
  SweepSection sweep;
  SpdcSection spdc;
  IoSection io;

  // Throws Error(Errc::config_error) on unknown keys, bad types or invalid values.
  // Relative materials_file paths resolve against `base_dir` when it is given.
  static RunConfig from_yaml_string(const std::string& text, const std::filesystem::path& base_dir = {});
  static RunConfig from_yaml_file(const std::filesystem::path& path);

  // Resolves material names into `geometry.geometry` and checks invariants.
  void finalize();

  nlohmann::json to_json() const;
  std::string hash() const;
};

}  // namespace mpmwg::cli
