#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mpmwg/geometry.hpp"
#include "mpmwg/mode_solver.hpp"

namespace mpmwg {

struct Wave {
  double wavelength_um = 0.0;
  double n_eff = 0.0;

  // k = 2 pi n_eff / lambda, rad/um.
  double k() const;
};

// k_s + k_i - k_p in rad/um. Throws Errc::energy_conservation_violated unless
// 1/lambda_p = 1/lambda_s + 1/lambda_i to 1e-9 relative.
double phase_mismatch(const Wave& pump, const Wave& signal, const Wave& idler);

struct PhaseMatchResult {
  double delta_k_per_um = 0.0;
  Wave pump;
  Wave signal;
  Wave idler;
  WaveguideGeometry geometry;

  double recompute_delta_k() const { return phase_mismatch(pump, signal, idler); }
};

double sinc_squared(double x);

// sinc^2(dk L / 2) for each sample; dk in rad/um, L in mm.
std::vector<double> tuning_curve(std::span<const double> delta_k_per_um, double length_mm);

/// On-disk cache of effective indices keyed by a hash of everything that
/// determines a solve. One JSON file per key; writes go through a temporary
/// file and a rename so a key has a single writer.
class ModeIndexCache {
 public:
  explicit ModeIndexCache(std::filesystem::path directory);

  // Cache directory from $MPMWG_CACHE_DIR when set, else `fallback`.
  static std::filesystem::path resolve_directory(const std::filesystem::path& fallback);

  std::optional<double> lookup(const std::string& key) const;
  void store(const std::string& key, double n_eff, const std::string& description) const;
  const std::filesystem::path& directory() const { return directory_; }

 private:
  std::filesystem::path directory_;
};

struct DesignOptions {
  RasterOptions raster;
  SolverOptions solver;
  // Root-finder stopping rules: bracket width on w (um), on lambda (um),
  // and |n_eff(TE01) - n_eff(TE00)|.
  double width_tolerance_um = 1e-3;
  double wavelength_tolerance_um = 1e-5;
  double index_tolerance = 2e-6;
  int max_root_iterations = 40;
  // Modes requested around the expected TE01 index when hunting for it.
  int pump_search_modes = 4;
  std::shared_ptr<const ModeIndexCache> cache;
};

std::string cache_key(const WaveguideGeometry& geometry, double wavelength_um,
                      const DesignOptions& options, const std::string& role);

// Index of the fundamental mode at `wavelength_um`.
double te00_index(const WaveguideGeometry& geometry, double wavelength_um,
                  const DesignOptions& options);
// Index of TE01 at `wavelength_um`; `near` seeds the shift. Throws
// Errc::no_higher_order_mode when no guided TE01 exists.
double te01_index(const WaveguideGeometry& geometry, double wavelength_um, double near,
                  const DesignOptions& options);

// Picks the TE01 mode out of a solved set (nullptr when absent).
const Mode* find_te01(const std::vector<Mode>& modes);

struct MpmWidth {
  double width_um = 0.0;
  PhaseMatchResult result;
  int evaluations = 0;
};

/// Top width at which TE01 at lambda_s / 2 and TE00 at lambda_s share one
/// effective index (degenerate SPDC / SHG). `base` supplies every geometry
/// parameter except the width.
MpmWidth find_mpm_width(const WaveguideGeometry& base, double signal_wavelength_um,
                        std::pair<double, double> width_bracket_um,
                        const DesignOptions& options = {});

// Pump wavelength at which n_eff(TE01, lp) = n_eff(TE00, 2 lp).
double mpm_pump_wavelength(const WaveguideGeometry& geometry,
                           std::pair<double, double> search_range_um,
                           const DesignOptions& options = {});

struct LandscapePoint {
  double width_um = 0.0;
  double etch_depth_nm = 0.0;
  double n_te00_signal = 0.0;
  // NaN when TE01 is not guided.
  double n_te01_pump = 0.0;
};

// Effective-index landscapes over a (w, h1) lattice; points run in parallel.
std::vector<LandscapePoint> landscape_sweep(const WaveguideGeometry& base,
                                            double signal_wavelength_um,
                                            std::span<const double> widths_um,
                                            std::span<const double> etch_depths_nm,
                                            const DesignOptions& options, int threads = 1);

struct PumpCurvePoint {
  double width_um = 0.0;
  // NaN when no phase-matched pump lies in the search range or TE01 is cut off.
  double pump_wavelength_um = 0.0;
};

std::vector<PumpCurvePoint> pump_wavelength_curve(const WaveguideGeometry& base,
                                                  std::span<const double> widths_um,
                                                  std::pair<double, double> search_range_um,
                                                  const DesignOptions& options, int threads = 1);

}  // namespace mpmwg
