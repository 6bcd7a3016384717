#include "mpmwg/phase_matching.hpp"

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/tools/roots.hpp>
#include <nlohmann/json.hpp>

#include "mpmwg/errors.hpp"
#include "mpmwg/parallel.hpp"

namespace mpmwg {

double Wave::k() const { return 2.0 * std::numbers::pi * n_eff / wavelength_um; }

double phase_mismatch(const Wave& pump, const Wave& signal, const Wave& idler) {
  for (const Wave* w : {&pump, &signal, &idler}) {
    if (!(w->wavelength_um > 0.0)) throw Error(Errc::invalid_argument, "wavelengths must be positive");
  }
  const double fp = 1.0 / pump.wavelength_um;
  const double fsi = 1.0 / signal.wavelength_um + 1.0 / idler.wavelength_um;
  if (std::abs(fp - fsi) > 1e-9 * fp) {
    std::ostringstream msg;
    msg << "energy conservation violated: 1/lp = " << fp << ", 1/ls + 1/li = " << fsi;
    throw Error(Errc::energy_conservation_violated, msg.str());
  }
  return signal.k() + idler.k() - pump.k();
}

double sinc_squared(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 3.0;
  const double s = std::sin(x) / x;
  return s * s;
}

std::vector<double> tuning_curve(std::span<const double> delta_k_per_um, double length_mm) {
  if (!(length_mm > 0.0)) throw Error(Errc::invalid_argument, "length must be positive");
  const double half_length_um = 0.5 * length_mm * 1e3;
  std::vector<double> out;
  out.reserve(delta_k_per_um.size());
  for (double dk : delta_k_per_um) out.push_back(sinc_squared(dk * half_length_um));
  return out;
}

// ---------------------------------------------------------------------------
// cache

ModeIndexCache::ModeIndexCache(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::error_code ec;
  std::filesystem::create_directories(directory_, ec);
  if (ec) throw Error(Errc::io_error, "cannot create cache directory " + directory_.string());
}

std::filesystem::path ModeIndexCache::resolve_directory(const std::filesystem::path& fallback) {
  if (const char* env = std::getenv("MPMWG_CACHE_DIR"); env && *env) return env;
  return fallback;
}

std::optional<double> ModeIndexCache::lookup(const std::string& key) const {
  std::ifstream in(directory_ / (key + ".json"));
  if (!in) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("n_eff").is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.at("n_eff").get<double>();
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

void ModeIndexCache::store(const std::string& key, double n_eff,
                           const std::string& description) const {
  nlohmann::json j;
  j["key"] = key;
  j["n_eff"] = std::isnan(n_eff) ? nlohmann::json(nullptr) : nlohmann::json(n_eff);
  j["description"] = description;
  std::random_device rd;
  const auto tmp = directory_ / (key + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp);
    if (!out) throw Error(Errc::io_error, "cannot write cache entry " + tmp.string());
    out << std::setprecision(17) << j.dump(2) << '\n';
  }
  std::error_code ec;
  std::filesystem::rename(tmp, directory_ / (key + ".json"), ec);
  if (ec) std::filesystem::remove(tmp, ec);
}

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void describe_material(std::ostream& os, const MaterialModel& m) {
  os << m.name() << '[' << m.constant_term();
  for (double c : m.sellmeier_coefficients()) os << ',' << c;
  os << ']';
}

std::string describe(const WaveguideGeometry& g, double wavelength_um, const DesignOptions& o,
                     const std::string& role) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "v1|w=" << g.top_width_um << "|h1=" << g.etch_depth_nm << "|film=" << g.film_thickness_nm
     << "|theta=" << g.sidewall_angle_deg << "|layers=";
  for (double t : g.layer_thicknesses_nm) os << t << ',';
  os << "|core=";
  describe_material(os, g.core);
  os << "|sub=";
  describe_material(os, g.substrate);
  os << "|clad=";
  describe_material(os, g.cladding);
  os << "|dx=" << o.raster.spacing_nm << "|pad=" << o.raster.padding_um
     << "|avg=" << o.raster.subcell_averaging
     << "|form=" << static_cast<int>(o.solver.formulation) << "|lambda=" << wavelength_um
     << "|role=" << role;
  return os.str();
}

template <typename Solve>
double cached(const WaveguideGeometry& g, double wavelength_um, const DesignOptions& o,
              const std::string& role, Solve&& solve) {
  if (!o.cache) return solve();
  const std::string key = cache_key(g, wavelength_um, o, role);
  if (auto hit = o.cache->lookup(key)) {
    if (std::isnan(*hit)) {
      throw Error(Errc::no_higher_order_mode, "no guided TE01 (cached) at " +
                                                  std::to_string(wavelength_um) + " um");
    }
    return *hit;
  }
  try {
    const double value = solve();
    o.cache->store(key, value, describe(g, wavelength_um, o, role));
    return value;
  } catch (const Error& e) {
    if (e.code() == Errc::no_higher_order_mode) {
      o.cache->store(key, std::numeric_limits<double>::quiet_NaN(), describe(g, wavelength_um, o, role));
    }
    throw;
  }
}

double clamp_guess(double guess, std::pair<double, double> bracket) {
  const double span = bracket.second - bracket.first;
  return std::clamp(guess, bracket.first + 1e-3 * span, bracket.second);
}

}  // namespace

std::string cache_key(const WaveguideGeometry& geometry, double wavelength_um,
                      const DesignOptions& options, const std::string& role) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0')
     << fnv1a(describe(geometry, wavelength_um, options, role));
  return os.str();
}

const Mode* find_te01(const std::vector<Mode>& modes) {
  const Mode* best = nullptr;
  for (const Mode& m : modes) {
    if (m.label.is(0, 1)) return &m;
    // Near an anticrossing the lateral lobe count can blur; fall back to the
    // single-vertical-node mode with the fewest horizontal nodes.
    if (m.label.te && m.label.n == 1 && (!best || m.label.m < best->label.m)) best = &m;
  }
  return best;
}

double te00_index(const WaveguideGeometry& geometry, double wavelength_um,
                  const DesignOptions& options) {
  return cached(geometry, wavelength_um, options, "TE00", [&] {
    const auto grid = rasterize(geometry, wavelength_um, options.raster);
    const auto [lower, upper] = guided_bracket(grid);
    const auto set = solve_modes(grid, 1, clamp_guess(upper, {lower, upper}), options.solver);
    return set.modes.front().n_eff;
  });
}

double te01_index(const WaveguideGeometry& geometry, double wavelength_um, double near,
                  const DesignOptions& options) {
  return cached(geometry, wavelength_um, options, "TE01", [&] {
    const auto grid = rasterize(geometry, wavelength_um, options.raster);
    const auto bracket = guided_bracket(grid);
    auto attempt = [&](int count, double guess) -> std::optional<double> {
      try {
        const auto set = solve_modes(grid, count, clamp_guess(guess, bracket), options.solver);
        if (const Mode* m = find_te01(set.modes)) return m->n_eff;
      } catch (const Error& e) {
        if (e.code() != Errc::no_guided_mode) throw;
      }
      return std::nullopt;
    };
    if (auto n = attempt(options.pump_search_modes, near)) return *n;
    if (auto n = attempt(2 * options.pump_search_modes + 4, bracket.second)) return *n;
    std::ostringstream msg;
    msg << "no guided TE01 mode at " << wavelength_um << " um for h1 = " << geometry.etch_depth_nm
        << " nm, w = " << geometry.top_width_um << " um (lateral cutoff n_eff " << bracket.first
        << ")";
    throw Error(Errc::no_higher_order_mode, msg.str());
  });
}

namespace {

// Brent-style bracketed root (TOMS 748). Stops once |f| drops below
// `f_tolerance` or the bracket shrinks below `x_tolerance`.
template <typename F>
std::pair<double, double> bracketed_root(F&& f, double a, double b, double fa, double fb,
                                         double x_tolerance, double f_tolerance, int max_iter,
                                         int& evaluations) {
  double best_x = std::abs(fa) < std::abs(fb) ? a : b;
  double best_f = std::min(std::abs(fa), std::abs(fb));
  auto g = [&](double x) {
    const double v = f(x);
    ++evaluations;
    if (std::abs(v) < best_f) {
      best_f = std::abs(v);
      best_x = x;
    }
    return v;
  };
  auto tol = [&](double lo, double hi) { return best_f < f_tolerance || hi - lo < x_tolerance; };
  if (best_f < f_tolerance) return {best_x, best_f};
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
  boost::math::tools::toms748_solve(g, a, b, fa, fb, tol, iters);
  return {best_x, best_f};
}

}  // namespace

MpmWidth find_mpm_width(const WaveguideGeometry& base, double signal_wavelength_um,
                        std::pair<double, double> width_bracket_um, const DesignOptions& options) {
  const double pump_um = 0.5 * signal_wavelength_um;
  auto at = [&](double w) {
    WaveguideGeometry g = base;
    g.top_width_um = w;
    return g;
  };
  auto mismatch = [&](double w) {
    const auto g = at(w);
    const double ns = te00_index(g, signal_wavelength_um, options);
    const double np = te01_index(g, pump_um, ns, options);
    return np - ns;
  };

  auto [a, b] = width_bracket_um;
  if (!(a > 0.0 && b > a)) throw Error(Errc::invalid_argument, "width bracket must be 0 < a < b");
  MpmWidth out;
  const double fa = mismatch(a);
  const double fb = mismatch(b);
  out.evaluations = 2;
  if (fa * fb > 0.0) {
    std::ostringstream msg;
    msg << "no MPM sign change in w in [" << a << ", " << b << "] um (f = " << fa << ", " << fb
        << ")";
    throw Error(Errc::bracket_error, msg.str());
  }
  const auto [w, residual] =
      bracketed_root(mismatch, a, b, fa, fb, options.width_tolerance_um,
                     options.index_tolerance, options.max_root_iterations, out.evaluations);
  (void)residual;

  out.width_um = w;
  const auto g = at(w);
  const double ns = te00_index(g, signal_wavelength_um, options);
  const double np = te01_index(g, pump_um, ns, options);
  const Wave pump{pump_um, np};
  const Wave signal{signal_wavelength_um, ns};
  out.result = PhaseMatchResult{phase_mismatch(pump, signal, signal), pump, signal, signal, g};
  return out;
}

double mpm_pump_wavelength(const WaveguideGeometry& geometry,
                           std::pair<double, double> search_range_um,
                           const DesignOptions& options) {
  auto mismatch = [&](double lp) {
    const double ns = te00_index(geometry, 2.0 * lp, options);
    return te01_index(geometry, lp, ns, options) - ns;
  };
  auto [a, b] = search_range_um;
  if (!(a > 0.0 && b > a)) throw Error(Errc::invalid_argument, "search range must be 0 < a < b");
  double fa = 0.0;
  double fb = 0.0;
  try {
    fa = mismatch(a);
    fb = mismatch(b);
  } catch (const Error& e) {
    if (e.code() == Errc::no_higher_order_mode) {
      throw Error(Errc::no_solution_in_range, std::string("TE01 missing in search range: ") + e.what());
    }
    throw;
  }
  if (fa * fb > 0.0) {
    std::ostringstream msg;
    msg << "no MPM pump wavelength in [" << a << ", " << b << "] um";
    throw Error(Errc::no_solution_in_range, msg.str());
  }
  int evaluations = 0;
  // Index tolerance is tightened so the wavelength bracket rule governs.
  const auto [lp, residual] =
      bracketed_root(mismatch, a, b, fa, fb, options.wavelength_tolerance_um, 1e-3 * options.index_tolerance,
                     options.max_root_iterations, evaluations);
  (void)residual;
  return lp;
}

std::vector<LandscapePoint> landscape_sweep(const WaveguideGeometry& base,
                                            double signal_wavelength_um,
                                            std::span<const double> widths_um,
                                            std::span<const double> etch_depths_nm,
                                            const DesignOptions& options, int threads) {
  std::vector<LandscapePoint> out(widths_um.size() * etch_depths_nm.size());
  parallel_for(out.size(), threads, [&](std::size_t k) {
    const std::size_t iw = k / etch_depths_nm.size();
    const std::size_t ih = k % etch_depths_nm.size();
    WaveguideGeometry g = base;
    g.top_width_um = widths_um[iw];
    g.etch_depth_nm = etch_depths_nm[ih];
    LandscapePoint p;
    p.width_um = g.top_width_um;
    p.etch_depth_nm = g.etch_depth_nm;
    p.n_te00_signal = te00_index(g, signal_wavelength_um, options);
    try {
      p.n_te01_pump = te01_index(g, 0.5 * signal_wavelength_um, p.n_te00_signal, options);
    } catch (const Error& e) {
      if (e.code() != Errc::no_higher_order_mode) throw;
      p.n_te01_pump = std::numeric_limits<double>::quiet_NaN();
    }
    out[k] = p;
  });
  return out;
}

std::vector<PumpCurvePoint> pump_wavelength_curve(const WaveguideGeometry& base,
                                                  std::span<const double> widths_um,
                                                  std::pair<double, double> search_range_um,
                                                  const DesignOptions& options, int threads) {
  std::vector<PumpCurvePoint> out(widths_um.size());
  parallel_for(out.size(), threads, [&](std::size_t k) {
    WaveguideGeometry g = base;
    g.top_width_um = widths_um[k];
    double lp = std::numeric_limits<double>::quiet_NaN();
    try {
      lp = mpm_pump_wavelength(g, search_range_um, options);
    } catch (const Error& e) {
      if (e.code() != Errc::no_solution_in_range && e.code() != Errc::no_higher_order_mode) throw;
    }
    out[k] = {g.top_width_um, lp};
  });
  return out;
}

}  // namespace mpmwg
