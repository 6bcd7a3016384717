#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include <unistd.h>

#include "mpmwg/phase_matching.hpp"
#include "test_support.hpp"

using namespace mpmwg;

namespace {

struct ScratchCache {
  std::filesystem::path path =
      std::filesystem::temp_directory_path() / ("mpmwg_test_cache_" + std::to_string(::getpid()));
  ~ScratchCache() { std::filesystem::remove_all(path); }
};

DesignOptions coarse_options() {
  static const ScratchCache scratch;
  static const auto cache = std::make_shared<ModeIndexCache>(scratch.path);
  DesignOptions o;
  o.raster.spacing_nm = 20.0;
  o.cache = cache;
  return o;
}

// Full width at half maximum of sinc^2(dk L / 2) in dk, by bisection on the
// falling edge.
double fwhm(double length_mm) {
  double lo = 0.0;
  double hi = 2.0 * std::numbers::pi / (length_mm * 1e3);
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double dk[] = {mid};
    (tuning_curve(dk, length_mm)[0] > 0.5 ? lo : hi) = mid;
  }
  return 2.0 * lo;
}

}  // namespace

TEST_CASE("phase mismatch arithmetic") {
  CHECK(phase_mismatch({0.765, 2.0}, {1.53, 2.0}, {1.53, 2.0}) == doctest::Approx(0.0).epsilon(1e-15));
  const double expected = 2.0 * (2.0 * std::numbers::pi * 1.99 / 1.53) - 2.0 * std::numbers::pi * 2.00 / 0.765;
  const double dk = phase_mismatch({0.765, 2.00}, {1.53, 1.99}, {1.53, 1.99});
  CHECK(dk == doctest::Approx(expected).epsilon(1e-12));
  CHECK(dk == doctest::Approx(-0.08211).epsilon(1e-3));
  const double li = 1.0 / (1.0 / 0.75 - 1.0 / 1.45);
  CHECK(phase_mismatch({0.75, 2.0}, {1.45, 1.9}, {li, 1.9}) ==
        doctest::Approx(2.0 * std::numbers::pi * (1.9 / 1.45 + 1.9 / li - 2.0 / 0.75)).epsilon(1e-12));
  CHECK_ERRC(phase_mismatch({0.765, 2.0}, {1.53, 2.0}, {1.54, 2.0}), Errc::energy_conservation_violated);
}

TEST_CASE("tuning curve") {
  const double l = 5.2;
  const double zero[] = {0.0};
  CHECK(tuning_curve(zero, l)[0] == doctest::Approx(1.0));
  const double null[] = {2.0 * std::numbers::pi / (l * 1e3)};
  CHECK(tuning_curve(null, l)[0] == doctest::Approx(0.0).epsilon(1e-20));
  CHECK(fwhm(2.0 * l) == doctest::Approx(0.5 * fwhm(l)).epsilon(0.01));

  std::vector<double> dk;
  for (int k = -200; k <= 200; ++k) dk.push_back(k * 1e-4);
  const auto curve = tuning_curve(dk, l);
  for (std::size_t k = 0; k < dk.size(); ++k) {
    CHECK(curve[k] >= 0.0);
    CHECK(curve[k] <= 1.0);
    CHECK(curve[k] == doctest::Approx(curve[dk.size() - 1 - k]).epsilon(1e-14));
  }
}

TEST_CASE("same-mode pump and signal cannot phase match") {
  const auto o = coarse_options();
  WaveguideGeometry g;
  const double ns = te00_index(g, 1.53, o);
  const double np = te00_index(g, 0.765, o);
  CHECK(np > ns);
  CHECK(phase_mismatch({0.765, np}, {1.53, ns}, {1.53, ns}) < 0.0);
}

TEST_CASE("mode-phase-matched width at h1 = 460 nm") {
  const auto o = coarse_options();
  WaveguideGeometry g;
  const auto mpm = find_mpm_width(g, 1.53, {1.35, 1.60}, o);
  CHECK(mpm.width_um > 1.35);
  CHECK(mpm.width_um < 1.60);
  CHECK(std::abs(mpm.result.delta_k_per_um) < 1e-4);
  CHECK(mpm.result.recompute_delta_k() == doctest::Approx(mpm.result.delta_k_per_um).epsilon(1e-12));
  CHECK(mpm.result.signal.wavelength_um == 2.0 * mpm.result.pump.wavelength_um);
  CHECK(mpm.result.geometry.top_width_um == mpm.width_um);

  SUBCASE("pump wavelength at the matched width returns the design pump") {
    auto at = g;
    at.top_width_um = mpm.width_um;
    CHECK(mpm_pump_wavelength(at, {0.74, 0.79}, o) == doctest::Approx(0.765).epsilon(2e-4));
  }
  SUBCASE("cached reruns reproduce the root") {
    const auto again = find_mpm_width(g, 1.53, {1.35, 1.60}, o);
    CHECK(again.width_um == mpm.width_um);
    CHECK(again.result.delta_k_per_um == mpm.result.delta_k_per_um);
  }
}

TEST_CASE("phase-matching locus over etch depth") {
  const auto o = coarse_options();
  double previous = 0.0;
  for (double h1 : {420.0, 460.0, 500.0}) {
    WaveguideGeometry g;
    g.etch_depth_nm = h1;
    const auto mpm = find_mpm_width(g, 1.53, {1.35, 1.65}, o);
    CHECK(std::abs(mpm.result.pump.n_eff - mpm.result.signal.n_eff) <= o.index_tolerance);
    CHECK(mpm.width_um > previous);
    previous = mpm.width_um;
  }
}

TEST_CASE("pump wavelength falls monotonically with width") {
  const auto o = coarse_options();
  double previous = 1.0;
  for (double w : {1.3, 1.4, 1.5, 1.6}) {
    WaveguideGeometry g;
    g.top_width_um = w;
    const double lp = mpm_pump_wavelength(g, {0.70, 0.84}, o);
    CHECK(lp < previous);
    previous = lp;
  }
}

TEST_CASE("pump curve marks widths without a solution") {
  const auto o = coarse_options();
  const double widths[] = {1.3, 1.5};
  const auto curve = pump_wavelength_curve(WaveguideGeometry{}, widths, {0.74, 0.79}, o);
  REQUIRE(curve.size() == 2);
  CHECK(curve[0].width_um == 1.3);
  CHECK(std::isnan(curve[0].pump_wavelength_um));
  WaveguideGeometry g;
  g.top_width_um = 1.5;
  CHECK(curve[1].pump_wavelength_um == doctest::Approx(mpm_pump_wavelength(g, {0.74, 0.79}, o)).epsilon(1e-9));
}

TEST_CASE("phase-matching errors") {
  const auto o = coarse_options();
  WaveguideGeometry shallow;
  shallow.etch_depth_nm = 350.0;
  CHECK_ERRC(find_mpm_width(shallow, 1.53, {1.35, 1.60}, o), Errc::no_higher_order_mode);
  WaveguideGeometry g;
  CHECK_ERRC(find_mpm_width(g, 1.53, {1.35, 1.40}, o), Errc::bracket_error);
  CHECK_ERRC(mpm_pump_wavelength(g, {0.70, 0.72}, o), Errc::no_solution_in_range);
  CHECK_ERRC(find_mpm_width(g, 1.53, {1.6, 1.35}, o), Errc::invalid_argument);
}

TEST_CASE("landscape sweep and cache keys") {
  const auto o = coarse_options();
  WaveguideGeometry g;
  const double widths[] = {1.40, 1.55};
  const double etches[] = {460.0};
  const auto pts = landscape_sweep(g, 1.53, widths, etches, o, 2);
  REQUIRE(pts.size() == 2);
  // TE01 overtakes TE00 between the two widths.
  CHECK(pts[0].n_te01_pump > pts[0].n_te00_signal);
  CHECK(pts[1].n_te01_pump < pts[1].n_te00_signal);

  const auto k1 = cache_key(g, 1.53, o, "TE00");
  CHECK(k1 == cache_key(g, 1.53, o, "TE00"));
  CHECK(k1 != cache_key(g, 1.53, o, "TE01"));
  CHECK(k1 != cache_key(g, 0.765, o, "TE00"));
  auto other = o;
  other.raster.spacing_nm = 10.0;
  CHECK(k1 != cache_key(g, 1.53, other, "TE00"));
  CHECK(o.cache->lookup(k1).has_value());
}
