#include <doctest.h>

#include <cmath>

#include "mpmwg/nonlinear_coupling.hpp"
#include "mpmwg/phase_matching.hpp"
#include "test_support.hpp"

using namespace mpmwg;

namespace {

struct Design {
  WaveguideGeometry geometry;
  CrossSectionGrid signal_grid = rasterize(geometry, 1.53, {.spacing_nm = 20.0});
  CrossSectionGrid pump_grid = rasterize(geometry, 0.765, {.spacing_nm = 20.0});
  Mode signal = solve_modes(signal_grid, 1, 2.1).modes.front();
  Mode pump = *find_te01(solve_modes(pump_grid, 4, signal.n_eff).modes);
};

const Design& design() {
  static const Design d;
  return d;
}

Mode synthetic(const GridShape& s, auto&& f) {
  Mode m;
  m.shape = s;
  m.field.resize(s.size());
  for (std::size_t i = 0; i < s.nh; ++i) {
    for (std::size_t j = 0; j < s.nv; ++j) m.field[s.index(i, j)] = f(s.h(i), s.v(j));
  }
  return m;
}

// Grid symmetric about v = 0.3 (the layer interface of a 600 nm film).
const GridShape kShape{.nh = 61, .nv = 60, .spacing_um = 0.02, .h_origin_um = -0.6, .v_origin_um = -0.29};

}  // namespace

TEST_CASE("antisymmetric pump against uniform d gives zeta = 0") {
  auto blob = [](double h, double v) { return std::exp(-h * h / 0.1 - (v - 0.3) * (v - 0.3) / 0.02); };
  const auto s = synthetic(kShape, blob);
  const auto p = synthetic(kShape, [&](double h, double v) { return (v - 0.3) * blob(h, v); });
  const std::vector<std::int8_t> d(kShape.size(), 1);
  const auto r = overlap_factor(s, p, d);
  CHECK(std::abs(r.numerator) < 1e-12);
  CHECK(r.zeta == 0.0);
  CHECK(r.variant == LayerVariant::single_layer);
}

TEST_CASE("degenerate denominator and grid mismatch") {
  auto blob = [](double h, double v) { return std::exp(-h * h / 0.1 - (v - 0.3) * (v - 0.3) / 0.02); };
  const auto odd_signal = synthetic(kShape, [&](double h, double v) { return h * blob(h, v); });
  const auto pump = synthetic(kShape, blob);
  const std::vector<std::int8_t> d(kShape.size(), 1);
  CHECK_ERRC(overlap_factor(odd_signal, pump, d), Errc::degenerate_denominator);

  auto other = kShape;
  other.nh += 2;
  const auto moved = synthetic(other, blob);
  CHECK_ERRC(overlap_factor(moved, pump, d), Errc::grid_mismatch);
  const std::vector<std::int8_t> short_d(kShape.size() - 1, 1);
  CHECK_ERRC(overlap_factor(pump, pump, short_d), Errc::grid_mismatch);
}

TEST_CASE("design-point overlap on a 20 nm grid") {
  const auto& d = design();
  REQUIRE(d.pump.label.n == 1);
  const auto dual = overlap_factor(d.signal, d.pump, d.pump_grid);
  const auto single = overlap_factor(d.signal, d.pump, with_uniform_nonlinearity(d.pump_grid));
  CHECK(dual.variant == LayerVariant::dual_layer);
  CHECK(single.variant == LayerVariant::single_layer);
  CHECK(std::abs(dual.zeta) >= std::abs(single.zeta));
  CHECK(dual.recompute() == doctest::Approx(dual.zeta).epsilon(1e-14));
  CHECK(single.recompute() == doctest::Approx(single.zeta).epsilon(1e-14));
  // Signal self term does not depend on the sign map.
  CHECK(dual.signal_self_term == doctest::Approx(single.signal_self_term).epsilon(1e-14));

  SUBCASE("relative rate follows the enhancement ratio") {
    PgrInputs a{.zeta = dual.zeta, .effective_area_um2 = d.signal.effective_area_um2};
    PgrInputs b = a;
    b.zeta = single.zeta;
    CHECK(predict_relative_pgr(a) / predict_relative_pgr(b) ==
          doctest::Approx(enhancement_ratio(dual.zeta, single.zeta)).epsilon(1e-12));
  }

  SUBCASE("theoretical SHG efficiency scales as zeta squared") {
    const double eta = predict_shg_efficiency(d.signal, d.pump, dual.zeta, 1.53);
    CHECK(eta > 0.0);
    CHECK(predict_shg_efficiency(d.signal, d.pump, 0.0, 1.53) == 0.0);
    CHECK(predict_shg_efficiency(d.signal, d.pump, 0.5 * dual.zeta, 1.53) == doctest::Approx(eta / 4.0));
  }
}

TEST_CASE("enhancement ratio") {
  CHECK(enhancement_ratio(0.81, 0.21) == doctest::Approx(14.877).epsilon(1e-4));
  CHECK(enhancement_ratio(0.37, 0.37) == doctest::Approx(1.0));
  CHECK(enhancement_ratio(0.9, 0.3) == doctest::Approx(9.0));
  CHECK_ERRC(enhancement_ratio(0.8, 0.0), Errc::division_by_zero);
}

TEST_CASE("relative pair-generation rate scaling") {
  const PgrInputs base{.length_mm = 5.2, .pump_power_mw = 1.0, .zeta = 0.8, .effective_area_um2 = 0.75};
  auto longer = base;
  longer.length_mm *= 2.0;
  CHECK(predict_relative_pgr(longer) == doctest::Approx(4.0 * predict_relative_pgr(base)));
  auto stronger = base;
  stronger.pump_power_mw *= 2.0;
  CHECK(predict_relative_pgr(stronger) == doctest::Approx(2.0 * predict_relative_pgr(base)));
  auto detuned = base;
  detuned.delta_k_per_um = 2.0 * std::numbers::pi / (base.length_mm * 1e3);
  CHECK(predict_relative_pgr(detuned) == doctest::Approx(0.0).epsilon(1e-20));
  auto bad = base;
  bad.effective_area_um2 = 0.0;
  CHECK_ERRC(predict_relative_pgr(bad), Errc::invalid_argument);

  const PgrCalibration cal{.rate_ghz_per_mw = 41.77, .reference = base};
  CHECK(cal.pair_rate_hz(base) == doctest::Approx(41.77e9));
  CHECK(cal.pair_rate_hz(stronger) == doctest::Approx(2.0 * 41.77e9));
}

TEST_CASE("measured SHG efficiency") {
  const double t_sh = ShgMeasurementDefaults::transmission_sh;
  const double t_fh = ShgMeasurementDefaults::transmission_fh;
  const double l = ShgMeasurementDefaults::length_cm;
  const double p_fh = 1e-3;
  // Invert eta = (P_SH / T_SH) / (P_FH L / T_FH)^2 for the power that yields 2976 %/W/cm^2.
  const double p_sh = 2976.0 / 100.0 * std::pow(p_fh * l / t_fh, 2) * t_sh;
  CHECK(shg_normalized_efficiency_from_measurement(p_sh, p_fh) == doctest::Approx(2976.0).epsilon(1e-13));
  CHECK(shg_normalized_efficiency_from_measurement(0.0, p_fh) == 0.0);
  CHECK(shg_normalized_efficiency_from_measurement(p_sh, 3.0 * p_fh) ==
        doctest::Approx(2976.0 / 9.0).epsilon(1e-13));
  // Loss shortens the effective length and raises the inferred efficiency.
  CHECK(shg_normalized_efficiency_from_measurement(p_sh, p_fh, t_sh, t_fh, l, 1.8) > 2976.0);
  CHECK(shg_normalized_efficiency_from_measurement(p_sh, p_fh, t_sh, t_fh, l, 0.0) ==
        doctest::Approx(2976.0).epsilon(1e-13));
  CHECK_ERRC(shg_normalized_efficiency_from_measurement(p_sh, p_fh, 0.0, t_fh, l), Errc::invalid_argument);
  CHECK_ERRC(shg_normalized_efficiency_from_measurement(p_sh, p_fh, t_sh, t_fh, 0.0), Errc::invalid_argument);
}

TEST_CASE("propagation loss scales as 1/lambda^2") {
  CHECK(propagation_loss(1.8, 1.53, 1.53) == doctest::Approx(1.8));
  CHECK(propagation_loss(1.8, 1.53, 0.765) == doctest::Approx(7.2));
  CHECK(propagation_loss(0.0, 1.53, 0.9) == 0.0);
  CHECK_ERRC(propagation_loss(1.8, 0.0, 0.9), Errc::invalid_argument);
}
