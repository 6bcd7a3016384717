#include "mpmwg/nonlinear_coupling.hpp"

#include <cmath>
#include <numbers>

#include "mpmwg/errors.hpp"
#include "mpmwg/phase_matching.hpp"

namespace mpmwg {

namespace {

constexpr double kDenominatorFloor = 1e-12;
constexpr double kEpsilon0 = 8.8541878128e-12;  // F/m
constexpr double kSpeedOfLight = 299792458.0;  // m/s

double zeta_from(double num, double sig, double pump) {
  return num / (std::cbrt(sig * sig) * std::cbrt(pump));
}

}  // namespace

double OverlapResult::recompute() const {
  return zeta_from(numerator, std::abs(signal_self_term), std::abs(pump_self_term));
}

OverlapResult overlap_factor(const Mode& signal, const Mode& pump,
                             std::span<const std::int8_t> d_nor) {
  if (!(signal.shape == pump.shape) || d_nor.size() != signal.field.size()) {
    throw Error(Errc::grid_mismatch, "overlap factor needs both modes and d_Nor on one grid");
  }
  const double da = signal.shape.cell_area_um2();
  double num = 0.0;
  double sig = 0.0;
  double pmp = 0.0;
  bool positive = false;
  bool negative = false;
  for (std::size_t k = 0; k < d_nor.size(); ++k) {
    const double es = signal.field[k];
    const double ep = pump.field[k];
    const double d = d_nor[k];
    positive |= d_nor[k] > 0;
    negative |= d_nor[k] < 0;
    num += d * es * es * ep;
    sig += es * es * es;
    pmp += ep * ep * d * ep;
  }
  OverlapResult r;
  r.numerator = num * da;
  r.signal_self_term = sig * da;
  r.pump_self_term = pmp * da;
  r.variant = positive && negative ? LayerVariant::dual_layer : LayerVariant::single_layer;

  const bool degenerate =
      std::abs(r.signal_self_term) < kDenominatorFloor || std::abs(r.pump_self_term) < kDenominatorFloor;
  if (degenerate) {
    if (std::abs(r.numerator) < kDenominatorFloor) {
      r.zeta = 0.0;
      return r;
    }
    throw Error(Errc::degenerate_denominator,
                "overlap denominator vanishes (signal term " + std::to_string(r.signal_self_term) +
                    ", pump term " + std::to_string(r.pump_self_term) + ")");
  }
  r.zeta = r.recompute();
  return r;
}

OverlapResult overlap_factor(const Mode& signal, const Mode& pump, const CrossSectionGrid& grid) {
  if (!(grid.shape == signal.shape)) {
    throw Error(Errc::grid_mismatch, "d_Nor grid differs from the mode grid");
  }
  return overlap_factor(signal, pump, grid.nonlinearity_sign);
}

double enhancement_ratio(double zeta_dual, double zeta_single) {
  if (zeta_single == 0.0) throw Error(Errc::division_by_zero, "single-layer overlap factor is zero");
  const double r = zeta_dual / zeta_single;
  return r * r;
}

double predict_relative_pgr(const PgrInputs& in) {
  if (!(in.effective_area_um2 > 0.0)) {
    throw Error(Errc::invalid_argument, "effective area must be positive");
  }
  const double sinc2 = sinc_squared(0.5 * in.delta_k_per_um * in.length_mm * 1e3);
  return in.length_mm * in.length_mm * in.pump_power_mw * in.d_eff_pm_per_v * in.d_eff_pm_per_v *
         in.zeta * in.zeta / in.effective_area_um2 * sinc2;
}

double PgrCalibration::pair_rate_hz(const PgrInputs& in) const {
  PgrInputs per_mw = reference;
  per_mw.pump_power_mw = 1.0;
  const double ref = predict_relative_pgr(per_mw);
  if (ref == 0.0) throw Error(Errc::division_by_zero, "reference design has zero predicted rate");
  return rate_ghz_per_mw * 1e9 * predict_relative_pgr(in) / ref;
}

EfficiencyPrediction predict_efficiency(const PgrInputs& in, std::optional<double> normalized_shg) {
  EfficiencyPrediction p;
  p.inputs = in;
  p.sinc2 = sinc_squared(0.5 * in.delta_k_per_um * in.length_mm * 1e3);
  p.relative_pgr = predict_relative_pgr(in);
  p.normalized_shg_percent_per_w_cm2 = normalized_shg.value_or(0.0);
  return p;
}

double shg_normalized_efficiency_from_measurement(double p_sh_w, double p_fh_w,
                                                  double transmission_sh, double transmission_fh,
                                                  double length_cm,
                                                  std::optional<double> fh_loss_db_per_cm) {
  if (!(transmission_sh > 0.0 && transmission_sh <= 1.0) ||
      !(transmission_fh > 0.0 && transmission_fh <= 1.0)) {
    throw Error(Errc::invalid_argument, "transmissions must lie in (0, 1]");
  }
  if (!(length_cm > 0.0)) throw Error(Errc::invalid_argument, "length must be positive");
  if (p_sh_w < 0.0 || !(p_fh_w > 0.0)) {
    throw Error(Errc::invalid_argument, "need P_SH >= 0 and P_FH > 0");
  }
  double length = length_cm;
  if (fh_loss_db_per_cm && *fh_loss_db_per_cm > 0.0) {
    const double alpha = *fh_loss_db_per_cm * std::numbers::ln10 / 10.0;  // 1/cm
    length = (1.0 - std::exp(-alpha * length_cm)) / alpha;
  }
  const double on_chip_fh = p_fh_w * length / transmission_fh;
  return 100.0 * (p_sh_w / transmission_sh) / (on_chip_fh * on_chip_fh);
}

double predict_shg_efficiency(const Mode& signal_mode, const Mode& pump_mode, double zeta,
                              double fundamental_wavelength_um, double d_eff_pm_per_v) {
  const double d = d_eff_pm_per_v * 1e-12;
  const double lambda = fundamental_wavelength_um * 1e-6;
  const double area = signal_mode.effective_area_um2 * 1e-12;
  const double n_fh = signal_mode.n_eff;
  const double n_sh = pump_mode.n_eff;
  const double eta_per_w_m2 = 8.0 * std::numbers::pi * std::numbers::pi * d * d * zeta * zeta /
                              (kEpsilon0 * kSpeedOfLight * n_fh * n_fh * n_sh * lambda * lambda * area);
  return 100.0 * eta_per_w_m2 * 1e-4;
}

double propagation_loss(double alpha_ref_db_per_cm, double lambda_ref_um, double lambda_um) {
  if (!(lambda_ref_um > 0.0) || !(lambda_um > 0.0)) {
    throw Error(Errc::invalid_argument, "wavelengths must be positive");
  }
  const double r = lambda_ref_um / lambda_um;
  return alpha_ref_db_per_cm * r * r;
}

}  // namespace mpmwg
