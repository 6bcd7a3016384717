#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "mpmwg/geometry.hpp"
#include "mpmwg/materials.hpp"
#include "mpmwg/mode_solver.hpp"

namespace mpmwg {

enum class LayerVariant { single_layer, dual_layer };

/// Modal overlap factor of a TE00 signal and a TE01 pump weighted by the
/// sign profile of chi(2):
///
///   zeta = I_num / ( |I_s|^(2/3) |I_p|^(1/3) )
///   I_num = sum d E_s E_s E_p dA,  I_s = sum |E_s|^2 E_s dA,  I_p = sum |E_p|^2 d E_p dA
///
/// Midpoint quadrature on the shared grid. Fields are real.
struct OverlapResult {
  double zeta = 0.0;
  double numerator = 0.0;
  double signal_self_term = 0.0;
  double pump_self_term = 0.0;
  LayerVariant variant = LayerVariant::single_layer;

  double recompute() const;
};

// Throws Errc::grid_mismatch for modes or sign maps on different grids and
// Errc::degenerate_denominator when a denominator integral is below 1e-12
// while the numerator is not (a vanishing numerator yields zeta = 0).
OverlapResult overlap_factor(const Mode& signal, const Mode& pump,
                             std::span<const std::int8_t> d_nor);
OverlapResult overlap_factor(const Mode& signal, const Mode& pump, const CrossSectionGrid& grid);

// (zeta_dual / zeta_single)^2.
double enhancement_ratio(double zeta_dual, double zeta_single);

struct PgrInputs {
  double length_mm = 5.2;
  double pump_power_mw = 1.0;
  double d_eff_pm_per_v = NonlinearCoefficients::d33_pm_per_v;
  double zeta = 0.0;
  double effective_area_um2 = 1.0;
  double delta_k_per_um = 0.0;
};

// L^2 P d^2 zeta^2 / A_eff * sinc^2(dk L / 2) in mm^2 mW (pm/V)^2 / um^2.
double predict_relative_pgr(const PgrInputs& in);

/// Absolute pair rate from the proportionality, anchored at a reference
/// design whose rate per unit pump power is known.
struct PgrCalibration {
  double rate_ghz_per_mw = 41.77;
  PgrInputs reference;

  double pair_rate_hz(const PgrInputs& in) const;
};

struct EfficiencyPrediction {
  double relative_pgr = 0.0;
  double sinc2 = 1.0;
  double normalized_shg_percent_per_w_cm2 = 0.0;
  PgrInputs inputs;
};

EfficiencyPrediction predict_efficiency(const PgrInputs& in,
                                        std::optional<double> normalized_shg = std::nullopt);

struct ShgMeasurementDefaults {
  static constexpr double transmission_sh = 0.35;
  static constexpr double transmission_fh = 0.30;
  static constexpr double length_cm = 0.52;
};

/// eta = (P_SH / T_SH) / (P_FH L / T_FH)^2 in %/W/cm^2 (powers in W, L in cm).
/// With `fh_loss_db_per_cm` set, L is replaced by the loss-weighted effective
/// length (1 - exp(-a L)) / a of the fundamental.
double shg_normalized_efficiency_from_measurement(
    double p_sh_w, double p_fh_w, double transmission_sh = ShgMeasurementDefaults::transmission_sh,
    double transmission_fh = ShgMeasurementDefaults::transmission_fh,
    double length_cm = ShgMeasurementDefaults::length_cm,
    std::optional<double> fh_loss_db_per_cm = std::nullopt);

/// Phase-matched normalised SHG efficiency in %/W/cm^2,
///
///   eta = 8 pi^2 d_eff^2 zeta^2 / (eps0 c n_FH^2 n_SH lambda_FH^2 A_eff),
///
/// with n taken as the modal effective indices and A_eff the effective area
/// of the fundamental (signal) mode.
double predict_shg_efficiency(const Mode& signal_mode, const Mode& pump_mode, double zeta,
                              double fundamental_wavelength_um,
                              double d_eff_pm_per_v = NonlinearCoefficients::d33_pm_per_v);

// alpha_ref * (lambda_ref / lambda)^2, dB/cm.
double propagation_loss(double alpha_ref_db_per_cm, double lambda_ref_um, double lambda_um);

}  // namespace mpmwg
