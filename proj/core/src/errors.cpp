#include "mpmwg/errors.hpp"

namespace mpmwg {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::out_of_transparency_window: return "OutOfTransparencyWindow";
    case Errc::invalid_geometry: return "InvalidGeometry";
    case Errc::no_guided_mode: return "NoGuidedMode";
    case Errc::convergence_failure: return "ConvergenceFailure";
    case Errc::energy_conservation_violated: return "EnergyConservationViolated";
    case Errc::no_higher_order_mode: return "NoHigherOrderMode";
    case Errc::bracket_error: return "BracketError";
    case Errc::no_solution_in_range: return "NoSolutionInRange";
    case Errc::grid_mismatch: return "GridMismatch";
    case Errc::degenerate_denominator: return "DegenerateDenominator";
    case Errc::division_by_zero: return "DivisionByZero";
    case Errc::zero_coincidence: return "ZeroCoincidence";
    case Errc::zero_heralded_coincidence: return "ZeroHeraldedCoincidence";
    case Errc::insufficient_far_delay_statistics: return "InsufficientFarDelayStatistics";
    case Errc::regime_violation: return "RegimeViolation";
    case Errc::config_error: return "ConfigError";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

}  // namespace mpmwg
