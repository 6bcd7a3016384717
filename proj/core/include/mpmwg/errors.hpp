#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mpmwg {

enum class Errc {
  invalid_argument,
  out_of_transparency_window,
  invalid_geometry,
  no_guided_mode,
  convergence_failure,
  energy_conservation_violated,
  no_higher_order_mode,
  bracket_error,
  no_solution_in_range,
  grid_mismatch,
  degenerate_denominator,
  division_by_zero,
  zero_coincidence,
  zero_heralded_coincidence,
  insufficient_far_delay_statistics,
  regime_violation,
  config_error,
  io_error,
};

std::string_view to_string(Errc code) noexcept;

// Every domain failure surfaces as an Error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mpmwg
