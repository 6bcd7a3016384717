#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "mpmwg/geometry.hpp"

namespace mpmwg {

enum class Formulation {
  // Horizontal field component with the interface jump of eps*E across
  // vertical material boundaries. Non-symmetric operator.
  semi_vectorial_te,
  // Plain Helmholtz operator; symmetric, modes exactly orthogonal.
  scalar,
};

struct SolverOptions {
  Formulation formulation = Formulation::semi_vectorial_te;
  // Stop once successive Ritz values change by less than this (relative) ...
  double eigenvalue_tolerance = 1e-10;
  // ... and every returned mode has ||A v - lambda v|| / |lambda| below this.
  double residual_tolerance = 1e-8;
  // Arnoldi basis size per restart cycle, and number of cycles.
  int krylov_dimension = 40;
  int max_restarts = 12;
  // Convergence is checked every this many basis vectors.
  int check_interval = 4;
  // The basis holds at least count + 2 * guard_vectors vectors.
  int guard_vectors = 4;
  std::uint64_t seed = 0x5eed5eedULL;
};

struct SolveDiagnostics {
  // Applications of the shifted inverse (one sparse solve each).
  int iterations = 0;
  double max_relative_residual = 0.0;
  double last_eigenvalue_change = 0.0;
  double guided_lower_n_eff = 0.0;
  double guided_upper_n_eff = 0.0;
  std::size_t unknowns = 0;
  double factorization_seconds = 0.0;
  double iteration_seconds = 0.0;
};

struct ModeLabel {
  int m = 0;  // sign changes along the horizontal cut
  int n = 0;  // sign changes along the vertical cut
  bool te = true;

  bool is(int hm, int vn) const { return te && m == hm && n == vn; }
  std::string to_string() const;
  bool operator==(const ModeLabel&) const = default;
};

struct Mode {
  double n_eff = 0.0;
  double wavelength_um = 0.0;
  GridShape shape;
  // Dominant transverse (horizontal) field component, normalised so that
  // sum(E^2) * cell area = 1 and positive at its largest-magnitude cell.
  std::vector<double> field;
  ModeLabel label;
  double effective_area_um2 = 0.0;
  // Share of |E|^2 in the solved component. The semi-vectorial model carries a
  // single component, so this is 1 for every solved mode.
  double polarization_fraction = 1.0;
  double relative_residual = 0.0;

  double at(std::size_t i, std::size_t j) const { return field[shape.index(i, j)]; }
};

struct ModeSet {
  std::vector<Mode> modes;
  SolveDiagnostics diagnostics;
};

// Eigen-operator whose eigenvalues are beta^2 = (k0 n_eff)^2 in um^-2,
// with Dirichlet walls at the grid edge.
Eigen::SparseMatrix<double> assemble_operator(const CrossSectionGrid& grid,
                                              Formulation formulation);

// Guided-mode bracket (lower, upper) in n_eff. The lower edge is the largest
// of the substrate index, the cladding index and the fundamental mode index of
// the bare slab at the grid edge: anything below it leaks sideways.
std::pair<double, double> guided_bracket(const CrossSectionGrid& grid);

/// Guided eigenmodes of `grid` by restarted shift-invert Arnoldi around
/// (k0 * n_eff_guess)^2. Returns up to `count` guided modes nearest the guess,
/// sorted by descending n_eff.
///
/// Throws Errc::no_guided_mode if none of the converged modes is guided and
/// Errc::convergence_failure if the iteration stalls.
ModeSet solve_modes(const CrossSectionGrid& grid, int count, double n_eff_guess,
                    const SolverOptions& options = {});

ModeLabel classify_mode(const Mode& mode);

double effective_area(const Mode& mode);
double effective_area(const GridShape& shape, std::span<const double> field);

struct Point2 {
  double h_um = 0.0;
  double v_um = 0.0;
};

// |E|^2-weighted centroid of the mode.
Point2 intensity_centroid(const Mode& mode);

// Normalised Gaussian exp(-r^2 / w^2) sampled on the grid (unit L2 norm on the grid).
std::vector<double> gaussian_field(const GridShape& shape, Point2 centre, double radius_um);

// -10 log10 |<E, G>|^2 with both fields normalised on the grid; always >= 0.
double fiber_coupling_loss_db(const Mode& mode, std::span<const double> fiber_field);
// Gaussian of 1/e^2 intensity radius `spot_radius_um`, centred at `centre`
// (defaults to the mode's intensity centroid).
double fiber_coupling_loss_db(const Mode& mode, double spot_radius_um,
                              std::optional<Point2> centre = std::nullopt);

// Spot radius on the large-spot branch (wider than the best-match spot) that
// gives `target_loss_db` for `mode`.
double calibrate_spot_radius(const Mode& mode, double target_loss_db,
                             std::optional<Point2> centre = std::nullopt);

void write_mode_csv(const Mode& mode, const std::filesystem::path& path);

}  // namespace mpmwg
