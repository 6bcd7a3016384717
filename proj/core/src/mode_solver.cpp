#include "mpmwg/mode_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#if MPMWG_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include "mpmwg/errors.hpp"

namespace mpmwg {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

double wavenumber(double wavelength_um) { return 2.0 * std::numbers::pi / wavelength_um; }

#if MPMWG_HAVE_UMFPACK
using ShiftedFactorization = Eigen::UmfPackLU<SpMat>;
#else
using ShiftedFactorization = Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>;
#endif

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Fundamental eigenvalue of the 1-D vertical operator of grid column `i`.
double column_fundamental_n_eff(const CrossSectionGrid& grid, std::size_t i) {
  const auto& s = grid.shape;
  const double k0 = wavenumber(grid.wavelength_um);
  const double inv_d2 = 1.0 / (s.spacing_um * s.spacing_um);
  Eigen::VectorXd diag(static_cast<Eigen::Index>(s.nv));
  Eigen::VectorXd sub = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(s.nv) - 1, inv_d2);
  for (std::size_t j = 0; j < s.nv; ++j) {
    diag[static_cast<Eigen::Index>(j)] = -2.0 * inv_d2 + k0 * k0 * grid.eps(i, j);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  return top > 0.0 ? std::sqrt(top) / k0 : 0.0;
}

void normalise_in_place(const GridShape& shape, std::vector<double>& field) {
  double norm2 = 0.0;
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t k = 0; k < field.size(); ++k) {
    norm2 += field[k] * field[k];
    if (std::abs(field[k]) > best) {
      best = std::abs(field[k]);
      arg = k;
    }
  }
  double scale = 1.0 / std::sqrt(norm2 * shape.cell_area_um2());
  if (field[arg] < 0.0) scale = -scale;
  for (double& v : field) v *= scale;
}

}  // namespace

std::string ModeLabel::to_string() const {
  std::ostringstream os;
  if (te) {
    os << "TE" << m << n;
  } else {
    os << "other(" << m << ',' << n << ')';
  }
  return os.str();
}

SpMat assemble_operator(const CrossSectionGrid& grid, Formulation formulation) {
  const auto& s = grid.shape;
  const double k0 = wavenumber(grid.wavelength_um);
  const double inv_d2 = 1.0 / (s.spacing_um * s.spacing_um);
  const auto n = static_cast<Eigen::Index>(s.size());

  std::vector<Triplet> triplets;
  triplets.reserve(s.size() * 5);
  for (std::size_t i = 0; i < s.nh; ++i) {
    for (std::size_t j = 0; j < s.nv; ++j) {
      const auto row = static_cast<Eigen::Index>(s.index(i, j));
      const double e = grid.eps(i, j);
      double diag = k0 * k0 * e - 2.0 * inv_d2;

      if (formulation == Formulation::semi_vectorial_te) {
        // d/dh [ (1/eps) d/dh (eps E) ] with 1/eps at the cell face taken
        // as the inverse of the mean permittivity.
        if (i + 1 < s.nh) {
          const double en = grid.eps(i + 1, j);
          const double t = 2.0 / (e + en) * inv_d2;
          triplets.emplace_back(row, static_cast<Eigen::Index>(s.index(i + 1, j)), t * en);
          diag -= t * e;
        } else {
          diag -= inv_d2;
        }
        if (i > 0) {
          const double en = grid.eps(i - 1, j);
          const double t = 2.0 / (e + en) * inv_d2;
          triplets.emplace_back(row, static_cast<Eigen::Index>(s.index(i - 1, j)), t * en);
          diag -= t * e;
        } else {
          diag -= inv_d2;
        }
      } else {
        diag -= 2.0 * inv_d2;
        if (i + 1 < s.nh) {
          triplets.emplace_back(row, static_cast<Eigen::Index>(s.index(i + 1, j)), inv_d2);
        }
        if (i > 0) triplets.emplace_back(row, static_cast<Eigen::Index>(s.index(i - 1, j)), inv_d2);
      }
      if (j + 1 < s.nv) triplets.emplace_back(row, row + 1, inv_d2);
      if (j > 0) triplets.emplace_back(row, row - 1, inv_d2);
      triplets.emplace_back(row, row, diag);
    }
  }
  SpMat a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  return a;
}

std::pair<double, double> guided_bracket(const CrossSectionGrid& grid) {
  double lower = std::sqrt(std::max(grid.substrate_permittivity, grid.cladding_permittivity));
  lower = std::max(lower, column_fundamental_n_eff(grid, 0));
  lower = std::max(lower, column_fundamental_n_eff(grid, grid.shape.nh - 1));
  const double upper =
      std::sqrt(*std::max_element(grid.permittivity.begin(), grid.permittivity.end()));
  return {lower, upper};
}

namespace {

ModeSet solve_at_shift(const CrossSectionGrid& grid, int count, double n_eff_guess,
                       const SolverOptions& options, double lower, double upper) {
  const auto& shape = grid.shape;
  ModeSet result;
  auto& diag = result.diagnostics;
  diag.guided_lower_n_eff = lower;
  diag.guided_upper_n_eff = upper;
  diag.unknowns = shape.size();

  const double k0 = wavenumber(grid.wavelength_um);
  const double shift = k0 * k0 * n_eff_guess * n_eff_guess;
  const SpMat a = assemble_operator(grid, options.formulation);
  const auto n = a.rows();

  auto t0 = std::chrono::steady_clock::now();
  SpMat shifted = a;
  for (Eigen::Index k = 0; k < n; ++k) shifted.coeffRef(k, k) -= shift;
  ShiftedFactorization lu;
  lu.compute(shifted);
  if (lu.info() != Eigen::Success) {
    throw Error(Errc::convergence_failure, "factorisation of the shifted operator failed");
  }
  diag.factorization_seconds = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();

  // Shift-invert Krylov iteration with thick restarts: eigenvalues of A
  // nearest the shift become the dominant eigenvalues of Op = (A - shift)^-1.
  // The basis V is orthonormal and W = Op V is kept alongside, so Ritz pairs
  // come from the projection V^T W and a restart carries the wanted Ritz
  // vectors over without further solves.
  const int keep = count + std::max(options.guard_vectors, 1);
  const int m_max = std::max(options.krylov_dimension, 2 * keep + 2);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss;

  Eigen::MatrixXd basis(n, m_max);
  Eigen::MatrixXd images(n, m_max);
  int m = 0;

  // Orthonormalises u against the basis, appends it and applies Op.
  int applications = 0;
  auto append = [&](Eigen::VectorXd u) {
    for (int pass = 0; pass < 2; ++pass) {
      if (m > 0) u.noalias() -= basis.leftCols(m) * (basis.leftCols(m).transpose() * u);
    }
    const double norm = u.norm();
    if (!(norm > 0.0)) return false;
    basis.col(m) = u / norm;
    images.col(m) = lu.solve(basis.col(m));
    ++applications;
    ++m;
    return true;
  };

  {
    Eigen::VectorXd start(n);
    for (Eigen::Index r = 0; r < n; ++r) start[r] = gauss(rng);
    append(std::move(start));
  }

  std::vector<double> previous;
  std::vector<double> values;
  Eigen::MatrixXd vectors;
  bool converged = false;
  double change = std::numeric_limits<double>::infinity();
  double max_residual = std::numeric_limits<double>::infinity();
  int cycles = 0;
  int since_check = 0;

  while (!converged) {
    const Eigen::VectorXd expansion = images.col(m - 1);
    const bool grew = append(expansion);
    ++since_check;
    const bool full = m == m_max;
    if (grew && !full && (m < keep + 1 || since_check < options.check_interval)) continue;
    since_check = 0;

    const Eigen::MatrixXd g = basis.leftCols(m).transpose() * images.leftCols(m);
    Eigen::EigenSolver<Eigen::MatrixXd> es(g);
    const Eigen::VectorXcd theta = es.eigenvalues();
    const Eigen::MatrixXcd y = es.eigenvectors();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    for (Eigen::Index k = 0; k < m; ++k) order[static_cast<std::size_t>(k)] = k;
    // Largest |theta| <=> eigenvalue of A nearest the shift.
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index l, Eigen::Index r) { return std::abs(theta[l]) > std::abs(theta[r]); });

    values.clear();
    std::vector<Eigen::VectorXd> picked;
    std::vector<Eigen::VectorXd> restart;
    Eigen::VectorXd worst_residual;
    double worst = -1.0;
    max_residual = 0.0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      const Eigen::Index k = order[rank];
      if (std::abs(theta[k]) == 0.0) continue;
      const bool wanted_rank = static_cast<int>(rank) < keep;
      if (wanted_rank) {
        restart.push_back(y.col(k).real());
        if (y.col(k).imag().norm() > 1e-12) restart.push_back(y.col(k).imag());
      }
      const std::complex<double> mu = shift + 1.0 / theta[k];
      if (std::abs(mu.imag()) > 1e-6 * std::abs(mu.real())) continue;
      const double lam = mu.real();
      const double ne = lam > 0.0 ? std::sqrt(lam) / k0 : 0.0;
      if (!(ne > lower && ne < upper) || static_cast<int>(values.size()) == count) continue;
      Eigen::VectorXd coeff = y.col(k).real();
      if (coeff.norm() == 0.0) coeff = y.col(k).imag();
      Eigen::VectorXd v = basis.leftCols(m) * coeff;
      const double vn = v.norm();
      v /= vn;
      const double res = (a * v - lam * v).norm() / std::abs(lam);
      max_residual = std::max(max_residual, res);
      if (res > worst) {
        worst = res;
        // Residual of the Ritz pair for Op, the natural next search direction.
        worst_residual = (images.leftCols(m) * coeff) / vn - theta[k].real() * v;
      }
      values.push_back(lam);
      picked.push_back(std::move(v));
    }
    vectors.resize(n, static_cast<Eigen::Index>(picked.size()));
    for (std::size_t c = 0; c < picked.size(); ++c) vectors.col(static_cast<Eigen::Index>(c)) = picked[c];

    change = std::numeric_limits<double>::infinity();
    if (!values.empty() && previous.size() == values.size()) {
      change = 0.0;
      for (std::size_t c = 0; c < values.size(); ++c) {
        change = std::max(change, std::abs(values[c] - previous[c]) / std::abs(values[c]));
      }
    }
    previous = values;
    // A full basis that still holds fewer guided modes than requested means
    // no more exist near the shift.
    const bool enough = static_cast<int>(values.size()) == count || full;
    if (!values.empty() && enough && change < options.eigenvalue_tolerance &&
        max_residual <= options.residual_tolerance) {
      converged = true;
      break;
    }
    if (!grew && !full) {
      // Invariant subspace without the requested modes.
      break;
    }
    if (full) {
      if (++cycles >= options.max_restarts) break;
      Eigen::MatrixXd coeffs(m, static_cast<Eigen::Index>(restart.size()));
      for (std::size_t c = 0; c < restart.size(); ++c) coeffs.col(static_cast<Eigen::Index>(c)) = restart[c];
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(coeffs);
      const Eigen::Index r = std::min<Eigen::Index>(coeffs.cols(), m);
      const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, r);
      const Eigen::MatrixXd new_basis = basis.leftCols(m) * q;
      const Eigen::MatrixXd new_images = images.leftCols(m) * q;
      m = static_cast<int>(r);
      basis.leftCols(m) = new_basis;
      images.leftCols(m) = new_images;
      if (worst_residual.size() == n) {
        append(worst_residual);
      }
    }
  }
  diag.iterations = applications;
  diag.iteration_seconds = seconds_since(t0);
  diag.last_eigenvalue_change = change;
  diag.max_relative_residual = max_residual;

  if (values.empty()) {
    std::ostringstream msg;
    msg << "no eigenvalue in the guided bracket (" << lower << ", " << upper << ") near n_eff "
        << n_eff_guess << " at " << grid.wavelength_um << " um";
    throw Error(Errc::no_guided_mode, msg.str());
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "shift-invert iteration did not converge after " << diag.iterations << " solves ("
        << count << " modes near n_eff " << n_eff_guess << " at " << grid.wavelength_um
        << " um; eigenvalue change " << change << ", residual " << max_residual << ")";
    throw Error(Errc::convergence_failure, msg.str());
  }

  for (std::size_t c = 0; c < values.size(); ++c) {
    Mode mode;
    mode.wavelength_um = grid.wavelength_um;
    mode.n_eff = std::sqrt(values[c]) / k0;
    mode.shape = shape;
    const auto col = vectors.col(static_cast<Eigen::Index>(c));
    mode.field.assign(col.data(), col.data() + col.size());
    const Eigen::VectorXd v = col;
    mode.relative_residual = (a * v - values[c] * v).norm() / std::abs(values[c]);
    normalise_in_place(shape, mode.field);
    mode.polarization_fraction = 1.0;
    mode.effective_area_um2 = effective_area(mode);
    mode.label = classify_mode(mode);
    result.modes.push_back(std::move(mode));
  }
  std::sort(result.modes.begin(), result.modes.end(),
            [](const Mode& l, const Mode& r) { return l.n_eff > r.n_eff; });
  return result;
}

}  // namespace

ModeSet solve_modes(const CrossSectionGrid& grid, int count, double n_eff_guess,
                    const SolverOptions& options) {
  if (count < 1) throw Error(Errc::invalid_argument, "mode count must be >= 1");
  const auto [lower, upper] = guided_bracket(grid);
  if (!(n_eff_guess > lower && n_eff_guess <= upper)) {
    std::ostringstream msg;
    msg << "n_eff guess " << n_eff_guess << " outside guided bracket (" << lower << ", " << upper
        << "]";
    throw Error(Errc::invalid_argument, msg.str());
  }
  // A shift sitting almost exactly on an eigenvalue leaves the other requested
  // modes polluted by amplified round-off; nudging it away restores them.
  const double nudge = 2e-3 * (upper - lower);
  const double guesses[] = {n_eff_guess, std::min(n_eff_guess + nudge, upper),
                            std::max(n_eff_guess - nudge, lower + 0.5 * nudge)};
  for (std::size_t k = 0;; ++k) {
    try {
      return solve_at_shift(grid, count, guesses[k], options, lower, upper);
    } catch (const Error& e) {
      if (e.code() != Errc::convergence_failure || k + 1 == std::size(guesses)) throw;
    }
  }
}

namespace {

int count_sign_changes(const std::vector<double>& cut) {
  double peak = 0.0;
  for (double v : cut) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return 0;
  const double floor = 0.05 * peak;
  int changes = 0;
  int sign = 0;
  for (double v : cut) {
    if (std::abs(v) < floor) continue;
    const int s = v > 0.0 ? 1 : -1;
    if (sign != 0 && s != sign) ++changes;
    sign = s;
  }
  return changes;
}

}  // namespace

ModeLabel classify_mode(const Mode& mode) {
  const auto& s = mode.shape;
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t k = 0; k < mode.field.size(); ++k) {
    if (std::abs(mode.field[k]) > best) {
      best = std::abs(mode.field[k]);
      arg = k;
    }
  }
  const std::size_t i0 = arg / s.nv;
  const std::size_t j0 = arg % s.nv;
  std::vector<double> horizontal(s.nh);
  std::vector<double> vertical(s.nv);
  for (std::size_t i = 0; i < s.nh; ++i) horizontal[i] = mode.at(i, j0);
  for (std::size_t j = 0; j < s.nv; ++j) vertical[j] = mode.at(i0, j);

  ModeLabel label;
  label.m = count_sign_changes(horizontal);
  label.n = count_sign_changes(vertical);
  label.te = mode.polarization_fraction >= 0.7;
  return label;
}

double effective_area(const GridShape& shape, std::span<const double> field) {
  double s2 = 0.0;
  double s4 = 0.0;
  for (double v : field) {
    const double v2 = v * v;
    s2 += v2;
    s4 += v2 * v2;
  }
  if (s4 == 0.0) throw Error(Errc::invalid_argument, "effective area of a zero field");
  return s2 * s2 / s4 * shape.cell_area_um2();
}

double effective_area(const Mode& mode) { return effective_area(mode.shape, mode.field); }

Point2 intensity_centroid(const Mode& mode) {
  const auto& s = mode.shape;
  double w = 0.0;
  double h = 0.0;
  double v = 0.0;
  for (std::size_t i = 0; i < s.nh; ++i) {
    for (std::size_t j = 0; j < s.nv; ++j) {
      const double e2 = mode.at(i, j) * mode.at(i, j);
      w += e2;
      h += e2 * s.h(i);
      v += e2 * s.v(j);
    }
  }
  return {h / w, v / w};
}

std::vector<double> gaussian_field(const GridShape& shape, Point2 centre, double radius_um) {
  if (!(radius_um > 0.0)) throw Error(Errc::invalid_argument, "spot radius must be positive");
  std::vector<double> g(shape.size());
  double norm2 = 0.0;
  const double inv_w2 = 1.0 / (radius_um * radius_um);
  for (std::size_t i = 0; i < shape.nh; ++i) {
    const double dh = shape.h(i) - centre.h_um;
    for (std::size_t j = 0; j < shape.nv; ++j) {
      const double dv = shape.v(j) - centre.v_um;
      const double val = std::exp(-(dh * dh + dv * dv) * inv_w2);
      g[shape.index(i, j)] = val;
      norm2 += val * val;
    }
  }
  const double scale = 1.0 / std::sqrt(norm2 * shape.cell_area_um2());
  for (double& val : g) val *= scale;
  return g;
}

double fiber_coupling_loss_db(const Mode& mode, std::span<const double> fiber_field) {
  if (fiber_field.size() != mode.field.size()) {
    throw Error(Errc::grid_mismatch, "fiber field and mode live on different grids");
  }
  double ee = 0.0;
  double gg = 0.0;
  double eg = 0.0;
  for (std::size_t k = 0; k < fiber_field.size(); ++k) {
    ee += mode.field[k] * mode.field[k];
    gg += fiber_field[k] * fiber_field[k];
    eg += mode.field[k] * fiber_field[k];
  }
  const double coupling = std::min(1.0, eg * eg / (ee * gg));
  if (coupling <= 0.0) return std::numeric_limits<double>::infinity();
  return std::max(0.0, -10.0 * std::log10(coupling));
}

double fiber_coupling_loss_db(const Mode& mode, double spot_radius_um,
                              std::optional<Point2> centre) {
  const Point2 c = centre.value_or(intensity_centroid(mode));
  const auto g = gaussian_field(mode.shape, c, spot_radius_um);
  return fiber_coupling_loss_db(mode, g);
}

double calibrate_spot_radius(const Mode& mode, double target_loss_db,
                             std::optional<Point2> centre) {
  const Point2 c = centre.value_or(intensity_centroid(mode));
  auto loss = [&](double w) { return fiber_coupling_loss_db(mode, w, c); };

  // Locate the best-match spot by golden-section search, then bisect on the
  // wide-spot side where the loss grows monotonically.
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = 0.05;
  double hi = 10.0;
  double x1 = hi - gr * (hi - lo);
  double x2 = lo + gr * (hi - lo);
  double f1 = loss(x1);
  double f2 = loss(x2);
  for (int k = 0; k < 80 && hi - lo > 1e-4; ++k) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = loss(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = loss(x2);
    }
  }
  double a = 0.5 * (lo + hi);
  if (loss(a) > target_loss_db) {
    throw Error(Errc::no_solution_in_range, "target coupling loss below the best achievable");
  }
  double b = a;
  while (loss(b) < target_loss_db) {
    b *= 1.5;
    if (b > 1e3) throw Error(Errc::no_solution_in_range, "coupling-loss target not reached");
  }
  for (int k = 0; k < 100 && b - a > 1e-9; ++k) {
    const double m = 0.5 * (a + b);
    (loss(m) < target_loss_db ? a : b) = m;
  }
  return 0.5 * (a + b);
}

void write_mode_csv(const Mode& mode, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out.precision(10);
  const auto& s = mode.shape;
  for (std::size_t j = 0; j < s.nv; ++j) {
    for (std::size_t i = 0; i < s.nh; ++i) {
      if (i) out << ',';
      out << mode.at(i, j);
    }
    out << '\n';
  }
}

}  // namespace mpmwg
