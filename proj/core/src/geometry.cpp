#include "mpmwg/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "mpmwg/errors.hpp"

namespace mpmwg {

namespace {

double cot_deg(double deg) {
  if (deg == 90.0) return 0.0;
  const double rad = deg * std::numbers::pi / 180.0;
  return std::cos(rad) / std::sin(rad);
}

}  // namespace

void WaveguideGeometry::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::invalid_geometry, what); };
  if (!(top_width_um > 0.0)) fail("top width must be positive");
  if (!(film_thickness_nm > 0.0)) fail("film thickness must be positive");
  if (!(etch_depth_nm > 0.0) || etch_depth_nm > film_thickness_nm) {
    fail("etch depth must satisfy 0 < h1 <= film thickness");
  }
  if (!(sidewall_angle_deg > 0.0) || sidewall_angle_deg > 90.0) {
    fail("sidewall angle must satisfy 0 < theta <= 90 deg");
  }
  if (layer_thicknesses_nm.empty() || layer_thicknesses_nm.size() != layer_orientations.size()) {
    fail("need one orientation per layer");
  }
  double total = 0.0;
  for (double t : layer_thicknesses_nm) {
    if (!(t > 0.0)) fail("layer thicknesses must be positive");
    total += t;
  }
  if (std::abs(total - film_thickness_nm) > 1e-9 * film_thickness_nm) {
    fail("layer thicknesses must sum to the film thickness");
  }
  for (int o : layer_orientations) {
    if (o != 1 && o != -1) fail("layer orientations must be +1 or -1");
  }
  if (!(length_mm > 0.0)) fail("length must be positive");
}

double WaveguideGeometry::base_width_um() const {
  return top_width_um + 2.0 * etch_depth_nm * 1e-3 * cot_deg(sidewall_angle_deg);
}

WaveguideGeometry single_layer_variant(const WaveguideGeometry& geometry) {
  WaveguideGeometry out = geometry;
  std::fill(out.layer_orientations.begin(), out.layer_orientations.end(), 1);
  return out;
}

namespace {

// Horizontal overlap of the cell [x0, x1] with [-hw, hw].
double overlap_length(double x0, double x1, double hw) {
  return std::max(0.0, std::min(x1, hw) - std::max(x0, -hw));
}

struct RibProfile {
  double half_top;  // um
  double cot;
  double slab;      // um
  double film;      // um

  double half_width(double y) const { return half_top + (film - y) * cot; }
  bool contains(double x, double y) const {
    if (y < 0.0 || y >= film) return false;
    if (y < slab) return true;
    return std::abs(x) <= half_width(y);
  }

  // Exact area of the rib (above the slab) inside the cell; the overlap length
  // is piecewise linear in y, so the trapezoid rule between kinks is exact.
  double rib_area(double x0, double x1, double y0, double y1) const {
    const double ya = std::max(y0, slab);
    const double yb = std::min(y1, film);
    if (yb <= ya) return 0.0;
    std::array<double, 6> knots{ya, yb, ya, ya, ya, ya};
    std::size_t count = 2;
    if (cot != 0.0) {
      for (double hw : {x1, -x0, x0, -x1}) {
        const double y = film - (hw - half_top) / cot;
        if (y > ya && y < yb) knots[count++] = y;
      }
    }
    std::sort(knots.begin(), knots.begin() + static_cast<std::ptrdiff_t>(count));
    double area = 0.0;
    for (std::size_t k = 0; k + 1 < count; ++k) {
      const double a = knots[k];
      const double b = knots[k + 1];
      area += 0.5 * (b - a) *
              (overlap_length(x0, x1, half_width(a)) + overlap_length(x0, x1, half_width(b)));
    }
    return area;
  }
};

int layer_orientation_at(const WaveguideGeometry& g, double y_um) {
  double top = 0.0;
  for (std::size_t k = 0; k < g.layer_thicknesses_nm.size(); ++k) {
    top += g.layer_thicknesses_nm[k] * 1e-3;
    if (y_um < top) return g.layer_orientations[k];
  }
  return g.layer_orientations.back();
}

}  // namespace

CrossSectionGrid rasterize(const WaveguideGeometry& geometry, double wavelength_um,
                           const RasterOptions& options) {
  geometry.validate();
  if (!(options.spacing_nm > 0.0) || options.spacing_nm > kMaxSpacingNm) {
    throw Error(Errc::invalid_argument, "grid spacing must be in (0, 25] nm");
  }
  if (!(options.padding_um > 0.0)) {
    throw Error(Errc::invalid_argument, "grid padding must be positive");
  }

  const double eps_core = geometry.core.permittivity(wavelength_um);
  const double eps_sub = geometry.substrate.permittivity(wavelength_um);
  const double eps_clad = geometry.cladding.permittivity(wavelength_um);

  const double d = options.spacing_nm * 1e-3;
  const double film = geometry.film_thickness_um();
  const double width = geometry.base_width_um() + 2.0 * options.padding_um;
  const double height = film + 2.0 * options.padding_um;

  CrossSectionGrid grid;
  grid.wavelength_um = wavelength_um;
  grid.substrate_permittivity = eps_sub;
  grid.cladding_permittivity = eps_clad;
  grid.core_permittivity = eps_core;
  grid.slab_thickness_um = geometry.slab_thickness_um();

  GridShape& s = grid.shape;
  s.nh = static_cast<std::size_t>(std::ceil(width / d - 1e-9));
  s.nv = static_cast<std::size_t>(std::ceil(height / d - 1e-9));
  s.spacing_um = d;
  // Horizontal cell centres are symmetric about the rib axis.
  s.h_origin_um = -0.5 * static_cast<double>(s.nh - 1) * d;
  s.v_origin_um = -options.padding_um + 0.5 * d;

  const RibProfile rib{0.5 * geometry.top_width_um, cot_deg(geometry.sidewall_angle_deg),
                       geometry.slab_thickness_um(), film};

  grid.permittivity.assign(s.size(), eps_clad);
  grid.nonlinearity_sign.assign(s.size(), 0);

  for (std::size_t i = 0; i < s.nh; ++i) {
    const double x = s.h(i);
    const double x0 = x - 0.5 * d;
    const double x1 = x + 0.5 * d;
    for (std::size_t j = 0; j < s.nv; ++j) {
      const double y = s.v(j);
      const std::size_t idx = s.index(i, j);
      const bool core_at_centre = rib.contains(x, y);
      if (core_at_centre) {
        grid.nonlinearity_sign[idx] = static_cast<std::int8_t>(layer_orientation_at(geometry, y));
      }
      if (options.subcell_averaging) {
        const double y0 = y - 0.5 * d;
        const double y1 = y + 0.5 * d;
        const double cell = d * d;
        const double sub = std::max(0.0, std::min(y1, 0.0) - y0) * d;
        const double slab = std::max(0.0, std::min(y1, rib.slab) - std::max(y0, 0.0)) * d;
        const double core = slab + rib.rib_area(x0, x1, y0, y1);
        const double fs = sub / cell;
        const double fc = std::min(1.0, core / cell);
        const double fa = std::max(0.0, 1.0 - fs - fc);
        grid.permittivity[idx] = fs * eps_sub + fc * eps_core + fa * eps_clad;
      } else if (core_at_centre) {
        grid.permittivity[idx] = eps_core;
      } else if (y < 0.0) {
        grid.permittivity[idx] = eps_sub;
      }
    }
  }
  return grid;
}

CrossSectionGrid with_uniform_nonlinearity(const CrossSectionGrid& grid) {
  CrossSectionGrid out = grid;
  for (auto& v : out.nonlinearity_sign) {
    if (v != 0) v = 1;
  }
  return out;
}

double rib_cell_area_um2(const CrossSectionGrid& grid) {
  const auto& s = grid.shape;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < s.nh; ++i) {
    for (std::size_t j = 0; j < s.nv; ++j) {
      if (grid.d_nor(i, j) != 0 && s.v(j) >= grid.slab_thickness_um) ++cells;
    }
  }
  return static_cast<double>(cells) * s.cell_area_um2();
}

double rib_trapezoid_area_um2(const WaveguideGeometry& geometry) {
  return 0.5 * (geometry.top_width_um + geometry.base_width_um()) * geometry.etch_depth_nm * 1e-3;
}

namespace {

template <typename T>
void write_matrix(const std::filesystem::path& path, const GridShape& s, const std::vector<T>& data) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out.precision(17);
  for (std::size_t j = 0; j < s.nv; ++j) {
    for (std::size_t i = 0; i < s.nh; ++i) {
      if (i) out << ',';
      out << +data[s.index(i, j)];
    }
    out << '\n';
  }
}

}  // namespace

void write_grid_csv(const CrossSectionGrid& grid, const std::filesystem::path& directory,
                    const std::string& stem) {
  std::filesystem::create_directories(directory);
  write_matrix(directory / (stem + "_permittivity.csv"), grid.shape, grid.permittivity);
  write_matrix(directory / (stem + "_dnor.csv"), grid.shape, grid.nonlinearity_sign);
  std::ofstream axes(directory / (stem + "_axes.csv"));
  if (!axes) throw Error(Errc::io_error, "cannot write grid axes");
  axes.precision(10);
  axes << "axis,index,coordinate_um\n";
  for (std::size_t i = 0; i < grid.shape.nh; ++i) axes << "h," << i << ',' << grid.shape.h(i) << '\n';
  for (std::size_t j = 0; j < grid.shape.nv; ++j) axes << "v," << j << ',' << grid.shape.v(j) << '\n';
}

}  // namespace mpmwg
