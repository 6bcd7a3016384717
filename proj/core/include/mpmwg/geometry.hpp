#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "mpmwg/materials.hpp"

namespace mpmwg {

/// Dual-layer rib waveguide cross-section.
///
/// The film sits on the substrate with its bottom face at vertical coordinate
/// 0. A trapezoidal rib of top width `top_width_um` is etched `etch_depth_nm`
/// into the film, leaving an unetched slab of thickness film - etch depth.
/// Layers are listed bottom to top; each carries the sign of its crystal z axis.
struct WaveguideGeometry {
  double top_width_um = 1.43;
  double etch_depth_nm = 460.0;
  double film_thickness_nm = 600.0;
  std::vector<double> layer_thicknesses_nm{300.0, 300.0};
  std::vector<int> layer_orientations{+1, -1};
  double sidewall_angle_deg = 75.0;
  double length_mm = 5.2;
  MaterialModel core = materials::lithium_niobate_extraordinary();
  MaterialModel substrate = materials::fused_silica();
  MaterialModel cladding = materials::air();

  // Throws Errc::invalid_geometry when an invariant is broken.
  void validate() const;

  double base_width_um() const;
  double slab_thickness_um() const { return (film_thickness_nm - etch_depth_nm) * 1e-3; }
  double film_thickness_um() const { return film_thickness_nm * 1e-3; }
};

// Same geometry with every layer oriented +1.
WaveguideGeometry single_layer_variant(const WaveguideGeometry& geometry);

/// Uniform cell-centred grid. Cell (i, j) has its centre at
/// (h_origin_um + i * spacing_um, v_origin_um + j * spacing_um) and flat index
/// i * nv + j; i runs along the horizontal axis, j along the film normal.
struct GridShape {
  std::size_t nh = 0;
  std::size_t nv = 0;
  double spacing_um = 0.0;
  double h_origin_um = 0.0;
  double v_origin_um = 0.0;

  std::size_t size() const { return nh * nv; }
  std::size_t index(std::size_t i, std::size_t j) const { return i * nv + j; }
  double h(std::size_t i) const { return h_origin_um + static_cast<double>(i) * spacing_um; }
  double v(std::size_t j) const { return v_origin_um + static_cast<double>(j) * spacing_um; }
  double cell_area_um2() const { return spacing_um * spacing_um; }

  bool operator==(const GridShape&) const = default;
};

struct CrossSectionGrid {
  GridShape shape;
  double wavelength_um = 0.0;
  std::vector<double> permittivity;
  std::vector<std::int8_t> nonlinearity_sign;
  // Permittivities of the bounding media, kept for the guided-mode bracket.
  double substrate_permittivity = 1.0;
  double cladding_permittivity = 1.0;
  double core_permittivity = 1.0;
  // Unetched slab thickness; the grid-edge column is a bare slab of this height.
  double slab_thickness_um = 0.0;

  double eps(std::size_t i, std::size_t j) const { return permittivity[shape.index(i, j)]; }
  int d_nor(std::size_t i, std::size_t j) const { return nonlinearity_sign[shape.index(i, j)]; }
};

struct RasterOptions {
  double spacing_nm = 10.0;
  double padding_um = 1.5;
  // Volume-average permittivity in cells cut by an interface. Keeps n_eff
  // continuous in the geometry parameters, which the phase-matching root
  // finders rely on. When false, each cell takes the material at its centre.
  bool subcell_averaging = true;
};

inline constexpr double kMaxSpacingNm = 25.0;

CrossSectionGrid rasterize(const WaveguideGeometry& geometry, double wavelength_um,
                           const RasterOptions& options = {});

// Same permittivity, every LN cell set to +1.
CrossSectionGrid with_uniform_nonlinearity(const CrossSectionGrid& grid);

// Area of cells flagged as LN (nonzero d_Nor) above the slab, in um^2.
double rib_cell_area_um2(const CrossSectionGrid& grid);
double rib_trapezoid_area_um2(const WaveguideGeometry& geometry);

// Writes <stem>_permittivity.csv and <stem>_dnor.csv (rows = vertical index,
// bottom first; columns = horizontal index) plus <stem>_axes.csv.
void write_grid_csv(const CrossSectionGrid& grid, const std::filesystem::path& directory,
                    const std::string& stem);

}  // namespace mpmwg
