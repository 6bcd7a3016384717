#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mpmwg {

enum class Axis { ordinary, extraordinary, isotropic };

// Wavelengths are in micrometres throughout.
struct WavelengthRange {
  double min_um = 0.0;
  double max_um = 0.0;

  bool contains(double wavelength_um) const {
    return wavelength_um >= min_um && wavelength_um <= max_um;
  }
};

/// Sellmeier dispersion model
///
///   n^2(lambda) = A + sum_i B_i lambda^2 / (lambda^2 - C_i)
///
/// with B_i dimensionless and C_i in um^2. The coefficient list is stored flat
/// as [B_1, C_1, B_2, C_2, ...]. A material with no terms and A = 1 is vacuum.
class MaterialModel {
 public:
  MaterialModel() = default;
  MaterialModel(std::string name, double constant_term,
                std::vector<double> sellmeier_coefficients,
                WavelengthRange valid_range, Axis axis);

  const std::string& name() const { return name_; }
  double constant_term() const { return constant_term_; }
  const std::vector<double>& sellmeier_coefficients() const { return coefficients_; }
  const WavelengthRange& valid_range() const { return range_; }
  Axis axis() const { return axis_; }

  // Throws Errc::out_of_transparency_window outside valid_range().
  double refractive_index(double wavelength_um) const;
  double permittivity(double wavelength_um) const;

  bool operator==(const MaterialModel&) const = default;

 private:
  std::string name_;
  double constant_term_ = 1.0;
  std::vector<double> coefficients_;
  WavelengthRange range_;
  Axis axis_ = Axis::isotropic;
};

double refractive_index(const MaterialModel& material, double wavelength_um);

// Lithium niobate transparency window, 0.35-5.2 um, both ends inclusive.
inline constexpr WavelengthRange kLithiumNiobateTransparency{0.35, 5.2};

bool check_transparency(double wavelength_um);

// Second-order nonlinear coefficients of lithium niobate in pm/V.
struct NonlinearCoefficients {
  static constexpr double d33_pm_per_v = -34.4;
  static constexpr double d31_pm_per_v = -4.35;
};

namespace materials {

// Congruent LN, room temperature (Zelmon, Small & Jundt 1997).
MaterialModel lithium_niobate_extraordinary();
MaterialModel lithium_niobate_ordinary();
// Fused silica (Malitson 1965).
MaterialModel fused_silica();
MaterialModel vacuum();
// Air is treated as vacuum.
MaterialModel air();

}  // namespace materials

/// Named collection of material models. The built-in library holds
/// "ln_e", "ln_o", "silica", "air" and "vacuum".
class MaterialLibrary {
 public:
  static MaterialLibrary builtin();

  // YAML document mapping material name to
  //   { coefficients: [...], range: [lo, hi], axis: ..., constant: 1.0 }.
  // Entries replace built-ins of the same name. Unknown keys are rejected.
  static MaterialLibrary from_yaml_file(const std::filesystem::path& path);
  static MaterialLibrary from_yaml_string(const std::string& text);

  const MaterialModel& get(const std::string& name) const;
  bool contains(const std::string& name) const { return models_.contains(name); }
  void add(MaterialModel model);
  std::vector<std::string> names() const;

 private:
  std::map<std::string, MaterialModel> models_;
};

}  // namespace mpmwg
