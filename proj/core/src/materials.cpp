#include "mpmwg/materials.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include <yaml-cpp/yaml.h>

#include "mpmwg/errors.hpp"

namespace mpmwg {

MaterialModel::MaterialModel(std::string name, double constant_term,
                             std::vector<double> sellmeier_coefficients,
                             WavelengthRange valid_range, Axis axis)
    : name_(std::move(name)),
      constant_term_(constant_term),
      coefficients_(std::move(sellmeier_coefficients)),
      range_(valid_range),
      axis_(axis) {
  if (coefficients_.size() % 2 != 0) {
    throw Error(Errc::invalid_argument,
                "material '" + name_ + "': Sellmeier coefficients must come in (B, C) pairs");
  }
  if (!(range_.min_um >= 0.0) || !(range_.max_um > range_.min_um)) {
    throw Error(Errc::invalid_argument, "material '" + name_ + "': invalid wavelength range");
  }
}

double MaterialModel::permittivity(double wavelength_um) const {
  if (!(wavelength_um > 0.0) || !range_.contains(wavelength_um)) {
    std::ostringstream msg;
    msg << "material '" << name_ << "': wavelength " << wavelength_um
        << " um outside [" << range_.min_um << ", " << range_.max_um << "] um";
    throw Error(Errc::out_of_transparency_window, msg.str());
  }
  const double l2 = wavelength_um * wavelength_um;
  double eps = constant_term_;
  for (std::size_t k = 0; k < coefficients_.size(); k += 2) {
    eps += coefficients_[k] * l2 / (l2 - coefficients_[k + 1]);
  }
  return eps;
}

double MaterialModel::refractive_index(double wavelength_um) const {
  return std::sqrt(permittivity(wavelength_um));
}

double refractive_index(const MaterialModel& material, double wavelength_um) {
  return material.refractive_index(wavelength_um);
}

bool check_transparency(double wavelength_um) {
  return kLithiumNiobateTransparency.contains(wavelength_um);
}

namespace materials {

MaterialModel lithium_niobate_extraordinary() {
  return MaterialModel("ln_e", 1.0, {2.9804, 0.02047, 0.5981, 0.0666, 8.9543, 416.08},
                       kLithiumNiobateTransparency, Axis::extraordinary);
}

MaterialModel lithium_niobate_ordinary() {
  return MaterialModel("ln_o", 1.0, {2.6734, 0.01764, 1.2290, 0.05914, 12.614, 474.60},
                       kLithiumNiobateTransparency, Axis::ordinary);
}

MaterialModel fused_silica() {
  return MaterialModel("silica", 1.0,
                       {0.6961663, 0.0684043 * 0.0684043, 0.4079426, 0.1162414 * 0.1162414,
                        0.8974794, 9.896161 * 9.896161},
                       {0.21, 6.7}, Axis::isotropic);
}

MaterialModel vacuum() {
  return MaterialModel("vacuum", 1.0, {}, {0.0, std::numeric_limits<double>::max()},
                       Axis::isotropic);
}

MaterialModel air() {
  return MaterialModel("air", 1.0, {}, {0.0, std::numeric_limits<double>::max()},
                       Axis::isotropic);
}

}  // namespace materials

MaterialLibrary MaterialLibrary::builtin() {
  MaterialLibrary lib;
  lib.add(materials::lithium_niobate_extraordinary());
  lib.add(materials::lithium_niobate_ordinary());
  lib.add(materials::fused_silica());
  lib.add(materials::air());
  lib.add(materials::vacuum());
  return lib;
}

namespace {

Axis parse_axis(const std::string& s, const std::string& material) {
  if (s == "ordinary") return Axis::ordinary;
  if (s == "extraordinary") return Axis::extraordinary;
  if (s == "isotropic") return Axis::isotropic;
  throw Error(Errc::config_error, "material '" + material + "': unknown axis '" + s + "'");
}

MaterialLibrary parse_library(const YAML::Node& root) {
  MaterialLibrary lib = MaterialLibrary::builtin();
  if (!root || root.IsNull()) return lib;
  if (!root.IsMap()) throw Error(Errc::config_error, "materials file must be a mapping");
  for (const auto& entry : root) {
    const auto name = entry.first.as<std::string>();
    const YAML::Node& body = entry.second;
    if (!body.IsMap()) throw Error(Errc::config_error, "material '" + name + "' must be a mapping");
    for (const auto& kv : body) {
      const auto key = kv.first.as<std::string>();
      if (key != "coefficients" && key != "range" && key != "axis" && key != "constant") {
        throw Error(Errc::config_error, "material '" + name + "': unknown key '" + key + "'");
      }
    }
    if (!body["coefficients"] || !body["range"]) {
      throw Error(Errc::config_error, "material '" + name + "' needs 'coefficients' and 'range'");
    }
    try {
      auto coeffs = body["coefficients"].as<std::vector<double>>();
      auto range = body["range"].as<std::vector<double>>();
      if (range.size() != 2) {
        throw Error(Errc::config_error, "material '" + name + "': range must be [lo, hi]");
      }
      const double constant = body["constant"] ? body["constant"].as<double>() : 1.0;
      const Axis axis =
          body["axis"] ? parse_axis(body["axis"].as<std::string>(), name) : Axis::isotropic;
      lib.add(MaterialModel(name, constant, std::move(coeffs), {range[0], range[1]}, axis));
    } catch (const YAML::Exception& e) {
      throw Error(Errc::config_error, "material '" + name + "': " + e.what());
    } catch (const Error& e) {
      if (e.code() == Errc::config_error) throw;
      throw Error(Errc::config_error, e.what());
    }
  }
  return lib;
}

}  // namespace

MaterialLibrary MaterialLibrary::from_yaml_file(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw Error(Errc::io_error, "cannot read materials file " + path.string());
  } catch (const YAML::Exception& e) {
    throw Error(Errc::config_error, "materials file " + path.string() + ": " + e.what());
  }
  return parse_library(root);
}

MaterialLibrary MaterialLibrary::from_yaml_string(const std::string& text) {
  try {
    return parse_library(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw Error(Errc::config_error, std::string("materials: ") + e.what());
  }
}

const MaterialModel& MaterialLibrary::get(const std::string& name) const {
  auto it = models_.find(name);
  if (it == models_.end()) throw Error(Errc::config_error, "unknown material '" + name + "'");
  return it->second;
}

void MaterialLibrary::add(MaterialModel model) {
  auto name = model.name();
  models_.insert_or_assign(std::move(name), std::move(model));
}

std::vector<std::string> MaterialLibrary::names() const {
  std::vector<std::string> out;
  out.reserve(models_.size());
  for (const auto& [name, _] : models_) out.push_back(name);
  return out;
}

}  // namespace mpmwg
