#include "run_config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "mpmwg/errors.hpp"
#include "mpmwg/materials.hpp"

namespace mpmwg::cli {

namespace {

[[noreturn]] void config_fail(const std::string& what) { throw Error(Errc::config_error, what); }

void require_map(const YAML::Node& node, const std::string& where) {
  if (!node.IsMap()) config_fail("'" + where + "' must be a mapping");
}

void reject_unknown(const YAML::Node& node, const std::string& where,
                    const std::set<std::string>& allowed) {
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) {
      config_fail("unknown key '" + key + "' in section '" + where + "'");
    }
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, const std::string& where, T& target) {
  const auto value = node[key];
  if (!value) return;
  try {
    target = value.as<T>();
  } catch (const YAML::Exception&) {
    config_fail("'" + where + "." + key + "' has the wrong type");
  }
}

template <typename T>
std::vector<T> as_list(const std::vector<double>& v) {
  return {v.begin(), v.end()};
}

void parse_geometry(const YAML::Node& n, GeometrySection& s) {
  const std::string w = "geometry";
  require_map(n, w);
  reject_unknown(n, w, {"top_width_um", "etch_depth_nm", "film_thickness_nm", "layer_thicknesses_nm",
                        "layer_orientations", "sidewall_angle_deg", "length_mm", "core", "substrate",
                        "cladding", "materials_file"});
  auto& g = s.geometry;
  read(n, "top_width_um", w, g.top_width_um);
  read(n, "etch_depth_nm", w, g.etch_depth_nm);
  read(n, "film_thickness_nm", w, g.film_thickness_nm);
  read(n, "layer_thicknesses_nm", w, g.layer_thicknesses_nm);
  read(n, "layer_orientations", w, g.layer_orientations);
  read(n, "sidewall_angle_deg", w, g.sidewall_angle_deg);
  read(n, "length_mm", w, g.length_mm);
  read(n, "core", w, s.core);
  read(n, "substrate", w, s.substrate);
  read(n, "cladding", w, s.cladding);
  read(n, "materials_file", w, s.materials_file);
}

Formulation formulation_from(const std::string& name) {
  if (name == "semi_vectorial_te") return Formulation::semi_vectorial_te;
  if (name == "scalar") return Formulation::scalar;
  config_fail("solver.formulation must be 'semi_vectorial_te' or 'scalar'");
}

std::string formulation_name(Formulation f) {
  return f == Formulation::scalar ? "scalar" : "semi_vectorial_te";
}

void parse_solver(const YAML::Node& n, SolverSection& s) {
  const std::string w = "solver";
  require_map(n, w);
  reject_unknown(n, w, {"spacing_nm", "padding_um", "subcell_averaging", "formulation",
                        "eigenvalue_tolerance", "residual_tolerance", "krylov_dimension",
                        "max_restarts", "pump_modes"});
  read(n, "spacing_nm", w, s.raster.spacing_nm);
  read(n, "padding_um", w, s.raster.padding_um);
  read(n, "subcell_averaging", w, s.raster.subcell_averaging);
  std::string formulation = formulation_name(s.solver.formulation);
  read(n, "formulation", w, formulation);
  s.solver.formulation = formulation_from(formulation);
  read(n, "eigenvalue_tolerance", w, s.solver.eigenvalue_tolerance);
  read(n, "residual_tolerance", w, s.solver.residual_tolerance);
  read(n, "krylov_dimension", w, s.solver.krylov_dimension);
  read(n, "max_restarts", w, s.solver.max_restarts);
  read(n, "pump_modes", w, s.pump_modes);
}

void parse_sweep(const YAML::Node& n, SweepSection& s) {
  const std::string w = "sweep";
  require_map(n, w);
  reject_unknown(n, w, {"signal_wavelength_um", "width_min_um", "width_max_um", "width_samples",
                        "etch_min_nm", "etch_max_nm", "etch_samples", "pump_min_um", "pump_max_um",
                        "mpm_width_min_um", "mpm_width_max_um"});
  read(n, "signal_wavelength_um", w, s.signal_wavelength_um);
  read(n, "width_min_um", w, s.width_min_um);
  read(n, "width_max_um", w, s.width_max_um);
  read(n, "width_samples", w, s.width_samples);
  read(n, "etch_min_nm", w, s.etch_min_nm);
  read(n, "etch_max_nm", w, s.etch_max_nm);
  read(n, "etch_samples", w, s.etch_samples);
  read(n, "pump_min_um", w, s.pump_min_um);
  read(n, "pump_max_um", w, s.pump_max_um);
  read(n, "mpm_width_min_um", w, s.mpm_width_min_um);
  read(n, "mpm_width_max_um", w, s.mpm_width_max_um);
}

void parse_spdc(const YAML::Node& n, SpdcSection& s) {
  const std::string w = "spdc";
  require_map(n, w);
  reject_unknown(n, w, {"pair_rate_hz", "duration_s", "channel_efficiencies", "dark_rates_hz",
                        "timing_jitter_sigma_ps", "coincidence_window_ps", "histogram_bin_ps",
                        "histogram_span_ps", "dead_time_ps", "splitter_layout", "rng_seed", "format"});
  auto& p = s.spec;
  read(n, "pair_rate_hz", w, p.pair_rate_hz);
  read(n, "duration_s", w, p.duration_s);
  read(n, "channel_efficiencies", w, p.channel_efficiencies);
  read(n, "dark_rates_hz", w, p.dark_rates_hz);
  read(n, "timing_jitter_sigma_ps", w, p.timing_jitter_sigma_ps);
  read(n, "coincidence_window_ps", w, p.coincidence_window_ps);
  read(n, "histogram_bin_ps", w, p.histogram_bin_ps);
  read(n, "histogram_span_ps", w, s.histogram_span_ps);
  read(n, "dead_time_ps", w, p.dead_time_ps);
  std::string layout = to_string(p.layout);
  read(n, "splitter_layout", w, layout);
  try {
    p.layout = splitter_layout_from_string(layout);
  } catch (const Error& e) {
    config_fail(std::string("spdc.splitter_layout: ") + e.what());
  }
  read(n, "rng_seed", w, p.rng_seed);
  read(n, "format", w, s.format);
}

void parse_io(const YAML::Node& n, IoSection& s) {
  const std::string w = "io";
  require_map(n, w);
  reject_unknown(n, w, {"output_dir", "cache_dir"});
  std::string out = s.output_dir.string();
  std::string cache = s.cache_dir.string();
  read(n, "output_dir", w, out);
  read(n, "cache_dir", w, cache);
  s.output_dir = out;
  s.cache_dir = cache;
}

}  // namespace

RunConfig RunConfig::from_yaml_string(const std::string& text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    config_fail(std::string("YAML parse error: ") + e.what());
  }
  RunConfig cfg;
  if (!root || root.IsNull()) {
    cfg.finalize();
    return cfg;
  }
  require_map(root, "<root>");
  reject_unknown(root, "<root>", {"geometry", "solver", "sweep", "spdc", "io"});
  if (root["geometry"]) parse_geometry(root["geometry"], cfg.geometry);
  if (root["solver"]) parse_solver(root["solver"], cfg.solver);
  if (root["sweep"]) parse_sweep(root["sweep"], cfg.sweep);
  if (root["spdc"]) parse_spdc(root["spdc"], cfg.spdc);
  if (root["io"]) parse_io(root["io"], cfg.io);
  auto& mf = cfg.geometry.materials_file;
  if (!mf.empty() && !base_dir.empty() && std::filesystem::path(mf).is_relative()) {
    mf = (base_dir / mf).lexically_normal().string();
  }
  cfg.finalize();
  return cfg;
}

RunConfig RunConfig::from_yaml_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_yaml_string(ss.str(), path.parent_path());
}

void RunConfig::finalize() {
  MaterialLibrary lib = geometry.materials_file.empty()
                            ? MaterialLibrary::builtin()
                            : MaterialLibrary::from_yaml_file(geometry.materials_file);
  for (const auto* name : {&geometry.core, &geometry.substrate, &geometry.cladding}) {
    if (!lib.contains(*name)) config_fail("unknown material '" + *name + "'");
  }
  geometry.geometry.core = lib.get(geometry.core);
  geometry.geometry.substrate = lib.get(geometry.substrate);
  geometry.geometry.cladding = lib.get(geometry.cladding);
  try {
    geometry.geometry.validate();
    spdc.spec.validate();
  } catch (const Error& e) {
    config_fail(e.what());
  }
  if (!(solver.raster.spacing_nm > 0.0) || solver.raster.spacing_nm > kMaxSpacingNm) {
    config_fail("solver.spacing_nm must lie in (0, " + std::to_string(kMaxSpacingNm) + "]");
  }
  if (!(solver.raster.padding_um > 0.0)) config_fail("solver.padding_um must be positive");
  if (solver.pump_modes < 1) config_fail("solver.pump_modes must be >= 1");
  if (sweep.width_samples < 1 || sweep.etch_samples < 1) config_fail("sweep sample counts must be >= 1");
  if (!(sweep.width_min_um <= sweep.width_max_um) || !(sweep.etch_min_nm <= sweep.etch_max_nm) ||
      !(sweep.pump_min_um < sweep.pump_max_um) || !(sweep.mpm_width_min_um < sweep.mpm_width_max_um)) {
    config_fail("sweep ranges must be ordered min <= max");
  }
  if (!(spdc.histogram_span_ps >= 50.0 * spdc.spec.histogram_bin_ps)) {
    config_fail("spdc.histogram_span_ps must be at least 50 histogram bins");
  }
  if (spdc.format != "binary" && spdc.format != "csv") config_fail("spdc.format must be 'binary' or 'csv'");
}

nlohmann::json RunConfig::to_json() const {
  const auto& g = geometry.geometry;
  const auto& p = spdc.spec;
  nlohmann::json j;
  j["geometry"] = {{"top_width_um", g.top_width_um},
                   {"etch_depth_nm", g.etch_depth_nm},
                   {"film_thickness_nm", g.film_thickness_nm},
                   {"layer_thicknesses_nm", g.layer_thicknesses_nm},
                   {"layer_orientations", g.layer_orientations},
                   {"sidewall_angle_deg", g.sidewall_angle_deg},
                   {"length_mm", g.length_mm},
                   {"core", geometry.core},
                   {"substrate", geometry.substrate},
                   {"cladding", geometry.cladding},
                   {"materials_file", geometry.materials_file}};
  j["solver"] = {{"spacing_nm", solver.raster.spacing_nm},
                 {"padding_um", solver.raster.padding_um},
                 {"subcell_averaging", solver.raster.subcell_averaging},
                 {"formulation", formulation_name(solver.solver.formulation)},
                 {"eigenvalue_tolerance", solver.solver.eigenvalue_tolerance},
                 {"residual_tolerance", solver.solver.residual_tolerance},
                 {"krylov_dimension", solver.solver.krylov_dimension},
                 {"max_restarts", solver.solver.max_restarts},
                 {"pump_modes", solver.pump_modes}};
  j["sweep"] = {{"signal_wavelength_um", sweep.signal_wavelength_um},
                {"width_min_um", sweep.width_min_um},
                {"width_max_um", sweep.width_max_um},
                {"width_samples", sweep.width_samples},
                {"etch_min_nm", sweep.etch_min_nm},
                {"etch_max_nm", sweep.etch_max_nm},
                {"etch_samples", sweep.etch_samples},
                {"pump_min_um", sweep.pump_min_um},
                {"pump_max_um", sweep.pump_max_um},
                {"mpm_width_min_um", sweep.mpm_width_min_um},
                {"mpm_width_max_um", sweep.mpm_width_max_um}};
  j["spdc"] = {{"pair_rate_hz", p.pair_rate_hz},
               {"duration_s", p.duration_s},
               {"channel_efficiencies", p.channel_efficiencies},
               {"dark_rates_hz", p.dark_rates_hz},
               {"timing_jitter_sigma_ps", p.timing_jitter_sigma_ps},
               {"coincidence_window_ps", p.coincidence_window_ps},
               {"histogram_bin_ps", p.histogram_bin_ps},
               {"histogram_span_ps", spdc.histogram_span_ps},
               {"dead_time_ps", p.dead_time_ps},
               {"splitter_layout", to_string(p.layout)},
               {"rng_seed", p.rng_seed},
               {"format", spdc.format}};
  j["io"] = {{"output_dir", io.output_dir.string()}, {"cache_dir", io.cache_dir.string()}};
  return j;
}

std::string RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json().dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mpmwg::cli
