#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mpmwg/errors.hpp"
#include "mpmwg/geometry.hpp"
#include "mpmwg/materials.hpp"
#include "mpmwg/mode_solver.hpp"
#include "mpmwg/nonlinear_coupling.hpp"
#include "mpmwg/phase_matching.hpp"
#include "mpmwg/photon_stats.hpp"
#include "mpmwg/timetag_io.hpp"
#include "run_config.hpp"

namespace mpmwg::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path), path_(path) {
    if (!out_) throw Error(Errc::io_error, "cannot write " + path.string());
    row_strings(header);
  }
  ~CsvWriter() = default;

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
    out_ << '\n';
  }
  void close() {
    out_.close();
    if (!out_) throw Error(Errc::io_error, "write failed for " + path_.string());
  }

 private:
  std::ofstream out_;
  fs::path path_;
};

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
  return v;
}

struct Context {
  RunConfig config;
  std::string command;
  int threads = 1;
  bool verbose = false;
  bool use_cache = true;
  std::vector<std::string> artifacts;
  json results = json::object();
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  fs::path artifact(const std::string& name) {
    artifacts.push_back(name);
    return config.io.output_dir / name;
  }
  void log(const std::string& msg) const {
    if (verbose) *err << "[mpmwg] " << msg << '\n';
  }
  DesignOptions design() const {
    DesignOptions o;
    o.raster = config.solver.raster;
    o.solver = config.solver.solver;
    o.pump_search_modes = config.solver.pump_modes;
    if (use_cache) {
      o.cache = std::make_shared<ModeIndexCache>(ModeIndexCache::resolve_directory(config.io.cache_dir));
    }
    return o;
  }
};

// TE00 at the signal wavelength and TE01 at half of it, with their grids.
struct DesignModes {
  CrossSectionGrid signal_grid;
  CrossSectionGrid pump_grid;
  Mode signal;
  Mode pump;
  std::vector<Mode> pump_set;
};

DesignModes solve_design_modes(const Context& ctx) {
  const auto& cfg = ctx.config;
  const double ls = cfg.sweep.signal_wavelength_um;
  const auto& g = cfg.geometry.geometry;
  DesignModes d;
  d.signal_grid = rasterize(g, ls, cfg.solver.raster);
  d.pump_grid = rasterize(g, 0.5 * ls, cfg.solver.raster);
  ctx.log("grid " + std::to_string(d.signal_grid.shape.nh) + " x " + std::to_string(d.signal_grid.shape.nv));
  const double guess = g.core.refractive_index(ls);
  auto sset = solve_modes(d.signal_grid, 1, guess, cfg.solver.solver);
  d.signal = sset.modes.front();
  ctx.log("TE00 n_eff " + num(d.signal.n_eff));
  auto pset = solve_modes(d.pump_grid, cfg.solver.pump_modes, d.signal.n_eff, cfg.solver.solver);
  const Mode* te01 = find_te01(pset.modes);
  if (te01 == nullptr) {
    pset = solve_modes(d.pump_grid, 2 * cfg.solver.pump_modes + 4, g.core.refractive_index(0.5 * ls),
                       cfg.solver.solver);
    te01 = find_te01(pset.modes);
  }
  if (te01 == nullptr) {
    throw Error(Errc::no_higher_order_mode, "no guided TE01 at " + num(0.5 * ls) + " um");
  }
  d.pump = *te01;
  d.pump_set = pset.modes;
  ctx.log("TE01 n_eff " + num(d.pump.n_eff));
  return d;
}

void cmd_materials(Context& ctx, double wl_min, double wl_max, int samples) {
  MaterialLibrary lib = ctx.config.geometry.materials_file.empty()
                            ? MaterialLibrary::builtin()
                            : MaterialLibrary::from_yaml_file(ctx.config.geometry.materials_file);
  const auto names = lib.names();
  std::vector<std::string> header{"wavelength_um"};
  for (const auto& n : names) header.push_back("n_" + n);
  CsvWriter csv(ctx.artifact("materials.csv"), header);
  for (double wl : linspace(wl_min, wl_max, samples)) {
    std::vector<std::string> row{num(wl)};
    for (const auto& n : names) {
      const auto& m = lib.get(n);
      row.push_back(m.valid_range().contains(wl) ? num(m.refractive_index(wl)) : "nan");
    }
    csv.row_strings(row);
  }
  csv.close();
  ctx.results["materials"] = names;
}

void cmd_modes(Context& ctx, int signal_count, bool write_fields) {
  const auto& cfg = ctx.config;
  const double ls = cfg.sweep.signal_wavelength_um;
  const auto& g = cfg.geometry.geometry;
  const auto sgrid = rasterize(g, ls, cfg.solver.raster);
  const auto pgrid = rasterize(g, 0.5 * ls, cfg.solver.raster);
  auto sset = solve_modes(sgrid, signal_count, g.core.refractive_index(ls), cfg.solver.solver);
  auto pset = solve_modes(pgrid, cfg.solver.pump_modes, sset.modes.front().n_eff, cfg.solver.solver);

  write_grid_csv(sgrid, cfg.io.output_dir, "grid_signal");
  write_grid_csv(pgrid, cfg.io.output_dir, "grid_pump");
  for (const char* stem : {"grid_signal", "grid_pump"}) {
    for (const char* part : {"_permittivity.csv", "_dnor.csv", "_axes.csv"}) {
      ctx.artifacts.push_back(std::string(stem) + part);
    }
  }
  CsvWriter csv(ctx.artifact("modes.csv"),
                {"wavelength_um", "index", "label", "n_eff", "effective_area_um2", "relative_residual",
                 "polarization_fraction"});
  json listing = json::array();
  auto emit = [&](const ModeSet& set, const char* role) {
    for (std::size_t k = 0; k < set.modes.size(); ++k) {
      const auto& m = set.modes[k];
      csv.row_strings({num(m.wavelength_um), std::to_string(k), m.label.to_string(), num(m.n_eff),
                       num(m.effective_area_um2), num(m.relative_residual), num(m.polarization_fraction)});
      listing.push_back({{"role", role}, {"label", m.label.to_string()}, {"n_eff", m.n_eff}});
      if (write_fields) {
        const std::string name = std::string("field_") + role + "_" + std::to_string(k) + ".csv";
        write_mode_csv(m, ctx.artifact(name));
      }
    }
  };
  emit(sset, "signal");
  emit(pset, "pump");
  csv.close();
  ctx.results["modes"] = listing;
  ctx.results["solve_seconds"] = sset.diagnostics.factorization_seconds + sset.diagnostics.iteration_seconds +
                                 pset.diagnostics.factorization_seconds + pset.diagnostics.iteration_seconds;
}

void cmd_overlap(Context& ctx, double fiber_loss_db) {
  const auto& cfg = ctx.config;
  const double ls = cfg.sweep.signal_wavelength_um;
  const auto d = solve_design_modes(ctx);
  const auto configured = overlap_factor(d.signal, d.pump, d.pump_grid);
  const auto uniform = overlap_factor(d.signal, d.pump, with_uniform_nonlinearity(d.pump_grid));
  const double dk = phase_mismatch({0.5 * ls, d.pump.n_eff}, {ls, d.signal.n_eff}, {ls, d.signal.n_eff});
  const double eta = predict_shg_efficiency(d.signal, d.pump, configured.zeta, ls);
  const double spot = calibrate_spot_radius(d.signal, fiber_loss_db);
  const double te01_loss = fiber_coupling_loss_db(d.pump, 0.5 * spot);

  std::vector<std::tuple<std::string, double, std::string>> rows{
      {"n_eff_te00_signal", d.signal.n_eff, ""},
      {"n_eff_te01_pump", d.pump.n_eff, ""},
      {"delta_k", dk, "rad/um"},
      {"zeta_configured", configured.zeta, "1/sqrt(um2)"},
      {"zeta_single_layer", uniform.zeta, "1/sqrt(um2)"},
      {"enhancement_ratio", uniform.zeta != 0.0 ? enhancement_ratio(configured.zeta, uniform.zeta) : NAN, ""},
      {"effective_area_te00", d.signal.effective_area_um2, "um2"},
      {"effective_area_te01", d.pump.effective_area_um2, "um2"},
      {"predicted_shg_efficiency", eta, "%/W/cm2"},
      {"fiber_spot_radius_signal", spot, "um"},
      {"fiber_loss_te00", fiber_loss_db, "dB"},
      {"fiber_loss_te01", te01_loss, "dB"},
  };
  CsvWriter csv(ctx.artifact("overlap.csv"), {"quantity", "value", "unit"});
  for (const auto& [name, value, unit] : rows) {
    csv.row_strings({name, num(value), unit});
    ctx.results[name] = value;
  }
  csv.close();
  ctx.results["configured_variant"] =
      configured.variant == LayerVariant::dual_layer ? "dual_layer" : "single_layer";
  *ctx.out << "zeta (" << ctx.results["configured_variant"].get<std::string>() << ") = " << num(configured.zeta)
           << "\nzeta (single_layer) = " << num(uniform.zeta)
           << "\nenhancement = " << num(ctx.results["enhancement_ratio"].get<double>())
           << "\npredicted SHG efficiency = " << num(eta) << " %/W/cm^2\n";
}

void cmd_pm_sweep(Context& ctx, bool find_width) {
  const auto& cfg = ctx.config;
  const auto widths = linspace(cfg.sweep.width_min_um, cfg.sweep.width_max_um, cfg.sweep.width_samples);
  const auto etches = linspace(cfg.sweep.etch_min_nm, cfg.sweep.etch_max_nm, cfg.sweep.etch_samples);
  const auto opts = ctx.design();
  const auto points =
      landscape_sweep(cfg.geometry.geometry, cfg.sweep.signal_wavelength_um, widths, etches, opts, ctx.threads);
  CsvWriter csv(ctx.artifact("landscape.csv"),
                {"width_um", "etch_depth_nm", "n_te00_signal", "n_te01_pump", "delta_n"});
  for (const auto& p : points) {
    csv.row_strings({num(p.width_um), num(p.etch_depth_nm), num(p.n_te00_signal), num(p.n_te01_pump),
                     num(p.n_te01_pump - p.n_te00_signal)});
  }
  csv.close();
  ctx.results["points"] = points.size();
  if (find_width) {
    const auto mpm = find_mpm_width(cfg.geometry.geometry, cfg.sweep.signal_wavelength_um,
                                    {cfg.sweep.mpm_width_min_um, cfg.sweep.mpm_width_max_um}, opts);
    CsvWriter w(ctx.artifact("mpm_width.csv"),
                {"width_um", "etch_depth_nm", "delta_k_per_um", "n_te00_signal", "n_te01_pump", "evaluations"});
    w.row_strings({num(mpm.width_um), num(cfg.geometry.geometry.etch_depth_nm), num(mpm.result.delta_k_per_um),
                   num(mpm.result.signal.n_eff), num(mpm.result.pump.n_eff), std::to_string(mpm.evaluations)});
    w.close();
    ctx.results["mpm_width_um"] = mpm.width_um;
    ctx.results["delta_k_per_um"] = mpm.result.delta_k_per_um;
    *ctx.out << "phase-matched width = " << num(mpm.width_um) << " um\n";
  }
}

void cmd_pm_curve(Context& ctx) {
  const auto& cfg = ctx.config;
  const auto widths = linspace(cfg.sweep.width_min_um, cfg.sweep.width_max_um, cfg.sweep.width_samples);
  const auto curve = pump_wavelength_curve(cfg.geometry.geometry, widths,
                                           {cfg.sweep.pump_min_um, cfg.sweep.pump_max_um}, ctx.design(),
                                           ctx.threads);
  CsvWriter csv(ctx.artifact("pm_curve.csv"), {"width_um", "pump_wavelength_nm"});
  for (const auto& p : curve) csv.row_strings({num(p.width_um), num(p.pump_wavelength_um * 1e3)});
  csv.close();
  ctx.results["points"] = curve.size();
  ctx.results["solved_points"] =
      std::count_if(curve.begin(), curve.end(), [](const PumpCurvePoint& p) { return std::isfinite(p.pump_wavelength_um); });
}

struct ShgFlags {
  std::optional<double> p_sh_w;
  std::optional<double> p_fh_w;
  double t_sh = ShgMeasurementDefaults::transmission_sh;
  double t_fh = ShgMeasurementDefaults::transmission_fh;
  std::optional<double> length_cm;
  std::optional<double> loss_db_per_cm;
  bool predict = false;
};

void cmd_shg(Context& ctx, const ShgFlags& f) {
  if (!f.predict && !(f.p_sh_w && f.p_fh_w)) {
    throw Error(Errc::invalid_argument, "shg needs --p-sh-w and --p-fh-w, or --predict");
  }
  CsvWriter csv(ctx.artifact("shg.csv"), {"quantity", "value", "unit"});
  if (f.p_sh_w && f.p_fh_w) {
    const double length = f.length_cm.value_or(ctx.config.geometry.geometry.length_mm * 0.1);
    const double eta = shg_normalized_efficiency_from_measurement(*f.p_sh_w, *f.p_fh_w, f.t_sh, f.t_fh, length,
                                                                  f.loss_db_per_cm);
    csv.row_strings({"measured_normalized_efficiency", num(eta), "%/W/cm2"});
    ctx.results["measured_normalized_efficiency"] = eta;
    *ctx.out << "measured normalized efficiency = " << num(eta) << " %/W/cm^2\n";
  }
  if (f.predict) {
    const auto d = solve_design_modes(ctx);
    const auto z = overlap_factor(d.signal, d.pump, d.pump_grid);
    const double eta = predict_shg_efficiency(d.signal, d.pump, z.zeta, ctx.config.sweep.signal_wavelength_um);
    csv.row_strings({"zeta", num(z.zeta), "1/sqrt(um2)"});
    csv.row_strings({"predicted_normalized_efficiency", num(eta), "%/W/cm2"});
    ctx.results["predicted_normalized_efficiency"] = eta;
    *ctx.out << "predicted normalized efficiency = " << num(eta) << " %/W/cm^2\n";
  }
  csv.close();
}

void cmd_spdc_sim(Context& ctx) {
  const auto& sp = ctx.config.spdc;
  const auto stream = simulate_timetags(sp.spec, ctx.threads);
  const bool binary = sp.format == "binary";
  const auto path = ctx.artifact(binary ? "timetags.ttag" : "timetags.csv");
  if (binary) {
    write_timetags_binary(stream, path);
  } else {
    write_timetags_csv(stream, path);
  }
  CsvWriter truth(ctx.artifact("spdc_truth.csv"), {"quantity", "value", "unit"});
  truth.row_strings({"pair_rate", num(sp.spec.pair_rate_hz), "Hz"});
  truth.row_strings({"duration", num(sp.spec.duration_s), "s"});
  for (int c = 0; c < sp.spec.channels(); ++c) {
    truth.row_strings({"events_" + stream.labels[static_cast<std::size_t>(c)], std::to_string(stream.count(c)), ""});
  }
  try {
    const auto a = analytic_statistics(sp.spec);
    truth.row_strings({"analytic_coincidences", num(a.true_coincidences_hz + a.accidental_coincidences_hz), "Hz"});
    truth.row_strings({"analytic_car_window", num(a.car), ""});
    truth.row_strings({"analytic_pgr_estimate", num(a.pgr_estimate_hz), "Hz"});
  } catch (const Error& e) {
    if (e.code() != Errc::regime_violation) throw;
    ctx.log(e.what());
  }
  truth.close();
  ctx.results["tags"] = stream.tags.size();
}

void cmd_analyze(Context& ctx, const fs::path& input, std::optional<double> duration_s) {
  const auto& sp = ctx.config.spdc;
  const auto stream = read_timetags(input, duration_s);
  const auto rep = analyze_stream(stream, sp.spec.coincidence_window_ps, sp.spec.histogram_bin_ps,
                                  sp.histogram_span_ps);
  const auto hist = coincidence_histogram(stream, 0, 1, sp.spec.histogram_bin_ps, sp.histogram_span_ps);
  CsvWriter h(ctx.artifact("histogram.csv"), {"delay_ps", "counts", "g2"});
  for (std::size_t k = 0; k < hist.counts.size(); ++k) {
    h.row_strings({num(hist.delay_ps[k]), std::to_string(hist.counts[k]), num(hist.g2[k])});
  }
  h.close();

  CsvWriter csv(ctx.artifact("report.csv"), {"quantity", "value", "sigma", "unit"});
  auto row = [&](const std::string& name, const Measurement& m, const char* unit) {
    csv.row_strings({name, num(m.value), num(m.sigma), unit});
    ctx.results[name] = {{"value", m.value}, {"sigma", m.sigma}};
  };
  for (std::size_t c = 0; c < rep.labels.size(); ++c) row("singles_" + rep.labels[c], rep.singles_hz[c], "Hz");
  row("coincidences", rep.coincidences_hz, "Hz");
  row("pgr", rep.pgr_hz, "Hz");
  row("car", rep.car, "");
  if (rep.has_triples) {
    row("triples", rep.triples_hz, "Hz");
    row("g2_heralded", rep.g2_heralded.primary, "");
    row("g2_heralded_conventional", rep.g2_heralded.conventional, "");
    row("heralded_rate", {rep.g2_heralded.heralded_rate_hz, 0.0}, "Hz");
  }
  csv.close();
  ctx.results["insufficient_far_statistics"] = rep.insufficient_far_statistics;
  if (rep.insufficient_far_statistics) {
    *ctx.err << "warning: " << to_string(Errc::insufficient_far_delay_statistics)
             << ": fewer than 100 counts in the far-delay region\n";
  }
  *ctx.out << "PGR = " << num(rep.pgr_hz.value) << " +- " << num(rep.pgr_hz.sigma) << " Hz\nCAR = "
           << num(rep.car.value) << " +- " << num(rep.car.sigma) << '\n';
}

void write_manifest(const Context& ctx, double seconds) {
  json m;
  m["command"] = ctx.command;
  m["tool_version"] = kToolVersion;
  m["config"] = ctx.config.to_json();
  m["config_hash"] = ctx.config.hash();
  m["seed"] = ctx.config.spdc.spec.rng_seed;
  m["threads"] = ctx.threads;
  m["artifacts"] = ctx.artifacts;
  m["results"] = ctx.results;
  m["timings"] = {{"total_seconds", seconds}};
  m["status"] = "ok";
  std::ofstream out(ctx.config.io.output_dir / "manifest.json");
  out << m.dump(2) << '\n';
  if (!out) throw Error(Errc::io_error, "cannot write manifest");
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::config_error: return kExitConfig;
    case Errc::io_error: return kExitIo;
    default: return kExitDomainBase + static_cast<int>(code);
  }
}

int report_error(std::ostream& err, const fs::path& out_dir, const std::string& name,
                 const std::string& message, int code) {
  const json rec = {{"status", "error"}, {"error", name}, {"message", message}, {"exit_code", code}};
  err << rec.dump() << '\n';
  std::error_code ec;
  if (!out_dir.empty() && fs::is_directory(out_dir, ec)) {
    std::ofstream(out_dir / "error.json") << rec.dump(2) << '\n';
  }
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-layer LN waveguide design and photon-pair statistics"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer("Exit codes: 0 ok, 1 internal, 2 usage, 3 ConfigError, 4 IoError, "
             "10+n domain error n. Cache directory: $MPMWG_CACHE_DIR overrides io.cache_dir.");

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::optional<double> spacing;
  bool verbose = false;
  bool no_cache = false;
  app.add_option("--config", config_path, "YAML run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "RNG seed for the photon simulator (integer)");
  app.add_option("--out", out_dir, "Output directory (overrides io.output_dir)");
  app.add_option("--threads", threads, "Worker threads (count)")->check(CLI::PositiveNumber);
  app.add_option("--spacing", spacing, "Grid spacing in nm (overrides solver.spacing_nm)");
  app.add_flag("--verbose", verbose, "Progress messages on stderr");
  app.add_flag("--no-cache", no_cache, "Bypass the effective-index cache");

  double wl_min = 0.4;
  double wl_max = 2.0;
  int wl_samples = 161;
  auto* materials = app.add_subcommand("materials", "Tabulate refractive indices of the material library");
  materials->add_option("--wl-min", wl_min, "Lowest wavelength in um")->capture_default_str();
  materials->add_option("--wl-max", wl_max, "Highest wavelength in um")->capture_default_str();
  materials->add_option("--samples", wl_samples, "Number of wavelengths (count)")->capture_default_str();

  int signal_count = 2;
  bool write_fields = false;
  auto* modes = app.add_subcommand("modes", "Solve guided modes at the signal wavelength and its half");
  modes->add_option("--signal-modes", signal_count, "Modes requested at the signal wavelength (count)")
      ->capture_default_str();
  modes->add_flag("--fields", write_fields, "Also write every field profile as CSV");

  double fiber_loss = 6.0;
  auto* overlap = app.add_subcommand("overlap", "Overlap factors, enhancement and coupling estimates");
  overlap->add_option("--fiber-loss-db", fiber_loss, "TE00 fiber coupling loss used to calibrate the spot, dB")
      ->capture_default_str();

  bool find_width = false;
  auto* pm_sweep = app.add_subcommand("pm-sweep", "Effective-index landscape over width and etch depth");
  pm_sweep->add_flag("--find-width", find_width, "Also locate the phase-matched width at the configured etch depth");

  app.add_subcommand("pm-curve", "Phase-matched pump wavelength versus width");

  ShgFlags shg_flags;
  auto* shg = app.add_subcommand("shg", "Normalized SHG efficiency from measured powers or from modes");
  shg->add_option("--p-sh-w", shg_flags.p_sh_w, "Measured second-harmonic power, W");
  shg->add_option("--p-fh-w", shg_flags.p_fh_w, "Measured fundamental power, W");
  shg->add_option("--t-sh", shg_flags.t_sh, "Second-harmonic out-coupling transmission (0-1)")->capture_default_str();
  shg->add_option("--t-fh", shg_flags.t_fh, "Fundamental out-coupling transmission (0-1)")->capture_default_str();
  shg->add_option("--length-cm", shg_flags.length_cm, "Waveguide length in cm (default geometry.length_mm)");
  shg->add_option("--loss-db-per-cm", shg_flags.loss_db_per_cm, "Fundamental propagation loss, dB/cm");
  shg->add_flag("--predict", shg_flags.predict, "Compute the theoretical efficiency from solved modes");

  std::optional<double> pair_rate;
  std::optional<double> duration;
  auto* spdc = app.add_subcommand("spdc-sim", "Simulate a detector time-tag record");
  spdc->add_option("--pair-rate-hz", pair_rate, "On-chip pair rate, Hz (overrides spdc.pair_rate_hz)");
  spdc->add_option("--duration-s", duration, "Acquisition time, s (overrides spdc.duration_s)");

  std::string input;
  std::optional<double> window;
  std::optional<double> bin;
  std::optional<double> span;
  std::optional<double> analyze_duration;
  auto* analyze = app.add_subcommand("analyze", "Coincidence analysis of a time-tag record");
  analyze->add_option("--input", input, "Time-tag file (binary or CSV)")->required()->check(CLI::ExistingFile);
  analyze->add_option("--window-ps", window, "Coincidence window, ps (overrides spdc.coincidence_window_ps)");
  analyze->add_option("--bin-ps", bin, "Histogram bin, ps (overrides spdc.histogram_bin_ps)");
  analyze->add_option("--span-ps", span, "Histogram half-span, ps (overrides spdc.histogram_span_ps)");
  analyze->add_option("--duration-s", analyze_duration, "Acquisition time, s (CSV input only)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    return report_error(err, {}, "UsageError", e.what(), kExitUsage);
  }

  Context ctx;
  ctx.out = &out;
  ctx.err = &err;
  ctx.threads = threads;
  ctx.verbose = verbose;
  ctx.use_cache = !no_cache;
  ctx.command = app.get_subcommands().front()->get_name();
  fs::path target_dir = out_dir;
  const auto started = std::chrono::steady_clock::now();
  try {
    if (!config_path.empty()) ctx.config = RunConfig::from_yaml_file(config_path);
    auto& cfg = ctx.config;
    if (!out_dir.empty()) cfg.io.output_dir = out_dir;
    if (spacing) cfg.solver.raster.spacing_nm = *spacing;
    if (seed) cfg.spdc.spec.rng_seed = *seed;
    if (pair_rate) cfg.spdc.spec.pair_rate_hz = *pair_rate;
    if (duration) cfg.spdc.spec.duration_s = *duration;
    if (window) cfg.spdc.spec.coincidence_window_ps = *window;
    if (bin) cfg.spdc.spec.histogram_bin_ps = *bin;
    if (span) cfg.spdc.histogram_span_ps = *span;
    cfg.finalize();
    target_dir = cfg.io.output_dir;
    std::error_code ec;
    fs::create_directories(cfg.io.output_dir, ec);
    if (ec) throw Error(Errc::io_error, "cannot create output directory " + cfg.io.output_dir.string());

    const std::map<std::string, std::function<void()>> commands{
        {"materials", [&] { cmd_materials(ctx, wl_min, wl_max, wl_samples); }},
        {"modes", [&] { cmd_modes(ctx, signal_count, write_fields); }},
        {"overlap", [&] { cmd_overlap(ctx, fiber_loss); }},
        {"pm-sweep", [&] { cmd_pm_sweep(ctx, find_width); }},
        {"pm-curve", [&] { cmd_pm_curve(ctx); }},
        {"shg", [&] { cmd_shg(ctx, shg_flags); }},
        {"spdc-sim", [&] { cmd_spdc_sim(ctx); }},
        {"analyze", [&] { cmd_analyze(ctx, input, analyze_duration); }},
    };
    commands.at(ctx.command)();
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_manifest(ctx, seconds);
    ctx.log("done in " + num(seconds) + " s");
    return kExitOk;
  } catch (const Error& e) {
    return report_error(err, target_dir, std::string(to_string(e.code())), e.what(), exit_code_for(e.code()));
  } catch (const std::exception& e) {
    return report_error(err, target_dir, "InternalError", e.what(), kExitInternal);
  }
}

}  // namespace mpmwg::cli
