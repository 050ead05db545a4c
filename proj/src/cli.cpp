#include "iontrap/cli.hpp"

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "iontrap/config.hpp"
#include "iontrap/error.hpp"

namespace iontrap {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  std::string preset;
  std::vector<std::string> overrides;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::optional<int> shots;
  std::string out_dir;
  std::string tag;
  bool resume = false;
  bool maximize = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "JSON configuration file");
  cmd->add_option("--preset", o.preset, "Bundled figure preset (fig2, fig3a-d, fig4, fig5, figS1-S3)");
  cmd->add_option("--set", o.overrides, "Override a config value, e.g. model.rabi_mhz=1.9")->take_all();
  cmd->add_option("--workers", o.workers, "Worker threads for sweeps (default IONTRAP_NM_WORKERS or 1)");
  cmd->add_option("--seed", o.seed, "Shot-noise seed");
  cmd->add_option("--shots", o.shots, "Measurement cycles per Bloch component; enables shot noise");
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_option("--tag", o.tag, "File-name tag for sweep outputs");
  cmd->add_flag("--maximize", o.maximize, "Maximize NM over orthogonal initial pairs");
}

json assemble_config(const Options& o) {
  if (o.config_path.empty() && o.preset.empty()) throw ConfigError("--config", "a config file or --preset is required");
  json j = o.preset.empty() ? json::object() : preset_json(o.preset);
  if (!o.config_path.empty()) j.merge_patch(read_json_file(o.config_path));
  for (const auto& s : o.overrides) apply_override(j, s);
  if (o.shots) j["shots"]["n_cycles"] = *o.shots;
  if (o.seed) {
    if (!j.contains("shots") || j["shots"].is_null()) {
      throw ConfigError("--seed", "shot noise is not enabled; add --shots or a shots section");
    }
    j["shots"]["seed"] = *o.seed;
  }
  if (o.maximize) j["maximize"]["enabled"] = true;
  if (!o.out_dir.empty()) j["output"]["dir"] = o.out_dir;
  if (!o.tag.empty()) j["output"]["tag"] = o.tag;
  return j;
}

fs::path prepare_output_dir(const std::string& dir) {
  const fs::path path(dir);
  std::error_code ec;
  fs::create_directories(path, ec);
  const fs::path probe = path / ".iontrap_write_probe";
  {
    std::ofstream f(probe);
    if (ec || !f) throw ConfigError("output.dir", "'" + dir + "' is not writable");
  }
  fs::remove(probe, ec);
  return path;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("output.dir", "cannot write " + path.string());
  f << text;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json trajectory_json(const QubitTrajectory& t) {
  json j;
  j["t_us"] = t.times;
  json sx = json::array(), sy = json::array(), sz = json::array();
  for (const auto& b : t.bloch) {
    sx.push_back(b[0]);
    sy.push_back(b[1]);
    sz.push_back(b[2]);
  }
  j["sx"] = sx;
  j["sy"] = sy;
  j["sz"] = sz;
  if (t.bloch_err) {
    json ex = json::array(), ey = json::array(), ez = json::array();
    for (const auto& e : *t.bloch_err) {
      ex.push_back(e[0]);
      ey.push_back(e[1]);
      ez.push_back(e[2]);
    }
    j["sx_err"] = ex;
    j["sy_err"] = ey;
    j["sz_err"] = ez;
  }
  return j;
}

json nm_result_json(const NMResult& r) {
  json j;
  j["t_us"] = r.times;
  j["D"] = r.trace_distance;
  if (r.trace_distance_err) j["D_err"] = *r.trace_distance_err;
  j["sigma"] = r.sigma;
  if (r.sigma_err) j["sigma_err"] = *r.sigma_err;
  return j;
}

json point_summary(const SweepPoint& p, const std::vector<std::string>& names) {
  json j;
  for (std::size_t a = 0; a < names.size(); ++a) j[names[a]] = p.values[a];
  j["nm"] = p.nm;
  j["nm_err"] = optional_number(p.nm_err);
  return j;
}

int cmd_evolve(const RunConfig& cfg, const json& echo, std::ostream& out) {
  const fs::path dir = prepare_output_dir(cfg.output_dir);
  const PipelineSpec& p = cfg.pipeline;
  const PairRun run = nm_for_pair(p.initial1, p.initial2, p.model, p.grid, p.pair_options());
  if (cfg.format == OutputFormat::csv) {
    write_trajectory_csv((dir / "trajectory_1.csv").string(), run.traj1);
    write_trajectory_csv((dir / "trajectory_2.csv").string(), run.traj2);
  } else {
    json data;
    data["trajectory_1"] = trajectory_json(run.traj1);
    data["trajectory_2"] = trajectory_json(run.traj2);
    write_text(dir / "trajectories.json", data.dump(2) + "\n");
  }
  write_text(dir / "config.json", echo.dump(2) + "\n");
  for (const auto& w : run.warnings) out << "warning: " << w << '\n';
  out << "wrote trajectories to " << dir.string() << '\n';
  return 0;
}

int cmd_nm(const RunConfig& cfg, const json& echo, std::ostream& out) {
  const fs::path dir = prepare_output_dir(cfg.output_dir);
  const PipelineRun run = run_pipeline(cfg.pipeline);
  if (cfg.format == OutputFormat::csv) {
    write_nm_csv((dir / "nm.csv").string(), run.result);
  } else {
    write_text(dir / "nm.json", nm_result_json(run.result).dump(2) + "\n");
  }
  json summary;
  summary["nm"] = run.result.nm;
  summary["nm_err"] = optional_number(run.result.nm_err);
  summary["dt_us"] = run.result.dt;
  summary["singular_points"] = run.result.singular_points;
  summary["best_theta"] = optional_number(run.best_theta);
  summary["best_phi"] = optional_number(run.best_phi);
  summary["warnings"] = run.warnings;
  summary["version"] = kVersion;
  summary["config"] = echo;
  write_text(dir / "nm_summary.json", summary.dump(2) + "\n");
  for (const auto& w : run.warnings) out << "warning: " << w << '\n';
  char buf[96];
  std::snprintf(buf, sizeof buf, "nm = %.17g", run.result.nm);
  out << buf;
  if (run.result.nm_err) {
    std::snprintf(buf, sizeof buf, " +/- %.17g", *run.result.nm_err);
    out << buf;
  }
  out << "\nwrote " << (dir / "nm_summary.json").string() << '\n';
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const json& echo, const Options& o, std::ostream& out) {
  const SweepSpec spec = cfg.sweep_spec();
  spec.validate();
  const fs::path dir = prepare_output_dir(cfg.output_dir);
  const std::string kind = to_string(spec.kind);
  const std::string stem = "sweep_" + kind + "_" + (cfg.tag.empty() ? utc_timestamp() : cfg.tag);
  const std::string header = echo.dump();

  SweepRunOptions run_opts;
  run_opts.workers = o.workers ? *o.workers : default_workers();
  if (run_opts.workers < 1) throw ConfigError("--workers", "must be >= 1");
  run_opts.journal_path = (dir / ("sweep_" + kind + "_" + hex64(fnv1a(header)) + ".journal")).string();
  run_opts.journal_header = header;
  run_opts.resume = o.resume;
  const std::size_t total = spec.size();
  std::size_t finished = 0;
  run_opts.on_point = [&](const SweepPoint& p) {
    ++finished;
    out << "[" << finished << "] point " << p.index + 1 << "/" << total << " nm=" << p.nm << '\n' << std::flush;
  };
  const SweepResult result = run_sweep(spec, run_opts);

  if (cfg.format == OutputFormat::csv) {
    write_sweep_csv((dir / (stem + ".csv")).string(), result);
  } else {
    json data = json::array();
    for (const auto& p : result.points) data.push_back(point_summary(p, result.axis_names));
    write_text(dir / (stem + ".data.json"), data.dump(2) + "\n");
  }

  json meta;
  meta["version"] = kVersion;
  meta["timestamp"] = utc_timestamp();
  meta["kind"] = kind;
  meta["axes"] = result.axis_names;
  meta["argmax"] = result.argmax;
  json points = json::array();
  for (const auto& p : result.points) {
    json j = point_summary(p, result.axis_names);
    j["wall_time_s"] = p.wall_time_s;
    j["warnings"] = p.warnings;
    points.push_back(j);
  }
  meta["points"] = points;
  if (spec.kind == SweepKind::circle) {
    json ridges = json::array();
    for (const auto& r : result.ridges) {
      ridges.push_back({{"detuning_mhz", r.detuning_mhz},
                        {"rabi_mhz", r.rabi_mhz},
                        {"nm_smoothed", r.nm_smoothed},
                        {"mode", r.mode},
                        {"cells_from_circle", r.mode >= 0 ? json(r.cells_from_circle) : json(nullptr)}});
    }
    meta["ridges"] = ridges;
  }
  meta["config"] = echo;
  write_text(dir / (stem + ".json"), meta.dump(2) + "\n");

  out << "argmax:";
  for (std::size_t a = 0; a < result.argmax.size(); ++a) out << ' ' << result.axis_names[a] << '=' << result.argmax[a];
  out << "\nwrote " << (dir / stem).string() << ".{csv,json}\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Strong-field trapped-ion dynamics and non-Markovianity"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;
  CLI::App* evolve = app.add_subcommand("evolve", "Evolve the initial pair and write Bloch trajectories");
  CLI::App* nm = app.add_subcommand("nm", "Compute the trace distance, its derivative and NM for one configuration");
  CLI::App* sweep = app.add_subcommand("sweep", "Scan NM over the configured sweep grid");
  for (CLI::App* cmd : {evolve, nm, sweep}) add_common(cmd, o);
  sweep->add_flag("--resume", o.resume, "Continue an interrupted sweep from its journal");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  json echo;
  RunConfig cfg;
  try {
    cfg = parse_config(assemble_config(o));
    echo = config_to_json(cfg);
    if (*evolve) return cmd_evolve(cfg, echo, out);
    if (*nm) return cmd_nm(cfg, echo, out);
    return cmd_sweep(cfg, echo, o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IntegrationFailure& e) {
    err << "integration failure: " << e.what() << "\nparameters:\n" << echo.dump(2) << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace iontrap
