#include "iontrap/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "iontrap/error.hpp"

namespace iontrap {

void PipelineSpec::validate() const {
  model.validate();
  grid.validate();
  initial1.qubit.validate();
  initial2.qubit.validate();
  if (shots) shots->validate();
  if (maximize) {
    theta_grid(theta_steps);
    phi_grid(phi_steps);
  }
  if (grid.n_points < 3) throw ConfigError("grid.n_points", "NM needs at least 3 samples");
}

PairOptions PipelineSpec::pair_options() const {
  PairOptions o;
  o.frame = frame;
  o.angle_factor = angle_factor;
  o.shots = shots;
  o.evolve = evolve;
  return o;
}

PipelineRun run_pipeline(const PipelineSpec& spec) {
  spec.validate();
  PipelineRun run;
  if (spec.maximize) {
    if (spec.initial1.motion.size() != spec.initial2.motion.size()) {
      throw ConfigError("initial", "maximization needs the same motional state on both branches");
    }
    MaximizedNM best = nm_maximized(spec.model, spec.grid, spec.theta_steps, spec.phi_steps, spec.initial1.motion,
                                    spec.pair_options());
    run.result = std::move(best.result);
    run.best_theta = best.theta;
    run.best_phi = best.phi;
    return run;
  }
  PairRun pair = nm_for_pair(spec.initial1, spec.initial2, spec.model, spec.grid, spec.pair_options());
  run.result = std::move(pair.result);
  run.traj1 = std::move(pair.traj1);
  run.traj2 = std::move(pair.traj2);
  run.warnings = std::move(pair.warnings);
  return run;
}

std::string to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::omega: return "omega";
    case SweepKind::circle: return "circle";
    case SweepKind::window: return "window";
    case SweepKind::resolution: return "resolution";
    case SweepKind::repetitions: return "repetitions";
    case SweepKind::dephasing: return "dephasing";
  }
  return "?";
}

SweepKind sweep_kind_from_string(const std::string& s) {
  for (auto k : {SweepKind::omega, SweepKind::circle, SweepKind::window, SweepKind::resolution,
                 SweepKind::repetitions, SweepKind::dephasing}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("sweep.kind", "unknown sweep kind '" + s + "'");
}

std::vector<std::string> sweep_axis_names(SweepKind kind) {
  switch (kind) {
    case SweepKind::omega: return {"rabi_mhz"};
    case SweepKind::circle: return {"detuning_mhz", "rabi_mhz"};
    case SweepKind::window: return {"t_end"};
    case SweepKind::resolution: return {"n_points_time"};
    case SweepKind::repetitions: return {"n_cycles"};
    case SweepKind::dephasing: return {"gamma_plus_mhz"};
  }
  return {};
}

std::vector<double> SweepAxis::points() const {
  if (!values.empty()) return values;
  std::vector<double> v(n_points);
  for (int i = 0; i < n_points; ++i) {
    v[i] = n_points == 1 ? min : min + (max - min) * i / (n_points - 1);
  }
  return v;
}

void SweepAxis::validate(const std::string& where) const {
  static const std::vector<std::string> known{"rabi_mhz", "detuning_mhz", "t_end",
                                              "n_points_time", "n_cycles", "gamma_plus_mhz"};
  if (std::find(known.begin(), known.end(), name) == known.end()) {
    throw ConfigError(where + ".name", "unknown axis '" + name + "'");
  }
  if (values.empty()) {
    if (n_points < 1) throw ConfigError(where + ".n_points", "must be >= 1");
    if (n_points > 1 && !(max > min)) throw ConfigError(where + ".max", "must be greater than min");
  }
}

void SweepSpec::validate() const {
  const auto names = sweep_axis_names(kind);
  if (axes.size() != names.size()) {
    throw ConfigError("sweep.axes", "kind '" + to_string(kind) + "' needs " + std::to_string(names.size()) + " axes");
  }
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const std::string where = "sweep.axes[" + std::to_string(i) + "]";
    axes[i].validate(where);
    if (axes[i].name != names[i]) throw ConfigError(where + ".name", "expected '" + names[i] + "'");
  }
  if (kind == SweepKind::repetitions && !base.shots) {
    throw ConfigError("shots", "a repetitions sweep needs a shots section");
  }
  base.validate();
}

std::size_t SweepSpec::size() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.points().size();
  return n;
}

std::vector<double> SweepSpec::point_values(std::size_t index) const {
  std::vector<double> v(axes.size());
  for (std::size_t k = axes.size(); k-- > 0;) {
    const auto pts = axes[k].points();
    v[k] = pts[index % pts.size()];
    index /= pts.size();
  }
  return v;
}

void apply_axis_value(PipelineSpec& spec, const std::string& axis, double value) {
  if (axis == "rabi_mhz") {
    spec.model.rabi_mhz = value;
  } else if (axis == "detuning_mhz") {
    spec.model.detuning_mhz = value;
  } else if (axis == "gamma_plus_mhz") {
    spec.model.gamma_plus_mhz = value;
  } else if (axis == "t_end") {
    const double dt = spec.grid.spacing();
    const double steps = std::round((value - spec.grid.t_start) / dt);
    if (std::abs(steps * dt - (value - spec.grid.t_start)) > 1e-9 * std::max(1.0, value)) {
      throw ConfigError("sweep.axes.t_end", "window must be a whole number of sample spacings");
    }
    spec.grid.t_end = value;
    spec.grid.n_points = static_cast<int>(steps) + 1;
  } else if (axis == "n_points_time") {
    spec.grid.n_points = static_cast<int>(std::lround(value));
  } else if (axis == "n_cycles") {
    if (!spec.shots) spec.shots = ShotConfig{};
    spec.shots->n_cycles = static_cast<int>(std::lround(value));
  } else {
    throw ConfigError("sweep.axes", "unknown axis '" + axis + "'");
  }
}

std::vector<double> smooth3(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<double> s(n);
  if (n == 1) return v;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      s[i] = 0.5 * (v[0] + v[1]);
    } else if (i + 1 == n) {
      s[i] = 0.5 * (v[n - 2] + v[n - 1]);
    } else {
      s[i] = (v[i - 1] + v[i] + v[i + 1]) / 3.0;
    }
  }
  return s;
}

std::vector<std::size_t> local_maxima(const std::vector<double>& v) {
  std::vector<std::size_t> idx;
  const std::size_t n = v.size();
  if (n < 2) return idx;
  if (v[0] > v[1]) idx.push_back(0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (v[i] > v[i - 1] && v[i] >= v[i + 1]) idx.push_back(i);
  }
  if (v[n - 1] > v[n - 2]) idx.push_back(n - 1);
  return idx;
}

std::vector<RidgePoint> extract_ridges(const SweepResult& result, const std::vector<ModeSpec>& modes) {
  if (result.axis_names != std::vector<std::string>{"detuning_mhz", "rabi_mhz"}) {
    throw std::invalid_argument("extract_ridges: expects a detuning x rabi scan");
  }
  std::map<double, std::vector<std::pair<double, double>>> columns;
  for (const auto& p : result.points) columns[p.values[0]].push_back({p.values[1], p.nm});
  std::vector<RidgePoint> ridges;
  for (auto& [delta, col] : columns) {
    std::sort(col.begin(), col.end());
    if (col.size() < 2) continue;
    const double step = (col.back().first - col.front().first) / static_cast<double>(col.size() - 1);
    std::vector<double> nm(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) nm[i] = col[i].second;
    const std::vector<double> s = smooth3(nm);
    for (std::size_t i : local_maxima(s)) {
      RidgePoint rp;
      rp.detuning_mhz = delta;
      rp.rabi_mhz = col[i].first;
      rp.nm_smoothed = s[i];
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < modes.size(); ++m) {
        const double nu = modes[m].frequency_mhz;
        if (std::abs(delta) > nu) continue;
        const double target = std::sqrt(nu * nu - delta * delta);
        const double cells = std::abs(rp.rabi_mhz - target) / step;
        if (cells < best) {
          best = cells;
          rp.mode = static_cast<int>(m);
        }
      }
      rp.cells_from_circle = rp.mode >= 0 ? best : std::numeric_limits<double>::quiet_NaN();
      ridges.push_back(rp);
    }
  }
  return ridges;
}

int default_workers() {
  if (const char* env = std::getenv("IONTRAP_NM_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

namespace {

nlohmann::json point_to_json(const SweepPoint& p) {
  nlohmann::json j;
  j["index"] = p.index;
  j["values"] = p.values;
  j["nm"] = p.nm;
  j["nm_err"] = p.nm_err ? nlohmann::json(*p.nm_err) : nlohmann::json(nullptr);
  j["wall_time_s"] = p.wall_time_s;
  j["warnings"] = p.warnings;
  return j;
}

SweepPoint point_from_json(const nlohmann::json& j) {
  SweepPoint p;
  p.index = j.at("index").get<std::size_t>();
  p.values = j.at("values").get<std::vector<double>>();
  p.nm = j.at("nm").get<double>();
  if (!j.at("nm_err").is_null()) p.nm_err = j.at("nm_err").get<double>();
  p.wall_time_s = j.at("wall_time_s").get<double>();
  p.warnings = j.at("warnings").get<std::vector<std::string>>();
  return p;
}

std::map<std::size_t, SweepPoint> load_journal(const std::string& path, const std::string& header,
                                               std::size_t total) {
  std::map<std::size_t, SweepPoint> done;
  std::ifstream in(path);
  if (!in) return done;
  std::string line;
  if (!std::getline(in, line)) return done;
  if (line != header) {
    throw ConfigError("resume", "journal " + path + " was written for a different configuration");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      break;  // truncated last line from an interrupted run
    }
    SweepPoint p = point_from_json(j);
    if (p.index < total) done[p.index] = std::move(p);
  }
  return done;
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, const SweepRunOptions& options) {
  spec.validate();
  const std::size_t total = spec.size();
  SweepResult result;
  result.kind = spec.kind;
  result.axis_names = sweep_axis_names(spec.kind);

  std::map<std::size_t, SweepPoint> done;
  if (options.journal_path && options.resume) done = load_journal(*options.journal_path, options.journal_header, total);
  std::ofstream journal;
  if (options.journal_path) {
    // Rewritten from the loaded points so a partial last line from an interrupted run is dropped.
    journal.open(*options.journal_path, std::ios::trunc);
    if (!journal) throw std::runtime_error("cannot open journal " + *options.journal_path);
    journal << options.journal_header << '\n';
    for (const auto& [i, p] : done) journal << point_to_json(p).dump() << '\n';
    journal << std::flush;
  }

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < total; ++i) {
    if (!done.count(i)) todo.push_back(i);
  }

  // Shot-count scans reuse one noiseless pair of trajectories.
  std::optional<PipelineRun> noiseless;
  if (spec.kind == SweepKind::repetitions && !todo.empty()) {
    PipelineSpec clean = spec.base;
    clean.shots.reset();
    clean.maximize = false;
    noiseless = run_pipeline(clean);
  }

  std::vector<SweepPoint> fresh(todo.size());
  std::vector<std::exception_ptr> errors(todo.size());
  std::atomic<std::size_t> next{0};
  std::mutex sink;
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= todo.size()) return;
      const std::size_t index = todo[k];
      SweepPoint point;
      point.index = index;
      point.values = spec.point_values(index);
      const auto start = std::chrono::steady_clock::now();
      try {
        PipelineSpec p = spec.base;
        for (std::size_t a = 0; a < point.values.size(); ++a) apply_axis_value(p, result.axis_names[a], point.values[a]);
        if (noiseless) {
          p.shots->validate();
          const QubitTrajectory n1 = sample_trajectory(noiseless->traj1, *p.shots, 1);
          const QubitTrajectory n2 = sample_trajectory(noiseless->traj2, *p.shots, 2);
          const NMResult r = error_chain(n1, n2);
          point.nm = r.nm;
          point.nm_err = r.nm_err;
          point.warnings = noiseless->warnings;
        } else {
          const PipelineRun run = run_pipeline(p);
          point.nm = run.result.nm;
          point.nm_err = run.result.nm_err;
          point.warnings = run.warnings;
        }
      } catch (const IntegrationFailure& e) {
        std::ostringstream msg;
        msg << e.what() << " at sweep point";
        for (std::size_t a = 0; a < point.values.size(); ++a) msg << ' ' << result.axis_names[a] << '=' << point.values[a];
        errors[k] = std::make_exception_ptr(IntegrationFailure(msg.str()));
        next.store(todo.size());
        return;
      } catch (...) {
        errors[k] = std::current_exception();
        next.store(todo.size());
        return;
      }
      point.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      {
        std::lock_guard<std::mutex> lock(sink);
        if (journal.is_open()) journal << point_to_json(point).dump() << '\n' << std::flush;
        if (options.on_point) options.on_point(point);
      }
      fresh[k] = std::move(point);
    }
  };
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(std::max<std::size_t>(1, todo.size()))));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (auto& p : fresh) done[p.index] = std::move(p);
  result.points.reserve(total);
  for (auto& [i, p] : done) result.points.push_back(std::move(p));

  if (!result.points.empty()) {
    const auto best = std::max_element(result.points.begin(), result.points.end(),
                                       [](const SweepPoint& a, const SweepPoint& b) { return a.nm < b.nm; });
    result.argmax = best->values;
  }
  if (spec.kind == SweepKind::circle) result.ridges = extract_ridges(result, spec.base.model.modes);
  return result;
}

void write_sweep_csv(const std::string& path, const SweepResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& name : result.axis_names) out << name << ',';
  out << "nm,nm_err\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (const auto& p : result.points) {
    for (double v : p.values) {
      put(v);
      out << ',';
    }
    put(p.nm);
    out << ',';
    if (p.nm_err) put(*p.nm_err);
    out << '\n';
  }
}

}  // namespace iontrap
