#include "iontrap/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "iontrap/error.hpp"

namespace iontrap {

using nlohmann::json;

namespace {

// Strict view of one JSON object: every key must be consumed.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) { return has(key) ? as_number(key) : fallback; }
  double required_number(const std::string& key) {
    if (!has(key)) throw ConfigError(child(key), "missing required field");
    return as_number(key);
  }
  int integer(const std::string& key, int fallback) { return has(key) ? as_integer(key) : fallback; }
  int required_integer(const std::string& key) {
    if (!has(key)) throw ConfigError(child(key), "missing required field");
    return as_integer(key);
  }
  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(child(key), "expected a string");
    return v.get<std::string>();
  }
  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(child(key), "expected true or false");
    return v.get<bool>();
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(child(item.key()), "unknown field");
    }
  }

 private:
  double as_number(const std::string& key) const {
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(child(key), "expected a number");
    return v.get<double>();
  }
  int as_integer(const std::string& key) const {
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(child(key), "expected an integer");
    const double d = v.get<double>();
    if (d != std::floor(d) || std::abs(d) > 2e9) throw ConfigError(child(key), "expected an integer");
    return static_cast<int>(d);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string indexed(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

GammaUnits gamma_units_from(const std::string& s, const std::string& where) {
  if (s == "per_us") return GammaUnits::per_us;
  if (s == "mhz_angular") return GammaUnits::mhz_angular;
  throw ConfigError(where, "expected 'per_us' or 'mhz_angular'");
}

ModelParams parse_model(const json& j) {
  Fields f(j, "model");
  ModelParams m;
  m.rabi_mhz = f.number("rabi_mhz", 0.0);
  m.detuning_mhz = f.number("detuning_mhz", 0.0);
  m.laser_phase = f.number("laser_phase", 0.0);
  m.gamma_plus_mhz = f.number("gamma_plus_mhz", 0.0);
  m.gamma_minus_mhz = f.number("gamma_minus_mhz", m.gamma_plus_mhz);
  m.gamma_units = gamma_units_from(f.text("gamma_units", "per_us"), "model.gamma_units");
  if (!f.has("modes")) throw ConfigError("model.modes", "missing required field");
  const json& modes = f.raw("modes");
  if (!modes.is_array()) throw ConfigError("model.modes", "expected an array");
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const std::string where = indexed("model.modes", i);
    Fields mf(modes[i], where);
    ModeSpec mode;
    mode.frequency_mhz = mf.required_number("frequency_mhz");
    mode.lamb_dicke = mf.required_number("lamb_dicke");
    mode.fock_dim = mf.integer("fock_dim", 15);
    mode.nbar = mf.number("nbar", 0.0);
    mf.finish();
    m.modes.push_back(mode);
  }
  f.finish();
  m.validate();
  return m;
}

TimeGrid parse_grid(const json& j) {
  Fields f(j, "grid");
  TimeGrid g;
  g.t_start = f.number("t_start", 0.0);
  g.t_end = f.required_number("t_end");
  g.n_points = f.required_integer("n_points");
  f.finish();
  g.validate();
  return g;
}

QubitSpec parse_qubit(const json& j, const std::string& where) {
  if (j.is_string()) {
    try {
      return QubitSpec::named(qubit_label_from_string(j.get<std::string>()));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where, e.what());
    }
  }
  Fields f(j, where);
  QubitSpec q = QubitSpec::angles(f.required_number("theta"), f.required_number("phi"));
  f.finish();
  try {
    q.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(where, e.what());
  }
  return q;
}

std::vector<MotionalSpec> parse_motion(const json& j) {
  if (!j.is_array()) throw ConfigError("initial.motion", "expected an array");
  std::vector<MotionalSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = indexed("initial.motion", i);
    Fields f(j[i], where);
    MotionalSpec m;
    const std::string kind = f.text("kind", "thermal");
    if (kind == "thermal") {
      m.kind = MotionalSpec::Kind::thermal;
      if (f.has("nbar")) m.nbar = f.number("nbar", 0.0);
      if (m.nbar && !(*m.nbar >= 0.0)) throw ConfigError(where + ".nbar", "must be >= 0");
    } else if (kind == "ground") {
      m.kind = MotionalSpec::Kind::ground;
    } else if (kind == "coherent") {
      m.kind = MotionalSpec::Kind::coherent;
      m.alpha = Complex(f.number("alpha_re", f.number("alpha", 0.0)), f.number("alpha_im", 0.0));
    } else {
      throw ConfigError(where + ".kind", "expected 'thermal', 'ground' or 'coherent'");
    }
    f.finish();
    out.push_back(m);
  }
  return out;
}

json qubit_to_json(const QubitSpec& q) {
  if (q.label) return to_string(*q.label);
  return json{{"theta", q.theta}, {"phi", q.phi}};
}

json motion_to_json(const std::vector<MotionalSpec>& motion) {
  json arr = json::array();
  for (const auto& m : motion) {
    switch (m.kind) {
      case MotionalSpec::Kind::thermal: {
        json o{{"kind", "thermal"}};
        if (m.nbar) o["nbar"] = *m.nbar;
        arr.push_back(o);
        break;
      }
      case MotionalSpec::Kind::ground: arr.push_back(json{{"kind", "ground"}}); break;
      case MotionalSpec::Kind::coherent:
        arr.push_back(json{{"kind", "coherent"}, {"alpha_re", m.alpha.real()}, {"alpha_im", m.alpha.imag()}});
        break;
    }
  }
  return arr;
}

}  // namespace

SweepSpec RunConfig::sweep_spec() const {
  if (!sweep_kind) throw ConfigError("sweep", "missing required section for the sweep command");
  SweepSpec s;
  s.kind = *sweep_kind;
  s.axes = sweep_axes;
  s.base = pipeline;
  return s;
}

RunConfig parse_config(const json& j) {
  Fields f(j, "");
  RunConfig c;
  PipelineSpec& p = c.pipeline;
  if (!f.has("model")) throw ConfigError("model", "missing required section");
  p.model = parse_model(f.raw("model"));
  if (!f.has("grid")) throw ConfigError("grid", "missing required section");
  p.grid = parse_grid(f.raw("grid"));

  p.initial1.qubit = QubitSpec::named(QubitLabel::plus_x);
  p.initial2.qubit = QubitSpec::named(QubitLabel::minus_x);
  if (f.has("initial")) {
    Fields fi(f.raw("initial"), "initial");
    if (fi.has("pair")) {
      const json& pair = fi.raw("pair");
      if (!pair.is_array() || pair.size() != 2) throw ConfigError("initial.pair", "expected two qubit states");
      p.initial1.qubit = parse_qubit(pair[0], "initial.pair[0]");
      p.initial2.qubit = parse_qubit(pair[1], "initial.pair[1]");
    }
    if (fi.has("motion")) {
      p.initial1.motion = parse_motion(fi.raw("motion"));
      if (!p.initial1.motion.empty() && p.initial1.motion.size() != p.model.modes.size()) {
        throw ConfigError("initial.motion", "expected one entry per mode");
      }
    }
    const std::string prep = fi.text("prep", "ideal");
    if (prep == "ideal") {
      p.initial1.prep = PrepMode::ideal;
    } else if (prep == "pulse") {
      p.initial1.prep = PrepMode::pulse;
    } else {
      throw ConfigError("initial.prep", "expected 'ideal' or 'pulse'");
    }
    fi.finish();
  }
  p.initial2.motion = p.initial1.motion;
  p.initial2.prep = p.initial1.prep;

  const std::string frame = f.text("frame", "lab");
  if (frame == "lab") {
    p.frame = Frame::lab;
  } else if (frame == "interaction") {
    p.frame = Frame::interaction;
  } else {
    throw ConfigError("frame", "expected 'lab' or 'interaction'");
  }
  p.angle_factor = f.number("angle_factor", 1.0);

  if (f.has("integrator")) {
    Fields fi(f.raw("integrator"), "integrator");
    p.evolve.step_bound = fi.number("step_bound", p.evolve.step_bound);
    p.evolve.substep_multiplier = fi.integer("substep_multiplier", p.evolve.substep_multiplier);
    fi.finish();
    if (!(p.evolve.step_bound > 0.0)) throw ConfigError("integrator.step_bound", "must be > 0");
    if (p.evolve.substep_multiplier < 1) throw ConfigError("integrator.substep_multiplier", "must be >= 1");
  }

  if (f.has("shots")) {
    Fields fs(f.raw("shots"), "shots");
    ShotConfig s;
    s.n_cycles = fs.integer("n_cycles", s.n_cycles);
    if (fs.has("seed")) {
      const json& seed = fs.raw("seed");
      if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
        throw ConfigError("shots.seed", "expected a non-negative integer");
      }
      s.seed = seed.get<std::uint64_t>();
    }
    fs.finish();
    s.validate();
    p.shots = s;
  }

  if (f.has("maximize")) {
    Fields fm(f.raw("maximize"), "maximize");
    p.maximize = fm.flag("enabled", false);
    p.theta_steps = fm.integer("theta_steps", p.theta_steps);
    p.phi_steps = fm.integer("phi_steps", p.phi_steps);
    fm.finish();
    theta_grid(p.theta_steps);
    phi_grid(p.phi_steps);
  }

  if (f.has("sweep")) {
    Fields fs(f.raw("sweep"), "sweep");
    if (!fs.has("kind")) throw ConfigError("sweep.kind", "missing required field");
    c.sweep_kind = sweep_kind_from_string(fs.text("kind", ""));
    if (!fs.has("axes")) throw ConfigError("sweep.axes", "missing required field");
    const json& axes = fs.raw("axes");
    if (!axes.is_array()) throw ConfigError("sweep.axes", "expected an array");
    for (std::size_t i = 0; i < axes.size(); ++i) {
      const std::string where = indexed("sweep.axes", i);
      Fields fa(axes[i], where);
      SweepAxis a;
      a.name = fa.text("name", "");
      if (fa.has("values")) {
        const json& v = fa.raw("values");
        if (!v.is_array() || v.empty()) throw ConfigError(where + ".values", "expected a non-empty array of numbers");
        for (const auto& x : v) {
          if (!x.is_number()) throw ConfigError(where + ".values", "expected numbers");
          a.values.push_back(x.get<double>());
        }
      } else {
        a.min = fa.required_number("min");
        a.max = fa.required_number("max");
        a.n_points = fa.required_integer("n_points");
      }
      fa.finish();
      a.validate(where);
      c.sweep_axes.push_back(a);
    }
    fs.finish();
    c.sweep_spec().validate();
  }

  if (f.has("output")) {
    Fields fo(f.raw("output"), "output");
    c.output_dir = fo.text("dir", c.output_dir);
    const std::string fmt = fo.text("format", "csv");
    if (fmt == "csv") {
      c.format = OutputFormat::csv;
    } else if (fmt == "json") {
      c.format = OutputFormat::json;
    } else {
      throw ConfigError("output.format", "expected 'csv' or 'json'");
    }
    c.tag = fo.text("tag", "");
    fo.finish();
  }
  f.finish();
  p.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  const PipelineSpec& p = c.pipeline;
  json modes = json::array();
  for (const auto& m : p.model.modes) {
    modes.push_back(
        {{"frequency_mhz", m.frequency_mhz}, {"lamb_dicke", m.lamb_dicke}, {"fock_dim", m.fock_dim}, {"nbar", m.nbar}});
  }
  json j;
  j["model"] = {{"rabi_mhz", p.model.rabi_mhz},
                {"detuning_mhz", p.model.detuning_mhz},
                {"laser_phase", p.model.laser_phase},
                {"gamma_plus_mhz", p.model.gamma_plus_mhz},
                {"gamma_minus_mhz", p.model.gamma_minus_mhz},
                {"gamma_units", p.model.gamma_units == GammaUnits::per_us ? "per_us" : "mhz_angular"},
                {"modes", modes}};
  j["grid"] = {{"t_start", p.grid.t_start}, {"t_end", p.grid.t_end}, {"n_points", p.grid.n_points}};
  j["initial"] = {{"pair", json::array({qubit_to_json(p.initial1.qubit), qubit_to_json(p.initial2.qubit)})},
                  {"motion", motion_to_json(p.initial1.motion)},
                  {"prep", p.initial1.prep == PrepMode::ideal ? "ideal" : "pulse"}};
  j["frame"] = p.frame == Frame::lab ? "lab" : "interaction";
  j["angle_factor"] = p.angle_factor;
  j["integrator"] = {{"step_bound", p.evolve.step_bound}, {"substep_multiplier", p.evolve.substep_multiplier}};
  if (p.shots) j["shots"] = {{"n_cycles", p.shots->n_cycles}, {"seed", p.shots->seed}};
  j["maximize"] = {{"enabled", p.maximize}, {"theta_steps", p.theta_steps}, {"phi_steps", p.phi_steps}};
  if (c.sweep_kind) {
    json axes = json::array();
    for (const auto& a : c.sweep_axes) {
      json o{{"name", a.name}};
      if (!a.values.empty()) {
        o["values"] = a.values;
      } else {
        o["min"] = a.min;
        o["max"] = a.max;
        o["n_points"] = a.n_points;
      }
      axes.push_back(o);
    }
    j["sweep"] = {{"kind", to_string(*c.sweep_kind)}, {"axes", axes}};
  }
  j["output"] = {{"dir", c.output_dir}, {"format", c.format == OutputFormat::csv ? "csv" : "json"}, {"tag", c.tag}};
  return j;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path);
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", path + ": " + e.what());
  }
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set", "expected key=value, got '" + assignment + "'");
  std::string key = assignment.substr(0, eq);
  const std::string value_text = assignment.substr(eq + 1);
  for (char& ch : key) {
    if (ch == '[' || ch == ']') ch = '.';
  }
  std::vector<std::string> parts;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (!part.empty()) parts.push_back(part);
  }
  json value;
  try {
    value = json::parse(value_text);
  } catch (const json::parse_error&) {
    value = value_text;
  }
  json* node = &j;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& k = parts[i];
    const bool numeric = !k.empty() && k.find_first_not_of("0123456789") == std::string::npos;
    if (numeric && node->is_array()) {
      const std::size_t idx = std::stoul(k);
      if (idx >= node->size()) throw ConfigError("--set " + key, "index out of range");
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError("--set " + key, "'" + k + "' does not name an object field");
      node = &(*node)[k];
    }
  }
  *node = value;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

json preset_json(const std::string& name) {
  for (const auto& [n, text] : preset_sources()) {
    if (n == name) return json::parse(text, nullptr, true, true);
  }
  std::string known;
  for (const auto& [n, text] : preset_sources()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("--preset", "unknown preset '" + name + "' (known: " + known + ")");
}

}  // namespace iontrap
