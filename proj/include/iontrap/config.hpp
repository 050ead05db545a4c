#pragma once

// JSON run configuration.
//
//   {
//     "model": {
//       "rabi_mhz": 2.245, "detuning_mhz": 0.0, "laser_phase": 0.0,
//       "gamma_plus_mhz": 0.0049, "gamma_minus_mhz": 0.0008, "gamma_units": "per_us",
//       "modes": [{"frequency_mhz": 2.32, "lamb_dicke": 0.069, "fock_dim": 15, "nbar": 0.05}]
//     },
//     "grid": {"t_start": 0.0, "t_end": 100.0, "n_points": 201},
//     "initial": {
//       "pair": ["plus_x", "minus_x"],          // labels or {"theta": t, "phi": p}
//       "motion": [{"kind": "thermal", "nbar": 0.05}],   // optional, one per mode
//       "prep": "ideal"
//     },
//     "frame": "lab", "angle_factor": 1.0,
//     "integrator": {"step_bound": 0.05, "substep_multiplier": 1},
//     "shots": {"n_cycles": 600, "seed": 7},   // optional
//     "maximize": {"enabled": false, "theta_steps": 11, "phi_steps": 12},
//     "sweep": {"kind": "omega", "axes": [{"name": "rabi_mhz", "min": 0.3, "max": 3.8, "n_points": 8}]},
//     "output": {"dir": "out", "format": "csv", "tag": ""}
//   }
//
// Required: model.modes with frequency_mhz and lamb_dicke for each mode, and
// grid.t_end / grid.n_points. Everything else has a default. Unknown keys are
// rejected.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "iontrap/sweep.hpp"

namespace iontrap {

enum class OutputFormat { csv, json };

struct RunConfig {
  PipelineSpec pipeline;
  std::optional<SweepKind> sweep_kind;
  std::vector<SweepAxis> sweep_axes;
  std::string output_dir = "out";
  OutputFormat format = OutputFormat::csv;
  /// File-name tag for sweep outputs; empty means a UTC timestamp.
  std::string tag;

  SweepSpec sweep_spec() const;
};

/// Parses and validates; throws ConfigError naming the offending field.
RunConfig parse_config(const nlohmann::json& j);
/// Fully resolved configuration; parse_config(config_to_json(c)) reproduces c.
nlohmann::json config_to_json(const RunConfig& c);

/// Reads a JSON file; syntax errors become ConfigError with line and column.
nlohmann::json read_json_file(const std::string& path);

/// Applies `key=value` with a dotted key (array elements as `modes.0` or
/// `modes[0]`). The value is parsed as JSON when possible, otherwise kept as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// Names and raw JSON text of the bundled figure presets.
const std::vector<std::pair<std::string, std::string>>& preset_sources();
nlohmann::json preset_json(const std::string& name);

/// Stable 64-bit FNV-1a hash, used to key sweep journals to a configuration.
std::uint64_t fnv1a(const std::string& text);

}  // namespace iontrap
