#pragma once

// Parameter scans of the non-Markovianity pipeline: NM versus Rabi
// frequency, the (detuning, Rabi) plane with ridge extraction, and the
// convergence studies over window, resolution, shot count and dephasing.

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "iontrap/nmeasure.hpp"

namespace iontrap {

/// Everything needed to produce one NM value.
struct PipelineSpec {
  ModelParams model;
  TimeGrid grid;
  InitialCondition initial1;
  InitialCondition initial2;
  std::optional<ShotConfig> shots;
  Frame frame = Frame::lab;
  double angle_factor = 1.0;
  bool maximize = false;
  int theta_steps = 11;
  int phi_steps = 12;
  EvolveOptions evolve;

  void validate() const;
  PairOptions pair_options() const;
};

struct PipelineRun {
  NMResult result;
  QubitTrajectory traj1, traj2;
  std::optional<double> best_theta, best_phi;
  std::vector<std::string> warnings;
};

PipelineRun run_pipeline(const PipelineSpec& spec);

enum class SweepKind { omega, circle, window, resolution, repetitions, dephasing };

std::string to_string(SweepKind kind);
SweepKind sweep_kind_from_string(const std::string& s);
/// Axis names a sweep kind scans, in CSV column order.
std::vector<std::string> sweep_axis_names(SweepKind kind);

struct SweepAxis {
  std::string name;
  double min = 0.0;
  double max = 1.0;
  int n_points = 2;
  /// When non-empty, used verbatim instead of linspace(min, max, n_points).
  std::vector<double> values;

  std::vector<double> points() const;
  void validate(const std::string& where) const;
};

struct SweepSpec {
  SweepKind kind = SweepKind::omega;
  std::vector<SweepAxis> axes;
  PipelineSpec base;

  void validate() const;
  /// Number of grid points (product of axis lengths).
  std::size_t size() const;
  /// Axis values of point `index`; the last axis varies fastest.
  std::vector<double> point_values(std::size_t index) const;
};

/// Applies one axis value to a copy of the base pipeline. `t_end` keeps the
/// base sample spacing, `n_points_time` keeps the window.
void apply_axis_value(PipelineSpec& spec, const std::string& axis, double value);

struct SweepPoint {
  std::size_t index = 0;
  std::vector<double> values;
  double nm = 0.0;
  std::optional<double> nm_err;
  double wall_time_s = 0.0;
  std::vector<std::string> warnings;
};

struct RidgePoint {
  double detuning_mhz = 0.0;
  double rabi_mhz = 0.0;
  double nm_smoothed = 0.0;
  /// Mode whose circle delta^2 + Omega^2 = nu^2 lies closest, or -1 if none is real.
  int mode = -1;
  /// |Omega - sqrt(nu^2 - delta^2)| in units of the Rabi grid step.
  double cells_from_circle = 0.0;
};

struct SweepResult {
  SweepKind kind = SweepKind::omega;
  std::vector<std::string> axis_names;
  std::vector<SweepPoint> points;  // sorted by index
  /// Axis values of the largest NM.
  std::vector<double> argmax;
  std::vector<RidgePoint> ridges;  // circle scans only
};

struct SweepRunOptions {
  int workers = 1;
  /// Completed points are appended here as JSON lines (one per point).
  std::optional<std::string> journal_path;
  /// First journal line; a resumed journal must start with the same text.
  std::string journal_header;
  bool resume = false;
  std::function<void(const SweepPoint&)> on_point;
};

SweepResult run_sweep(const SweepSpec& spec, const SweepRunOptions& options = {});

/// Three-point moving average; the endpoints average their two available samples.
std::vector<double> smooth3(const std::vector<double>& v);

/// Indices of strict local maxima of `v` (endpoints count when they exceed their neighbour).
std::vector<std::size_t> local_maxima(const std::vector<double>& v);

/// Per-detuning-column ridge of a circle scan (axes detuning_mhz, rabi_mhz).
std::vector<RidgePoint> extract_ridges(const SweepResult& result, const std::vector<ModeSpec>& modes);

/// Default worker count: IONTRAP_NM_WORKERS if set, otherwise 1.
int default_workers();

/// CSV with the axis columns followed by nm, nm_err.
void write_sweep_csv(const std::string& path, const SweepResult& result);

}  // namespace iontrap
