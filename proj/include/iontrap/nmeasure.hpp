#pragma once

// Trace distance, its central-difference gradient and the BLP
// non-Markovianity sum N = sum_{sigma > 0} sigma dt, with first-order
// propagation of tomography errors.

#include <optional>
#include <string>
#include <vector>

#include "iontrap/dynamics.hpp"
#include "iontrap/noise.hpp"

namespace iontrap {

struct NMResult {
  std::vector<double> times;
  std::vector<double> trace_distance;
  std::optional<std::vector<double>> trace_distance_err;
  /// sigma(t_i) for interior samples i = 1 .. n-2, aligned with times[1 .. n-2].
  std::vector<double> sigma;
  std::optional<std::vector<double>> sigma_err;
  double nm = 0.0;
  std::optional<double> nm_err;
  /// Sample indices where D < 1e-12 and dD fell back to the conservative bound.
  std::vector<int> singular_points;
  double dt = 0.0;
};

/// (1/2) tr |rho1 - rho2| from the eigenvalues of the difference.
double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2);
/// (1/2) |s1 - s2|.
double trace_distance(const Bloch& s1, const Bloch& s2);

/// Common spacing of a uniform grid; throws unless all steps agree to 1e-9 relative.
double uniform_spacing(const std::vector<double>& times);

/// Central differences (D[i+1] - D[i-1]) / (2 dt) at interior points.
std::vector<double> sigma_series(const std::vector<double>& times, const std::vector<double>& d);

/// sum of sigma dt over sigma > 0.
double nm_integral(const std::vector<double>& sigma, double dt);

/// D, sigma and N from two qubit trajectories on the same grid.
NMResult analyze_pair(const QubitTrajectory& traj1, const QubitTrajectory& traj2);

/// analyze_pair plus dD, dsigma = sqrt(dD+^2 + dD-^2) / dt and dN from per-component errors.
NMResult error_chain(const QubitTrajectory& traj1, const QubitTrajectory& traj2);

struct PairOptions {
  Frame frame = Frame::lab;
  /// When integrating in the interaction frame, trajectories are rotated back
  /// to the lab frame with this angle factor before D is formed.
  double angle_factor = 1.0;
  std::optional<ShotConfig> shots;
  EvolveOptions evolve;
};

struct PairRun {
  NMResult result;
  QubitTrajectory traj1, traj2;
  std::vector<std::string> warnings;
};

/// Evolves ic1 with the plus-branch rate and ic2 with the minus-branch rate,
/// then forms D, sigma and N (and the error chain when shots are given).
PairRun nm_for_pair(const InitialCondition& ic1, const InitialCondition& ic2, const ModelParams& params,
                    const TimeGrid& grid, const PairOptions& options = {});

/// Reduced qubit dynamics of one branch as an affine map of the initial
/// Bloch vector: s(t) = offset(t) + linear(t) s(0).
struct QubitAffineMap {
  std::vector<double> times;
  std::vector<Bloch> offset;
  std::vector<std::array<Bloch, 3>> linear;  // linear[i][row][col]

  QubitTrajectory apply(const Bloch& s0) const;
};

/// Built from four evolutions (|e>, |g>, |+x>, |+y> with the given motion).
QubitAffineMap qubit_affine_map(const std::vector<MotionalSpec>& motion, const ModelParams& params,
                                double gamma_rate, const TimeGrid& grid, const PairOptions& options = {});

struct MaximizedNM {
  NMResult result;
  double theta = 0.0;
  double phi = 0.0;
  /// N for every (theta, phi) on the search grid, theta major.
  std::vector<double> landscape;
};

/// Grid values for the pair search: theta_steps = 1 gives {pi/2}, otherwise
/// linspace(0, pi); phi takes phi_steps values 2 pi k / phi_steps.
std::vector<double> theta_grid(int theta_steps);
std::vector<double> phi_grid(int phi_steps);

/// max over orthogonal pure pairs |psi(theta, phi)>, |psi(pi - theta, phi + pi)>.
MaximizedNM nm_maximized(const ModelParams& params, const TimeGrid& grid, int theta_steps = 11, int phi_steps = 12,
                         const std::vector<MotionalSpec>& motion = {}, const PairOptions& options = {});

/// CSV with header t_us,D,D_err,sigma,sigma_err; sigma columns are empty at the endpoints.
void write_nm_csv(const std::string& path, const NMResult& result);

}  // namespace iontrap
