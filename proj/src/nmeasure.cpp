#include "iontrap/nmeasure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "iontrap/error.hpp"

namespace iontrap {

double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  if (rho1.rows() != 2 || rho1.cols() != 2 || rho2.rows() != 2 || rho2.cols() != 2) {
    throw ShapeError("trace_distance: only 2x2 qubit states are supported");
  }
  const OperatorMatrix diff = rho1 - rho2;
  const OperatorMatrix herm = 0.5 * (diff + diff.adjoint());
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> solver(herm, Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const Bloch& s1, const Bloch& s2) {
  const double dx = s1[0] - s2[0];
  const double dy = s1[1] - s2[1];
  const double dz = s1[2] - s2[2];
  return 0.5 * std::sqrt(dx * dx + dy * dy + dz * dz);
}

double uniform_spacing(const std::vector<double>& times) {
  if (times.size() < 2) throw std::invalid_argument("time grid needs at least two points");
  const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  if (!(dt > 0.0)) throw std::invalid_argument("time grid must be increasing");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs((times[i] - times[i - 1]) - dt) > 1e-9 * dt) {
      throw std::invalid_argument("time grid is not uniform");
    }
  }
  return dt;
}

std::vector<double> sigma_series(const std::vector<double>& times, const std::vector<double>& d) {
  if (times.size() != d.size()) throw ShapeError("sigma_series: times and D differ in length");
  if (times.size() < 3) throw std::invalid_argument("sigma_series: need at least 3 samples");
  const double dt = uniform_spacing(times);
  std::vector<double> sigma(times.size() - 2);
  for (std::size_t i = 1; i + 1 < times.size(); ++i) sigma[i - 1] = (d[i + 1] - d[i - 1]) / (2.0 * dt);
  return sigma;
}

double nm_integral(const std::vector<double>& sigma, double dt) {
  double total = 0.0;
  for (double s : sigma) {
    if (s > 0.0) total += s * dt;
  }
  return total;
}

namespace {

void check_same_grid(const QubitTrajectory& a, const QubitTrajectory& b) {
  if (a.size() != b.size()) throw ShapeError("trajectories have different lengths");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a.times[i] - b.times[i]) > 1e-12 * std::max(1.0, std::abs(a.times[i]))) {
      throw ShapeError("trajectories are sampled on different grids");
    }
  }
}

}  // namespace

NMResult analyze_pair(const QubitTrajectory& traj1, const QubitTrajectory& traj2) {
  check_same_grid(traj1, traj2);
  NMResult r;
  r.times = traj1.times;
  r.trace_distance.resize(traj1.size());
  for (std::size_t i = 0; i < traj1.size(); ++i) r.trace_distance[i] = trace_distance(traj1.bloch[i], traj2.bloch[i]);
  r.dt = uniform_spacing(r.times);
  r.sigma = sigma_series(r.times, r.trace_distance);
  r.nm = nm_integral(r.sigma, r.dt);
  return r;
}

NMResult error_chain(const QubitTrajectory& traj1, const QubitTrajectory& traj2) {
  if (!traj1.bloch_err || !traj2.bloch_err) {
    throw std::invalid_argument("error_chain: both trajectories need per-component errors");
  }
  NMResult r = analyze_pair(traj1, traj2);
  const std::size_t n = r.times.size();
  std::vector<double> dd(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Bloch& e1 = (*traj1.bloch_err)[i];
    const Bloch& e2 = (*traj2.bloch_err)[i];
    const double d = r.trace_distance[i];
    if (d < 1e-12) {
      double worst = 0.0;
      for (int l = 0; l < 3; ++l) worst = std::max(worst, std::sqrt(e1[l] * e1[l] + e2[l] * e2[l]));
      dd[i] = 0.5 * worst;
      r.singular_points.push_back(static_cast<int>(i));
      continue;
    }
    // dD/dS1_l = -dD/dS2_l = (S1_l - S2_l) / (4 D).
    double acc = 0.0;
    for (int l = 0; l < 3; ++l) {
      const double diff = traj1.bloch[i][l] - traj2.bloch[i][l];
      acc += diff * diff * (e1[l] * e1[l] + e2[l] * e2[l]);
    }
    dd[i] = std::sqrt(acc) / (4.0 * d);
  }
  std::vector<double> ds(n - 2);
  double var_n = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    ds[i - 1] = std::sqrt(dd[i + 1] * dd[i + 1] + dd[i - 1] * dd[i - 1]) / r.dt;
    if (r.sigma[i - 1] > 0.0) var_n += ds[i - 1] * r.dt * ds[i - 1] * r.dt;
  }
  r.trace_distance_err = std::move(dd);
  r.sigma_err = std::move(ds);
  r.nm_err = std::sqrt(var_n);
  return r;
}

namespace {

double branch_rate(const ModelParams& params, Branch branch) {
  return params.gamma_rate(branch == Branch::plus ? params.gamma_plus_mhz : params.gamma_minus_mhz);
}

QubitTrajectory run_branch(const DensityMatrix& rho0, const ModelParams& params, double gamma, const TimeGrid& grid,
                           const PairOptions& options, std::vector<std::string>& warnings) {
  EvolveReport report;
  QubitTrajectory traj = evolve_qubit(rho0, params, gamma, grid, options.frame, &report, options.evolve);
  warnings.insert(warnings.end(), report.warnings.begin(), report.warnings.end());
  if (options.frame == Frame::interaction) traj = to_lab_frame(traj, params.detuning_mhz, options.angle_factor);
  return traj;
}

PairRun finish_pair(QubitTrajectory t1, QubitTrajectory t2, const PairOptions& options,
                    std::vector<std::string> warnings) {
  PairRun run;
  for (auto& w : warnings) {
    if (std::find(run.warnings.begin(), run.warnings.end(), w) == run.warnings.end()) run.warnings.push_back(std::move(w));
  }
  if (options.shots) {
    run.traj1 = sample_trajectory(t1, *options.shots, 1);
    run.traj2 = sample_trajectory(t2, *options.shots, 2);
    run.result = error_chain(run.traj1, run.traj2);
  } else {
    run.traj1 = std::move(t1);
    run.traj2 = std::move(t2);
    run.result = analyze_pair(run.traj1, run.traj2);
  }
  return run;
}

}  // namespace

PairRun nm_for_pair(const InitialCondition& ic1, const InitialCondition& ic2, const ModelParams& params,
                    const TimeGrid& grid, const PairOptions& options) {
  std::vector<std::string> warnings;
  QubitTrajectory t1 = run_branch(initial_state(ic1, params), params, branch_rate(params, Branch::plus), grid,
                                  options, warnings);
  QubitTrajectory t2 = run_branch(initial_state(ic2, params), params, branch_rate(params, Branch::minus), grid,
                                  options, warnings);
  return finish_pair(std::move(t1), std::move(t2), options, std::move(warnings));
}

QubitTrajectory QubitAffineMap::apply(const Bloch& s0) const {
  QubitTrajectory traj;
  traj.times = times;
  traj.bloch.resize(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (int row = 0; row < 3; ++row) {
      traj.bloch[i][row] = offset[i][row] + linear[i][row][0] * s0[0] + linear[i][row][1] * s0[1] +
                           linear[i][row][2] * s0[2];
    }
  }
  return traj;
}

QubitAffineMap qubit_affine_map(const std::vector<MotionalSpec>& motion, const ModelParams& params,
                                double gamma_rate, const TimeGrid& grid, const PairOptions& options) {
  params.validate();
  const DensityMatrix mot = motional_state(motion, params);
  std::vector<std::string> warnings;
  auto run = [&](const Ket& psi) {
    return run_branch(kron(psi * psi.adjoint(), mot), params, gamma_rate, grid, options, warnings);
  };
  const QubitTrajectory se = run(ket_e());
  const QubitTrajectory sg = run(ket_g());
  const QubitTrajectory sx = run(prepare_qubit(QubitLabel::plus_x, PrepMode::ideal));
  const QubitTrajectory sy = run(prepare_qubit(QubitLabel::plus_y, PrepMode::ideal));
  QubitAffineMap map;
  map.times = se.times;
  map.offset.resize(se.size());
  map.linear.resize(se.size());
  for (std::size_t i = 0; i < se.size(); ++i) {
    for (int row = 0; row < 3; ++row) {
      const double off = 0.5 * (se.bloch[i][row] + sg.bloch[i][row]);
      map.offset[i][row] = off;
      map.linear[i][row][0] = sx.bloch[i][row] - off;
      map.linear[i][row][1] = sy.bloch[i][row] - off;
      map.linear[i][row][2] = 0.5 * (se.bloch[i][row] - sg.bloch[i][row]);
    }
  }
  return map;
}

std::vector<double> theta_grid(int theta_steps) {
  if (theta_steps < 1) throw ConfigError("maximize.theta_steps", "must be >= 1");
  if (theta_steps == 1) return {0.5 * std::numbers::pi};
  std::vector<double> v(theta_steps);
  for (int i = 0; i < theta_steps; ++i) v[i] = std::numbers::pi * i / (theta_steps - 1);
  return v;
}

std::vector<double> phi_grid(int phi_steps) {
  if (phi_steps < 1) throw ConfigError("maximize.phi_steps", "must be >= 1");
  std::vector<double> v(phi_steps);
  for (int i = 0; i < phi_steps; ++i) v[i] = kTwoPi * i / phi_steps;
  return v;
}

MaximizedNM nm_maximized(const ModelParams& params, const TimeGrid& grid, int theta_steps, int phi_steps,
                         const std::vector<MotionalSpec>& motion, const PairOptions& options) {
  const std::vector<double> thetas = theta_grid(theta_steps);
  const std::vector<double> phis = phi_grid(phi_steps);
  const double g_plus = branch_rate(params, Branch::plus);
  const double g_minus = branch_rate(params, Branch::minus);
  const QubitAffineMap map_plus = qubit_affine_map(motion, params, g_plus, grid, options);
  const QubitAffineMap map_minus = g_minus == g_plus ? map_plus : qubit_affine_map(motion, params, g_minus, grid, options);

  MaximizedNM best;
  best.result.nm = -1.0;
  for (double theta : thetas) {
    for (double phi : phis) {
      const Bloch s{std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
      NMResult r = analyze_pair(map_plus.apply(s), map_minus.apply({-s[0], -s[1], -s[2]}));
      best.landscape.push_back(r.nm);
      if (r.nm > best.result.nm) {
        best.result = std::move(r);
        best.theta = theta;
        best.phi = phi;
      }
    }
  }
  if (options.shots) {
    const Bloch s{std::sin(best.theta) * std::cos(best.phi), std::sin(best.theta) * std::sin(best.phi),
                  std::cos(best.theta)};
    const PairRun run = finish_pair(map_plus.apply(s), map_minus.apply({-s[0], -s[1], -s[2]}), options, {});
    best.result = run.result;
  }
  return best;
}

void write_nm_csv(const std::string& path, const NMResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "t_us,D,D_err,sigma,sigma_err\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  const std::size_t n = result.times.size();
  for (std::size_t i = 0; i < n; ++i) {
    put(result.times[i]);
    out << ',';
    put(result.trace_distance[i]);
    out << ',';
    if (result.trace_distance_err) put((*result.trace_distance_err)[i]);
    out << ',';
    const bool interior = i > 0 && i + 1 < n;
    if (interior) put(result.sigma[i - 1]);
    out << ',';
    if (interior && result.sigma_err) put((*result.sigma_err)[i - 1]);
    out << '\n';
  }
}

}  // namespace iontrap
