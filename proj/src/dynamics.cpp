#include "iontrap/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "iontrap/error.hpp"
#include "propagator.hpp"

namespace iontrap {

void TimeGrid::validate() const {
  if (!(t_end > t_start)) throw ConfigError("grid.t_end", "must be greater than grid.t_start");
  if (n_points < 2) throw ConfigError("grid.n_points", "must be >= 2");
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> t(n_points);
  for (int i = 0; i < n_points; ++i) t[i] = time(i);
  return t;
}

void QubitSpec::validate() const {
  if (label) return;
  if (!(theta >= 0.0 && theta <= std::numbers::pi)) throw ConfigError("initial.qubit.theta", "must lie in [0, pi]");
  if (!(phi >= 0.0 && phi < kTwoPi)) throw ConfigError("initial.qubit.phi", "must lie in [0, 2 pi)");
}

Ket ket_e() {
  Ket k = Ket::Zero(2);
  k(0) = 1.0;
  return k;
}

Ket ket_g() {
  Ket k = Ket::Zero(2);
  k(1) = 1.0;
  return k;
}

Ket bloch_ket(double theta, double phi) {
  return std::cos(0.5 * theta) * ket_e() + std::polar(std::sin(0.5 * theta), phi) * ket_g();
}

OperatorMatrix pi2_pulse(double phase) {
  const double c = std::cos(0.25 * std::numbers::pi);
  const double s = std::sin(0.25 * std::numbers::pi);
  const OperatorMatrix axis = std::cos(phase) * pauli::x() + std::sin(phase) * pauli::y();
  return c * pauli::identity() - Complex(0.0, s) * axis;
}

Ket prepare_qubit(QubitLabel target, PrepMode mode) {
  const double r = std::sqrt(0.5);
  if (mode == PrepMode::ideal) {
    switch (target) {
      case QubitLabel::g: return ket_g();
      case QubitLabel::e: return ket_e();
      case QubitLabel::plus_x: return r * (ket_e() + ket_g());
      case QubitLabel::minus_x: return r * (ket_e() - ket_g());
      case QubitLabel::plus_y: return r * (ket_e() + Complex(0, 1) * ket_g());
      case QubitLabel::minus_y: return r * (ket_e() - Complex(0, 1) * ket_g());
    }
  }
  const double x_phase = -0.5 * std::numbers::pi;
  switch (target) {
    case QubitLabel::g: return ket_g();
    case QubitLabel::e: return ket_e();
    case QubitLabel::plus_x: return pi2_pulse(x_phase) * ket_g();
    case QubitLabel::minus_x: return pi2_pulse(x_phase) * ket_e();
    // The phase-0 pulse maps |g> to (|g> - i|e>)/sqrt2, which has <sy> = +1 here.
    case QubitLabel::plus_y: return pi2_pulse(0.0) * ket_g();
    case QubitLabel::minus_y: return pi2_pulse(0.0) * ket_e();
  }
  throw std::invalid_argument("prepare_qubit: unknown target");
}

Ket qubit_ket(const QubitSpec& spec, PrepMode mode) {
  spec.validate();
  if (spec.label) return prepare_qubit(*spec.label, mode);
  return bloch_ket(spec.theta, spec.phi);
}

DensityMatrix motional_state(const std::vector<MotionalSpec>& motion, const ModelParams& params) {
  if (!motion.empty() && motion.size() != params.modes.size()) {
    throw ConfigError("initial.motion", "expected one entry per mode");
  }
  DensityMatrix rho = DensityMatrix::Identity(1, 1);
  for (std::size_t i = 0; i < params.modes.size(); ++i) {
    const auto& mode = params.modes[i];
    const MotionalSpec spec = motion.empty() ? MotionalSpec{} : motion[i];
    DensityMatrix single;
    switch (spec.kind) {
      case MotionalSpec::Kind::thermal: single = thermal_state(spec.nbar.value_or(mode.nbar), mode.fock_dim); break;
      case MotionalSpec::Kind::ground: single = thermal_state(0.0, mode.fock_dim); break;
      case MotionalSpec::Kind::coherent: single = coherent_state(spec.alpha, mode.fock_dim); break;
    }
    rho = kron(rho, single);
  }
  return rho;
}

DensityMatrix initial_state(const InitialCondition& ic, const ModelParams& params) {
  params.validate();
  const Ket psi = qubit_ket(ic.qubit, ic.prep);
  return kron(psi * psi.adjoint(), motional_state(ic.motion, params));
}

Bloch pauli_expectations(const DensityMatrix& rho_qubit) {
  if (rho_qubit.rows() != 2 || rho_qubit.cols() != 2) throw ShapeError("pauli_expectations: expected 2x2 matrix");
  // tr(rho sx) = 2 Re rho_ge, tr(rho sy) = 2 Im rho_ge with rho_ge = rho(1, 0).
  const Complex coherence = 0.5 * (rho_qubit(1, 0) + std::conj(rho_qubit(0, 1)));
  return {2.0 * coherence.real(), 2.0 * coherence.imag(), (rho_qubit(0, 0) - rho_qubit(1, 1)).real()};
}

QubitTrajectory to_lab_frame(const QubitTrajectory& traj, double delta_mhz, double angle_factor) {
  QubitTrajectory out = traj;
  const double w = angle_factor * angular(delta_mhz);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double c = std::cos(w * traj.times[i]);
    const double s = std::sin(w * traj.times[i]);
    const auto& b = traj.bloch[i];
    out.bloch[i] = {c * b[0] - s * b[1], s * b[0] + c * b[1], b[2]};
    if (traj.bloch_err) {
      const auto& e = (*traj.bloch_err)[i];
      (*out.bloch_err)[i] = {std::hypot(c * e[0], s * e[1]), std::hypot(s * e[0], c * e[1]), e[2]};
    }
  }
  return out;
}

OperatorMatrix lindblad_rhs(const DensityMatrix& rho, const OperatorMatrix& hamiltonian, double gamma) {
  if (rho.rows() != rho.cols() || hamiltonian.rows() != rho.rows() || hamiltonian.cols() != rho.cols() ||
      rho.rows() % 2 != 0) {
    throw ShapeError("lindblad_rhs: rho and H must be square matrices of the same even dimension");
  }
  const Eigen::Index m = rho.rows() / 2;
  OperatorMatrix out = Complex(0.0, -1.0) * (hamiltonian * rho - rho * hamiltonian);
  // sz rho sz - rho vanishes on the qubit-diagonal blocks and is -2 rho elsewhere.
  out.topRightCorner(m, m) -= 2.0 * gamma * rho.topRightCorner(m, m);
  out.bottomLeftCorner(m, m) -= 2.0 * gamma * rho.bottomLeftCorner(m, m);
  return out;
}

int substeps_per_interval(const ModelParams& params, double spacing, const EvolveOptions& options) {
  double scale_mhz = std::max(params.rabi_mhz, std::abs(params.detuning_mhz));
  for (const auto& mode : params.modes) scale_mhz = std::max(scale_mhz, mode.frequency_mhz);
  const double scale = angular(scale_mhz);
  const int base = std::max(1, static_cast<int>(std::ceil(spacing * scale / options.step_bound - 1e-9)));
  return base * std::max(1, options.substep_multiplier);
}

namespace {

double edge_population(const DensityMatrix& rho, const CompositeSpace& space) {
  const int m_dim = space.motional_dim();
  double worst = 0.0;
  for (int i = 0; i < space.modes(); ++i) {
    const int top = space.fock_dim(i) - 2;
    double pop = 0.0;
    for (int m = 0; m < m_dim; ++m) {
      if (space.occupation(m, i) >= top) pop += rho(m, m).real() + rho(m_dim + m, m_dim + m).real();
    }
    worst = std::max(worst, pop);
  }
  return worst;
}

}  // namespace

EvolveReport evolve_density(const DensityMatrix& rho0, const ModelParams& params, double gamma_rate,
                            const TimeGrid& grid, Frame frame, const SampleObserver& observer,
                            const EvolveOptions& options) {
  params.validate();
  grid.validate();
  const CompositeSpace space(params);
  if (rho0.rows() != space.dim() || rho0.cols() != space.dim()) {
    throw ShapeError("evolve: initial state does not match the composite space");
  }
  // Without drive the detuning phase is irrelevant; both frames coincide.
  if (params.rabi_mhz == 0.0) frame = Frame::lab;

  detail::RotatingFrameEquation eq(params, gamma_rate, frame);
  EvolveReport report;
  report.substeps_per_interval = substeps_per_interval(params, grid.spacing(), options);
  const double h = grid.spacing() / report.substeps_per_interval;
  report.substep_us = h;

  const int n = space.dim();
  OperatorMatrix r = rho0;
  OperatorMatrix k(n, n), acc(n, n), stage(n, n), rho(n, n);

  auto sample = [&](int index, double tau) {
    if (index == 0) {
      rho = rho0;
    } else {
      eq.to_lab(eq.free_phases(tau), r, rho);
    }
    const double drift = std::abs(rho.trace() - 1.0);
    report.max_trace_drift = std::max(report.max_trace_drift, drift);
    if (!(drift <= options.trace_tolerance)) {
      std::ostringstream msg;
      msg << "trace drifted by " << drift << " at t = " << grid.time(index) << " us";
      throw IntegrationFailure(msg.str());
    }
    const double largest = rho.cwiseAbs().maxCoeff();
    if (!(largest <= 1.0 + 1e-6)) {
      std::ostringstream msg;
      msg << "density matrix diverged (max |rho_jk| = " << largest << ") at t = " << grid.time(index)
          << " us; reduce integrator.step_bound";
      throw IntegrationFailure(msg.str());
    }
    const double edge = edge_population(rho, space);
    report.max_edge_population = std::max(report.max_edge_population, edge);
    if (edge > options.leak_threshold && !report.truncation_leak) {
      report.truncation_leak = true;
      std::ostringstream msg;
      msg << "truncation leak: top-two Fock population " << edge << " at t = " << grid.time(index) << " us";
      report.warnings.push_back(msg.str());
    }
    if (observer) observer(index, grid.time(index), rho);
  };

  sample(0, 0.0);
  const long steps = report.substeps_per_interval;
  for (int i = 1; i < grid.n_points; ++i) {
    for (long s = 0; s < steps; ++s) {
      const double tau = (static_cast<long>(i - 1) * steps + s) * h;
      const double t = grid.t_start + tau;
      eq.rhs(t, tau, r, k);
      acc = k;
      stage = r + (0.5 * h) * k;
      eq.rhs(t + 0.5 * h, tau + 0.5 * h, stage, k);
      acc += 2.0 * k;
      stage = r + (0.5 * h) * k;
      eq.rhs(t + 0.5 * h, tau + 0.5 * h, stage, k);
      acc += 2.0 * k;
      stage = r + h * k;
      eq.rhs(t + h, tau + h, stage, k);
      acc += k;
      r += (h / 6.0) * acc;
    }
    sample(i, grid.time(i) - grid.t_start);
  }
  return report;
}

namespace {

double branch_gamma(const ModelParams& params, Branch branch) {
  return params.gamma_rate(branch == Branch::plus ? params.gamma_plus_mhz : params.gamma_minus_mhz);
}

}  // namespace

std::vector<DensityMatrix> evolve(const InitialCondition& ic, const ModelParams& params, const TimeGrid& grid,
                                  Frame frame, Branch branch, EvolveReport* report, const EvolveOptions& options) {
  std::vector<DensityMatrix> out(grid.n_points);
  auto rep = evolve_density(initial_state(ic, params), params, branch_gamma(params, branch), grid, frame,
                            [&](int i, double, const DensityMatrix& rho) { out[i] = rho; }, options);
  if (report) *report = std::move(rep);
  return out;
}

QubitTrajectory evolve_qubit(const DensityMatrix& rho0, const ModelParams& params, double gamma_rate,
                             const TimeGrid& grid, Frame frame, EvolveReport* report, const EvolveOptions& options) {
  const CompositeSpace space(params);
  QubitTrajectory traj;
  traj.times = grid.times();
  traj.bloch.resize(grid.n_points);
  auto rep = evolve_density(rho0, params, gamma_rate, grid, frame,
                            [&](int i, double, const DensityMatrix& rho) {
                              traj.bloch[i] = pauli_expectations(partial_trace_motion(rho, space));
                            },
                            options);
  if (report) *report = std::move(rep);
  return traj;
}

QubitTrajectory evolve_qubit(const InitialCondition& ic, const ModelParams& params, const TimeGrid& grid,
                             Frame frame, Branch branch, EvolveReport* report, const EvolveOptions& options) {
  return evolve_qubit(initial_state(ic, params), params, branch_gamma(params, branch), grid, frame, report,
                      options);
}

void write_trajectory_csv(const std::string& path, const QubitTrajectory& traj, bool force_errors) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const bool errors = traj.bloch_err.has_value() || force_errors;
  out << "t_us,sx,sy,sz";
  if (errors) out << ",sx_err,sy_err,sz_err";
  out << '\n';
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (std::size_t i = 0; i < traj.size(); ++i) {
    put(traj.times[i]);
    for (double v : traj.bloch[i]) {
      out << ',';
      put(v);
    }
    if (errors) {
      const Bloch e = traj.bloch_err ? (*traj.bloch_err)[i] : Bloch{0.0, 0.0, 0.0};
      for (double v : e) {
        out << ',';
        put(v);
      }
    }
    out << '\n';
  }
}

QubitTrajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  const bool errors = line.find("sx_err") != std::string::npos;
  QubitTrajectory traj;
  if (errors) traj.bloch_err.emplace();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() < 4 || (errors && v.size() < 7)) throw std::runtime_error("malformed row in " + path);
    traj.times.push_back(v[0]);
    traj.bloch.push_back({v[1], v[2], v[3]});
    if (errors) traj.bloch_err->push_back({v[4], v[5], v[6]});
  }
  return traj;
}

std::string to_string(QubitLabel label) {
  switch (label) {
    case QubitLabel::g: return "g";
    case QubitLabel::e: return "e";
    case QubitLabel::plus_x: return "plus_x";
    case QubitLabel::minus_x: return "minus_x";
    case QubitLabel::plus_y: return "plus_y";
    case QubitLabel::minus_y: return "minus_y";
  }
  return "?";
}

QubitLabel qubit_label_from_string(const std::string& s) {
  for (auto l : {QubitLabel::g, QubitLabel::e, QubitLabel::plus_x, QubitLabel::minus_x, QubitLabel::plus_y,
                 QubitLabel::minus_y}) {
    if (to_string(l) == s) return l;
  }
  throw std::invalid_argument("unknown qubit state '" + s + "'");
}

}  // namespace iontrap
