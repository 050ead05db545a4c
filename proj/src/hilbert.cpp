#include "iontrap/hilbert.hpp"

#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "iontrap/error.hpp"

namespace iontrap {

namespace {

void require_dim(int dim, const char* what) {
  if (dim < 2) {
    throw InvalidDimension(std::string(what) + ": dimension must be >= 2, got " +
                           std::to_string(dim));
  }
}

}  // namespace

void ModeSpec::validate(const std::string& where) const {
  if (!(frequency_mhz > 0.0)) throw ConfigError(where + ".frequency_mhz", "must be > 0");
  if (!(lamb_dicke >= 0.0)) throw ConfigError(where + ".lamb_dicke", "must be >= 0");
  if (fock_dim < 2) throw ConfigError(where + ".fock_dim", "must be >= 2");
  if (!(nbar >= 0.0)) throw ConfigError(where + ".nbar", "must be >= 0");
}

double ModeSpec::truncated_thermal_tail() const {
  return std::pow(nbar / (1.0 + nbar), fock_dim);
}

void ModelParams::validate() const {
  if (!(rabi_mhz >= 0.0)) throw ConfigError("model.rabi_mhz", "must be >= 0");
  if (!std::isfinite(detuning_mhz)) throw ConfigError("model.detuning_mhz", "must be finite");
  if (!(gamma_plus_mhz >= 0.0)) throw ConfigError("model.gamma_plus_mhz", "must be >= 0");
  if (!(gamma_minus_mhz >= 0.0)) throw ConfigError("model.gamma_minus_mhz", "must be >= 0");
  if (!std::isfinite(laser_phase)) throw ConfigError("model.laser_phase", "must be finite");
  if (modes.empty() || modes.size() > 2) {
    throw ConfigError("model.modes", "expected 1 or 2 modes, got " + std::to_string(modes.size()));
  }
  for (std::size_t i = 0; i < modes.size(); ++i) {
    modes[i].validate("model.modes[" + std::to_string(i) + "]");
  }
}

int ModelParams::motional_dim() const {
  int m = 1;
  for (const auto& mode : modes) m *= mode.fock_dim;
  return m;
}

double ModelParams::gamma_rate(double configured) const {
  return gamma_units == GammaUnits::mhz_angular ? angular(configured) : configured;
}

ModelParams reference_two_mode_params(int fock_dim) {
  ModelParams p;
  p.rabi_mhz = 2.245;
  p.detuning_mhz = 0.0;
  p.modes = {ModeSpec{2.32, 0.069, fock_dim, 0.05}, ModeSpec{3.16, 0.072, fock_dim, 0.05}};
  p.gamma_plus_mhz = 0.0049;
  p.gamma_minus_mhz = 0.0008;
  return p;
}

ModelParams reference_single_mode_params(int fock_dim) {
  ModelParams p;
  p.rabi_mhz = 2.32;
  p.detuning_mhz = 0.0;
  p.modes = {ModeSpec{2.32, 0.069, fock_dim, 0.05}};
  p.gamma_plus_mhz = 0.004;
  p.gamma_minus_mhz = 0.004;
  return p;
}

OperatorMatrix annihilation(int dim) {
  require_dim(dim, "annihilation");
  OperatorMatrix a = OperatorMatrix::Zero(dim, dim);
  for (int n = 0; n + 1 < dim; ++n) a(n, n + 1) = std::sqrt(static_cast<double>(n + 1));
  return a;
}

OperatorMatrix displacement_coupling(double eta, int dim) {
  require_dim(dim, "displacement_coupling");
  if (!(eta >= 0.0)) throw std::invalid_argument("displacement_coupling: eta must be >= 0");
  const OperatorMatrix a = annihilation(dim);
  const OperatorMatrix generator = Complex(0.0, eta) * (a + a.adjoint());
  // Pade scaling-and-squaring.
  return generator.exp();
}

DensityMatrix thermal_state(double nbar, int dim) {
  require_dim(dim, "thermal_state");
  if (!(nbar >= 0.0)) throw std::invalid_argument("thermal_state: nbar must be >= 0");
  Eigen::VectorXd p(dim);
  const double ratio = nbar / (1.0 + nbar);
  double w = 1.0;
  for (int n = 0; n < dim; ++n) {
    p(n) = w;
    w *= ratio;
  }
  p /= p.sum();
  return p.cast<Complex>().asDiagonal();
}

DensityMatrix coherent_state(Complex alpha, int dim) {
  require_dim(dim, "coherent_state");
  Ket c(dim);
  c(0) = 1.0;
  for (int n = 1; n < dim; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  c.normalize();
  return c * c.adjoint();
}

namespace pauli {
OperatorMatrix identity() { return OperatorMatrix::Identity(2, 2); }
OperatorMatrix x() {
  OperatorMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
OperatorMatrix y() {
  OperatorMatrix m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}
OperatorMatrix z() {
  OperatorMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
OperatorMatrix plus() {
  OperatorMatrix m = OperatorMatrix::Zero(2, 2);
  m(0, 1) = 1;
  return m;
}
OperatorMatrix minus() {
  OperatorMatrix m = OperatorMatrix::Zero(2, 2);
  m(1, 0) = 1;
  return m;
}
}  // namespace pauli

OperatorMatrix kron(const OperatorMatrix& a, const OperatorMatrix& b) {
  OperatorMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

CompositeSpace::CompositeSpace(std::vector<int> fock_dims) : dims_(std::move(fock_dims)) {
  if (dims_.empty()) throw InvalidDimension("CompositeSpace: at least one mode required");
  strides_.assign(dims_.size(), 1);
  for (int i = static_cast<int>(dims_.size()) - 1; i >= 0; --i) {
    require_dim(dims_[i], "CompositeSpace");
    strides_[i] = motional_dim_;
    motional_dim_ *= dims_[i];
  }
}

CompositeSpace::CompositeSpace(const ModelParams& params)
    : CompositeSpace([&] {
        std::vector<int> d;
        for (const auto& m : params.modes) d.push_back(m.fock_dim);
        return d;
      }()) {}

OperatorMatrix CompositeSpace::lift(const OperatorMatrix& op, int mode) const {
  if (op.rows() != dims_.at(mode) || op.cols() != dims_.at(mode)) {
    throw ShapeError("lift: operator does not match mode dimension");
  }
  OperatorMatrix motion = OperatorMatrix::Identity(1, 1);
  for (int i = 0; i < modes(); ++i) {
    motion = kron(motion, i == mode ? op : OperatorMatrix::Identity(dims_[i], dims_[i]));
  }
  return motion;
}

OperatorMatrix CompositeSpace::embed_mode(const OperatorMatrix& op, int mode) const {
  return embed_motion(lift(op, mode));
}

OperatorMatrix CompositeSpace::embed_motion(const OperatorMatrix& op) const {
  if (op.rows() != motional_dim_) throw ShapeError("embed_motion: dimension mismatch");
  return kron(pauli::identity(), op);
}

OperatorMatrix CompositeSpace::embed_qubit(const OperatorMatrix& op) const {
  if (op.rows() != 2) throw ShapeError("embed_qubit: expected a 2x2 operator");
  return kron(op, OperatorMatrix::Identity(motional_dim_, motional_dim_));
}

namespace {

// sum_i nu_i a_i^dag a_i and sum_i sigma_+ (x) D_i on the composite space.
struct HamiltonianParts {
  OperatorMatrix oscillators;
  OperatorMatrix raising_coupling;
};

HamiltonianParts hamiltonian_parts(const ModelParams& params) {
  params.validate();
  const CompositeSpace space(params);
  const int n = space.dim();
  HamiltonianParts parts{OperatorMatrix::Zero(n, n), OperatorMatrix::Zero(n, n)};
  OperatorMatrix coupling_motion = OperatorMatrix::Zero(space.motional_dim(), space.motional_dim());
  for (int i = 0; i < space.modes(); ++i) {
    const auto& mode = params.modes[i];
    const OperatorMatrix a = annihilation(mode.fock_dim);
    parts.oscillators += angular(mode.frequency_mhz) * space.embed_mode(a.adjoint() * a, i);
    const OperatorMatrix d = displacement_coupling(mode.lamb_dicke, mode.fock_dim);
    coupling_motion += space.lift(d, i);
  }
  parts.raising_coupling = kron(pauli::plus(), coupling_motion);
  return parts;
}

}  // namespace

OperatorMatrix build_hamiltonian(const ModelParams& params) {
  const auto parts = hamiltonian_parts(params);
  const CompositeSpace space(params);
  const Complex phase = std::polar(1.0, params.laser_phase);
  const OperatorMatrix coupling = 0.5 * params.rabi_angular() * phase * parts.raising_coupling;
  return 0.5 * params.detuning_angular() * space.embed_qubit(pauli::z()) + parts.oscillators + coupling +
         coupling.adjoint();
}

OperatorMatrix interaction_hamiltonian(const ModelParams& params, double t) {
  const auto parts = hamiltonian_parts(params);
  const Complex phase = std::polar(1.0, params.detuning_angular() * t + params.laser_phase);
  const OperatorMatrix coupling = 0.5 * params.rabi_angular() * phase * parts.raising_coupling;
  return parts.oscillators + coupling + coupling.adjoint();
}

DensityMatrix partial_trace_motion(const DensityMatrix& rho, const CompositeSpace& space) {
  if (rho.rows() != space.dim() || rho.cols() != space.dim()) {
    throw ShapeError("partial_trace_motion: expected " + std::to_string(space.dim()) + "x" +
                     std::to_string(space.dim()) + " matrix, got " + std::to_string(rho.rows()) + "x" +
                     std::to_string(rho.cols()));
  }
  const int m = space.motional_dim();
  DensityMatrix out(2, 2);
  for (int q = 0; q < 2; ++q) {
    for (int p = 0; p < 2; ++p) out(q, p) = rho.block(q * m, p * m, m, m).trace();
  }
  return out;
}

DensityMatrix partial_trace_motion(const DensityMatrix& rho, const ModelParams& params) {
  return partial_trace_motion(rho, CompositeSpace(params));
}

double hermiticity_defect(const OperatorMatrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("hermiticity_defect: matrix not square");
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const DensityMatrix& rho) {
  const OperatorMatrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace iontrap
