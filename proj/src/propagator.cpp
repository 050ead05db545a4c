#include "propagator.hpp"

#include <cmath>

namespace iontrap::detail {

RotatingFrameEquation::RotatingFrameEquation(const ModelParams& params, double gamma_rate, Frame frame)
    : space_(params), m_(space_.motional_dim()), gamma_(gamma_rate), frame_(frame) {
  params.validate();
  detuning_ = params.detuning_angular();
  phase_ = params.laser_phase;
  const double half_rabi = 0.5 * params.rabi_angular();
  coupling_on_ = half_rabi != 0.0;

  for (int i = 0; i < space_.modes(); ++i) {
    const auto& mode = params.modes[i];
    const OperatorMatrix d = half_rabi * displacement_coupling(mode.lamb_dicke, mode.fock_dim);
    mode_ops_.push_back(d);
    mode_ops_adj_.push_back(d.adjoint());
  }

  energies_.resize(2 * m_);
  const double half_split = frame_ == Frame::lab ? 0.5 * detuning_ : 0.0;
  for (int m = 0; m < m_; ++m) {
    double energy = 0.0;
    for (int i = 0; i < space_.modes(); ++i) {
      energy += angular(params.modes[i].frequency_mhz) * space_.occupation(m, i);
    }
    energies_(m) = energy + half_split;
    energies_(m_ + m) = energy - half_split;
  }

  scratch_s_.resize(2 * m_, 2 * m_);
  scratch_z_.resize(2 * m_, 2 * m_);
  scratch_p_.resize(2 * m_);
}

Eigen::VectorXcd RotatingFrameEquation::free_phases(double tau) const {
  Eigen::VectorXcd w(energies_.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = std::polar(1.0, -energies_(j) * tau);
  return w;
}

void RotatingFrameEquation::to_lab(const Eigen::VectorXcd& w, const OperatorMatrix& r, OperatorMatrix& rho) const {
  rho = w.asDiagonal() * r * w.conjugate().asDiagonal();
}

void RotatingFrameEquation::apply_coupling_right(const Complex* v, Eigen::Index rows, Complex* out,
                                                 bool adjoint) const {
  const auto& ops = adjoint ? mode_ops_adj_ : mode_ops_;
  Eigen::Map<const OperatorMatrix> vm(v, rows, m_);
  Eigen::Map<OperatorMatrix> om(out, rows, m_);
  if (space_.modes() == 1) {
    om.noalias() = vm * ops[0];
    return;
  }
  // Two modes, column index m = n1 d2 + n2. V (A (x) I) is V reshaped to
  // (rows d2) x d1 times A; V (I (x) B) acts on each group of d2 columns.
  const int d1 = space_.fock_dim(0);
  const int d2 = space_.fock_dim(1);
  Eigen::Map<const OperatorMatrix> v1(v, rows * d2, d1);
  Eigen::Map<OperatorMatrix> o1(out, rows * d2, d1);
  o1.noalias() = v1 * ops[0];
  for (int n1 = 0; n1 < d1; ++n1) {
    om.middleCols(n1 * d2, d2).noalias() += vm.middleCols(n1 * d2, d2) * ops[1];
  }
}

void RotatingFrameEquation::commutator(const Eigen::VectorXcd& left, const Eigen::VectorXcd& right, Complex c,
                                       const OperatorMatrix& r, OperatorMatrix& out) {
  const int m = m_;
  const int n = 2 * m;
  out.resize(n, n);
  // With H' = [[0, K], [K^dag, 0]] and x = H' diag(right) r, r Hermitian gives
  // z = x^dag = r diag(conj(right)) H', which only needs right products with K.
  OperatorMatrix& z = scratch_z_;
  if (coupling_on_) {
    OperatorMatrix& s = scratch_s_;
    s.noalias() = r * right.conjugate().asDiagonal();
    apply_coupling_right(s.data() + Eigen::Index(m) * n, n, z.data(), true);
    apply_coupling_right(s.data(), n, z.data() + Eigen::Index(m) * n, false);
  } else {
    z.setZero();
  }
  Eigen::VectorXcd& p = scratch_p_;
  p.head(m) = c * left.head(m);
  p.tail(m) = std::conj(c) * left.tail(m);
  // out = -i (a - a^dag) with a = diag(p) x = diag(p) z^dag.
  out.noalias() = Complex(0.0, -1.0) * (p.asDiagonal() * z.adjoint() - z * p.conjugate().asDiagonal());
  if (gamma_ != 0.0) {
    out.topRightCorner(m, m) -= 2.0 * gamma_ * r.topRightCorner(m, m);
    out.bottomLeftCorner(m, m) -= 2.0 * gamma_ * r.bottomLeftCorner(m, m);
  }
}

void RotatingFrameEquation::rhs(double t, double tau, const OperatorMatrix& r, OperatorMatrix& out) {
  const Eigen::VectorXcd w = free_phases(tau);
  const Complex c = frame_ == Frame::lab ? std::polar(1.0, phase_) : std::polar(1.0, detuning_ * t + phase_);
  commutator(w.conjugate(), w, c, r, out);
}

void RotatingFrameEquation::lab_rhs(double t, const OperatorMatrix& rho, OperatorMatrix& out) {
  const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(2 * m_);
  const Complex c = frame_ == Frame::lab ? std::polar(1.0, phase_) : std::polar(1.0, detuning_ * t + phase_);
  commutator(ones, ones, c, rho, out);
  // -i [F, rho]
  for (int k = 0; k < 2 * m_; ++k) {
    for (int j = 0; j < 2 * m_; ++j) out(j, k) += Complex(0.0, -(energies_(j) - energies_(k))) * rho(j, k);
  }
}

}  // namespace iontrap::detail
