#pragma once

// Structured right-hand side of the dephasing master equation.
//
// The Hamiltonian is split as H(t) = F + c(t) s+ (x) K + h.c., where F is
// diagonal (oscillator energies and the detuning term) and K is a sum of
// single-mode operators. The state is integrated in the frame rotating with
// F, rho(t) = W(t) r(t) W(t)^dag with W(t) = exp(-i F t), so only the
// coupling and the dephasing are left to the Runge-Kutta stages. W is a pure
// phase and commutes with the dephasing superoperator.

#include <vector>

#include "iontrap/dynamics.hpp"
#include "iontrap/hilbert.hpp"

namespace iontrap::detail {

class RotatingFrameEquation {
 public:
  RotatingFrameEquation(const ModelParams& params, double gamma_rate, Frame frame);

  int dim() const { return 2 * m_; }

  /// Diagonal of exp(-i F tau).
  Eigen::VectorXcd free_phases(double tau) const;

  /// rho = W r W^dag.
  void to_lab(const Eigen::VectorXcd& w, const OperatorMatrix& r, OperatorMatrix& rho) const;

  /// d r / dt at absolute time t with rotating-frame time tau = t - t0.
  void rhs(double t, double tau, const OperatorMatrix& r, OperatorMatrix& out);

  /// d rho / dt in the unrotated frame (used by tests against the dense form).
  void lab_rhs(double t, const OperatorMatrix& rho, OperatorMatrix& out);

 private:
  // out = V K (adjoint = false) or V K^dag for a contiguous rows x M matrix V.
  void apply_coupling_right(const Complex* v, Eigen::Index rows, Complex* out, bool adjoint) const;
  // out = -i [H, r] + gamma (Z r Z - r) for Hermitian r, with
  // H = diag(left) H_c diag(right) + h.c. and H_c the coupling at phase c.
  void commutator(const Eigen::VectorXcd& left, const Eigen::VectorXcd& right, Complex c, const OperatorMatrix& r,
                  OperatorMatrix& out);

  CompositeSpace space_;
  int m_;
  double gamma_;
  Frame frame_;
  double detuning_;
  double phase_;
  Eigen::VectorXd energies_;
  // Per-mode coupling pieces, already scaled by Omega / 2.
  std::vector<OperatorMatrix> mode_ops_, mode_ops_adj_;
  bool coupling_on_ = false;

  OperatorMatrix scratch_s_, scratch_z_;
  Eigen::VectorXcd scratch_p_;
};

}  // namespace iontrap::detail
