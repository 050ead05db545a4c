#pragma once

// Operators and states on the truncated qubit (x) motion space.
//
// Conventions used throughout the library:
//   * Basis ordering is qubit (x) mode1 (x) mode2, with the qubit index slowest.
//   * Qubit index 0 is |e>, index 1 is |g>, so sigma_z|e> = +|e> and
//     sigma_+ = |e><g|.
//   * Configuration frequencies are ordinary frequencies in MHz; everything
//     returned here is in angular units (rad/us). Time is in microseconds.

#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace iontrap {

using Complex = std::complex<double>;
using OperatorMatrix = Eigen::MatrixXcd;
/// Hermitian, unit-trace, positive matrix on the composite (or qubit) space.
using DensityMatrix = Eigen::MatrixXcd;
using Ket = Eigen::VectorXcd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Ordinary frequency in MHz to angular frequency in rad/us.
constexpr double angular(double mhz) { return kTwoPi * mhz; }

struct ModeSpec {
  double frequency_mhz = 1.0;  // nu / 2pi
  double lamb_dicke = 0.0;     // eta
  int fock_dim = 2;
  double nbar = 0.0;

  void validate(const std::string& where = "mode") const;
  /// Thermal population lost beyond the truncation, (nbar / (1 + nbar))^fock_dim.
  double truncated_thermal_tail() const;
};

enum class GammaUnits { per_us, mhz_angular };

struct ModelParams {
  double rabi_mhz = 0.0;
  double detuning_mhz = 0.0;
  std::vector<ModeSpec> modes;
  double gamma_plus_mhz = 0.0;
  double gamma_minus_mhz = 0.0;
  double laser_phase = 0.0;
  GammaUnits gamma_units = GammaUnits::per_us;

  void validate() const;

  int motional_dim() const;
  int dim() const { return 2 * motional_dim(); }

  double rabi_angular() const { return angular(rabi_mhz); }
  double detuning_angular() const { return angular(detuning_mhz); }
  /// Dephasing rate entering the master equation, in 1/us.
  double gamma_rate(double configured) const;
};

/// Two-mode reference setup: nu1/2pi = 2.32 MHz, nu2/2pi = 3.16 MHz,
/// eta = 0.069 / 0.072, nbar = 0.05, Omega/2pi = 2.245 MHz, delta = 0,
/// gamma = 0.0049 (|+> branch) and 0.0008 (|-> branch).
ModelParams reference_two_mode_params(int fock_dim = 15);
/// Single mode nu/2pi = 2.32 MHz, eta = 0.069, gamma = 0.004 on both branches.
ModelParams reference_single_mode_params(int fock_dim = 15);

// --- single-mode building blocks -------------------------------------------

/// Truncated annihilation operator, entry (n, n+1) = sqrt(n+1).
OperatorMatrix annihilation(int dim);

/// exp(i eta (a + a^dagger)) on the truncated space.
OperatorMatrix displacement_coupling(double eta, int dim);

/// Geometric (Bose-Einstein) populations renormalised to the truncation.
DensityMatrix thermal_state(double nbar, int dim);

/// Truncated coherent state |alpha><alpha|, renormalised.
DensityMatrix coherent_state(Complex alpha, int dim);

// --- qubit operators (2x2) ---------------------------------------------------

namespace pauli {
OperatorMatrix identity();
OperatorMatrix x();
OperatorMatrix y();
OperatorMatrix z();
OperatorMatrix plus();   // sigma_+ = |e><g|
OperatorMatrix minus();  // sigma_- = |g><e|
}  // namespace pauli

// --- composite space ---------------------------------------------------------

/// Index bookkeeping for qubit (x) modes.
class CompositeSpace {
 public:
  explicit CompositeSpace(std::vector<int> fock_dims);
  explicit CompositeSpace(const ModelParams& params);

  int modes() const { return static_cast<int>(dims_.size()); }
  int fock_dim(int mode) const { return dims_.at(mode); }
  const std::vector<int>& fock_dims() const { return dims_; }
  int motional_dim() const { return motional_dim_; }
  int dim() const { return 2 * motional_dim_; }
  /// Row stride of a mode inside a motional index (last mode has stride 1).
  int stride(int mode) const { return strides_.at(mode); }
  /// Occupation of `mode` for motional index m.
  int occupation(int m, int mode) const { return (m / strides_[mode]) % dims_[mode]; }

  /// Single-mode operator lifted to the motional space: I (x) op (x) I.
  OperatorMatrix lift(const OperatorMatrix& op, int mode) const;
  /// Embeds a single-mode operator as I_qubit (x) ... (x) op (x) ...
  OperatorMatrix embed_mode(const OperatorMatrix& op, int mode) const;
  /// Embeds a motional operator (acting on all modes) as I_qubit (x) op.
  OperatorMatrix embed_motion(const OperatorMatrix& op) const;
  /// Embeds a qubit operator as op (x) I_motion.
  OperatorMatrix embed_qubit(const OperatorMatrix& op) const;

 private:
  std::vector<int> dims_;
  std::vector<int> strides_;
  int motional_dim_ = 1;
};

/// Lab (laser rotating) frame Hamiltonian H/hbar in rad/us:
///   (delta/2) sz + sum_i nu_i a_i^dag a_i
///     + (Omega/2) sum_i [ e^{i phi} s+ exp(i eta_i (a_i + a_i^dag)) + h.c. ].
OperatorMatrix build_hamiltonian(const ModelParams& params);

/// Detuning-free interaction-frame Hamiltonian at time t (us):
///   sum_i nu_i a_i^dag a_i
///     + (Omega/2) sum_i [ s+ exp(i eta_i (a_i + a_i^dag)) e^{i(delta t + phi)} + h.c. ].
OperatorMatrix interaction_hamiltonian(const ModelParams& params, double t);

/// tr_motion(rho) for rho on the composite space of `params`.
DensityMatrix partial_trace_motion(const DensityMatrix& rho, const ModelParams& params);
DensityMatrix partial_trace_motion(const DensityMatrix& rho, const CompositeSpace& space);

/// Kronecker product A (x) B.
OperatorMatrix kron(const OperatorMatrix& a, const OperatorMatrix& b);

// --- validation helpers ------------------------------------------------------

/// max |A - A^dagger| entrywise.
double hermiticity_defect(const OperatorMatrix& a);
/// Smallest eigenvalue of the Hermitian part of rho.
double min_eigenvalue(const DensityMatrix& rho);

}  // namespace iontrap
