#pragma once

// Master-equation dynamics of the driven ion:
//
//   d rho / dt = -i [H, rho] + gamma (sz rho sz - rho)
//
// with H either the lab (laser rotating) frame Hamiltonian or the
// time-dependent interaction-frame form. Bloch components follow the
// convention sz|e> = +|e>, sz|g> = -|g>.

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "iontrap/hilbert.hpp"

namespace iontrap {

enum class Frame { lab, interaction };

struct TimeGrid {
  double t_start = 0.0;  // us
  double t_end = 1.0;    // us
  int n_points = 2;      // samples, endpoints included

  void validate() const;
  double spacing() const { return (t_end - t_start) / (n_points - 1); }
  double time(int i) const { return t_start + i * spacing(); }
  std::vector<double> times() const;
};

enum class QubitLabel { g, e, plus_x, minus_x, plus_y, minus_y };
enum class PrepMode { ideal, pulse };

/// Named eigenstate or explicit Bloch angles,
/// |psi> = cos(theta/2)|e> + e^{i phi} sin(theta/2)|g>.
struct QubitSpec {
  std::optional<QubitLabel> label;
  double theta = 0.0;
  double phi = 0.0;

  static QubitSpec named(QubitLabel l) { return QubitSpec{l, 0.0, 0.0}; }
  static QubitSpec angles(double theta, double phi) { return QubitSpec{std::nullopt, theta, phi}; }
  void validate() const;
};

struct MotionalSpec {
  enum class Kind { thermal, ground, coherent };
  Kind kind = Kind::thermal;
  std::optional<double> nbar;  // thermal only; falls back to ModeSpec::nbar
  Complex alpha{0.0, 0.0};     // coherent only
};

struct InitialCondition {
  QubitSpec qubit = QubitSpec::named(QubitLabel::plus_x);
  /// One entry per mode; empty means thermal at each ModeSpec::nbar.
  std::vector<MotionalSpec> motion;
  PrepMode prep = PrepMode::ideal;
};

/// Which configured dephasing rate an evolution uses.
enum class Branch { plus, minus };

using Bloch = std::array<double, 3>;

struct QubitTrajectory {
  std::vector<double> times;
  std::vector<Bloch> bloch;
  std::optional<std::vector<Bloch>> bloch_err;

  std::size_t size() const { return times.size(); }
};

// --- state preparation ---------------------------------------------------------

Ket ket_g();
Ket ket_e();
/// cos(theta/2)|e> + e^{i phi} sin(theta/2)|g>.
Ket bloch_ket(double theta, double phi);
/// Resonant carrier pi/2 pulse with laser phase `phase`:
///   U = cos(pi/4) I - i sin(pi/4) (cos(phase) sx + sin(phase) sy).
OperatorMatrix pi2_pulse(double phase);
/// Ideal eigenstate, or the pi/2 pulse from |g> / |e> that produces it.
/// Pulse phase 0 yields the sigma_y eigenstates, phase -pi/2 the sigma_x ones.
Ket prepare_qubit(QubitLabel target, PrepMode mode);
Ket qubit_ket(const QubitSpec& spec, PrepMode mode);
/// rho_qubit (x) rho_motion on the composite space of `params`.
DensityMatrix initial_state(const InitialCondition& ic, const ModelParams& params);
DensityMatrix motional_state(const std::vector<MotionalSpec>& motion, const ModelParams& params);

// --- observables -----------------------------------------------------------------

/// (tr rho sx, tr rho sy, tr rho sz) of a 2x2 density matrix.
Bloch pauli_expectations(const DensityMatrix& rho_qubit);

/// Rotates Bloch vectors from the interaction frame back to the lab frame with
/// U(t) = exp(i angle_factor delta t sz / 2):  <s_i>_lab = tr(U s_i U^dag rho).
/// (sx, sy) turn by +angle_factor * delta * t about z; sz is untouched.
/// Standard errors are propagated as independent variances.
QubitTrajectory to_lab_frame(const QubitTrajectory& traj, double delta_mhz, double angle_factor = 1.0);

// --- master equation -------------------------------------------------------------

/// Dense reference right-hand side -i[H, rho] + gamma (Z rho Z - rho), Z = sz (x) I.
OperatorMatrix lindblad_rhs(const DensityMatrix& rho, const OperatorMatrix& hamiltonian, double gamma);

struct EvolveOptions {
  /// Substep bound: 2 pi max(nu, Omega, |delta|) * substep <= step_bound.
  double step_bound = 0.05;
  /// Extra refinement factor on top of the bound (used by convergence checks).
  int substep_multiplier = 1;
  double trace_tolerance = 1e-6;
  double leak_threshold = 1e-4;
};

struct EvolveReport {
  int substeps_per_interval = 0;
  double substep_us = 0.0;
  double max_trace_drift = 0.0;
  double max_edge_population = 0.0;
  bool truncation_leak = false;
  std::vector<std::string> warnings;
};

/// Called at every grid sample with the full density matrix in `frame`.
using SampleObserver = std::function<void(int index, double t, const DensityMatrix& rho)>;

/// Integrates the master equation from rho0 = rho(grid.t_start).
/// Throws IntegrationFailure if |tr rho - 1| drifts beyond options.trace_tolerance
/// or any matrix element leaves the unit disc.
EvolveReport evolve_density(const DensityMatrix& rho0, const ModelParams& params, double gamma_rate,
                            const TimeGrid& grid, Frame frame, const SampleObserver& observer,
                            const EvolveOptions& options = {});

/// Full density matrices at every grid time.
std::vector<DensityMatrix> evolve(const InitialCondition& ic, const ModelParams& params, const TimeGrid& grid,
                                  Frame frame, Branch branch = Branch::plus, EvolveReport* report = nullptr,
                                  const EvolveOptions& options = {});

/// Bloch trajectory of the reduced qubit state, in the frame that was integrated.
QubitTrajectory evolve_qubit(const InitialCondition& ic, const ModelParams& params, const TimeGrid& grid,
                             Frame frame, Branch branch = Branch::plus, EvolveReport* report = nullptr,
                             const EvolveOptions& options = {});
QubitTrajectory evolve_qubit(const DensityMatrix& rho0, const ModelParams& params, double gamma_rate,
                             const TimeGrid& grid, Frame frame, EvolveReport* report = nullptr,
                             const EvolveOptions& options = {});

/// Substep count per output interval implied by the step bound.
int substeps_per_interval(const ModelParams& params, double spacing, const EvolveOptions& options = {});

// --- trajectory export -------------------------------------------------------------

/// CSV with header t_us,sx,sy,sz[,sx_err,sy_err,sz_err]; 17 significant digits.
void write_trajectory_csv(const std::string& path, const QubitTrajectory& traj, bool force_errors = false);
QubitTrajectory read_trajectory_csv(const std::string& path);

std::string to_string(QubitLabel label);
QubitLabel qubit_label_from_string(const std::string& s);

}  // namespace iontrap
