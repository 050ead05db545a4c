#include <doctest.h>

#include <cmath>
#include <random>

#include "iontrap/error.hpp"
#include "iontrap/hilbert.hpp"

using namespace iontrap;

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

// <m| e^{-eta^2/2} e^{i eta a^dag} e^{i eta a} |n> on the untruncated oscillator.
Complex normal_ordered_element(double eta, int m, int n) {
  const Complex ie(0.0, eta);
  Complex sum = 0.0;
  for (int k = 0; k <= std::min(m, n); ++k) {
    sum += std::pow(ie, m - k) / factorial(m - k) * std::sqrt(factorial(m) / factorial(k)) * std::pow(ie, n - k) /
           factorial(n - k) * std::sqrt(factorial(n) / factorial(k));
  }
  return std::exp(-0.5 * eta * eta) * sum;
}

DensityMatrix random_density(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  OperatorMatrix a(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) a(i, j) = Complex(g(rng), g(rng));
  }
  DensityMatrix rho = a * a.adjoint();
  return rho / rho.trace();
}

double max_abs(const OperatorMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("annihilation operator entries") {
  const OperatorMatrix a2 = annihilation(2);
  CHECK(std::abs(a2(0, 1) - 1.0) < 1e-15);
  CHECK(std::abs(a2(0, 0)) == 0.0);
  CHECK(std::abs(a2(1, 0)) == 0.0);
  CHECK(std::abs(a2(1, 1)) == 0.0);

  CHECK(std::abs(annihilation(3)(1, 2) - std::sqrt(2.0)) < 1e-15);

  const OperatorMatrix a4 = annihilation(4);
  const OperatorMatrix number = a4.adjoint() * a4;
  for (int n = 0; n < 4; ++n) CHECK(std::abs(number(n, n) - double(n)) < 1e-14);
  CHECK(max_abs(number - OperatorMatrix(number.diagonal().asDiagonal())) < 1e-15);

  CHECK_THROWS_AS(annihilation(1), InvalidDimension);
}

TEST_CASE("displacement coupling at eta = 0 is the identity") {
  CHECK(max_abs(displacement_coupling(0.0, 6) - OperatorMatrix::Identity(6, 6)) < 1e-15);
  CHECK_THROWS_AS(displacement_coupling(0.1, 1), InvalidDimension);
}

TEST_CASE("displacement coupling matches the normal-ordered closed form") {
  const double eta = 0.069;
  const OperatorMatrix u = displacement_coupling(eta, 20);
  CHECK(std::abs(u(0, 0) - std::exp(-eta * eta / 2)) < 1e-10);
  CHECK(std::abs(u(0, 0).real() - 0.997622) < 1e-6);
  CHECK(std::abs(std::abs(u(0, 1)) - eta * std::exp(-eta * eta / 2)) < 1e-10);
  CHECK(std::abs(std::abs(u(0, 1)) - 0.068836) < 1e-6);

  for (double e : {0.02, 0.069, 0.072, 0.1}) {
    for (int dim : {15, 20}) {
      const OperatorMatrix d = displacement_coupling(e, dim);
      for (int m = 0; m < dim / 2; ++m) {
        for (int n = 0; n < dim / 2; ++n) CHECK(std::abs(d(m, n) - normal_ordered_element(e, m, n)) < 1e-9);
      }
    }
  }
}

TEST_CASE("displacement coupling is unitary up to truncation") {
  for (double eta : {0.0, 0.05, 0.069, 0.1}) {
    for (int dim : {15, 20, 30}) {
      const OperatorMatrix u = displacement_coupling(eta, dim);
      CHECK(max_abs(u.adjoint() * u - OperatorMatrix::Identity(dim, dim)) < 1e-8);
    }
  }
}

TEST_CASE("thermal state populations") {
  const DensityMatrix ground = thermal_state(0.0, 5);
  CHECK(std::abs(ground(0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(ground.trace() - 1.0) < 1e-15);

  CHECK(std::abs(thermal_state(0.05, 15)(0, 0).real() - 1.0 / 1.05) < 1e-12);
  CHECK(std::abs(1.0 / 1.05 - 0.952381) < 1e-6);

  const DensityMatrix rho = thermal_state(0.05, 15);
  const OperatorMatrix a = annihilation(15);
  CHECK(std::abs((rho * a.adjoint() * a).trace() - 0.05) < 1e-6);
  CHECK(std::abs(rho.trace() - 1.0) < 1e-14);

  const DensityMatrix hot = thermal_state(1.3, 12);
  for (int n = 0; n + 1 < 12; ++n) {
    CHECK(hot(n, n).real() > 0.0);
    CHECK(hot(n + 1, n + 1).real() < hot(n, n).real());
    CHECK(std::abs(hot(n + 1, n + 1).real() / hot(n, n).real() - 1.3 / 2.3) < 1e-12);
  }
}

TEST_CASE("coherent state is normalised with Poisson populations") {
  const DensityMatrix rho = coherent_state(Complex(1.0, 0.0), 25);
  CHECK(std::abs(rho.trace() - 1.0) < 1e-12);
  for (int n = 0; n < 6; ++n) CHECK(std::abs(rho(n, n).real() - std::exp(-1.0) / factorial(n)) < 1e-10);
  CHECK(min_eigenvalue(rho) > -1e-12);
}

TEST_CASE("mode validation") {
  ModelParams p = reference_single_mode_params(8);
  CHECK_NOTHROW(p.validate());
  p.modes[0].frequency_mhz = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = reference_single_mode_params(8);
  p.modes[0].fock_dim = 1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = reference_single_mode_params(8);
  p.modes.clear();
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = reference_two_mode_params(4);
  p.modes.push_back(p.modes[0]);
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = reference_single_mode_params(8);
  p.rabi_mhz = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = reference_single_mode_params(8);
  p.gamma_minus_mhz = -0.1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("gamma units") {
  ModelParams p = reference_single_mode_params(4);
  CHECK(p.gamma_rate(0.004) == doctest::Approx(0.004));
  p.gamma_units = GammaUnits::mhz_angular;
  CHECK(p.gamma_rate(0.004) == doctest::Approx(kTwoPi * 0.004));
}

TEST_CASE("hamiltonian without drive is the oscillator spectrum") {
  ModelParams p = reference_two_mode_params(4);
  p.rabi_mhz = 0.0;
  const OperatorMatrix h = build_hamiltonian(p);
  const CompositeSpace space(p);
  CHECK(h.rows() == 32);
  CHECK(max_abs(h - OperatorMatrix(h.diagonal().asDiagonal())) == 0.0);
  for (int q = 0; q < 2; ++q) {
    for (int m = 0; m < space.motional_dim(); ++m) {
      const double expected = angular(2.32) * space.occupation(m, 0) + angular(3.16) * space.occupation(m, 1);
      CHECK(std::abs(h(q * 16 + m, q * 16 + m) - expected) < 1e-12);
    }
  }
}

TEST_CASE("hamiltonian with eta = 0 reduces to the carrier qubit block") {
  ModelParams p;
  p.modes = {ModeSpec{1.7, 0.0, 3, 0.0}};
  p.rabi_mhz = 0.8;
  p.detuning_mhz = 0.3;
  const OperatorMatrix h = build_hamiltonian(p);
  const CompositeSpace space(p);
  const OperatorMatrix a = space.embed_mode(annihilation(3), 0);
  const OperatorMatrix expected = space.embed_qubit(0.5 * p.detuning_angular() * pauli::z() +
                                                    0.5 * p.rabi_angular() * pauli::x()) +
                                  angular(1.7) * a.adjoint() * a;
  CHECK(max_abs(h - expected) < 1e-12);

  p.laser_phase = 0.9;
  const OperatorMatrix phased = build_hamiltonian(p);
  const OperatorMatrix qubit = 0.5 * p.detuning_angular() * pauli::z() +
                               0.5 * p.rabi_angular() *
                                   (std::exp(Complex(0.0, 0.9)) * pauli::plus() + std::exp(Complex(0.0, -0.9)) * pauli::minus());
  CHECK(max_abs(phased - (space.embed_qubit(qubit) + angular(1.7) * a.adjoint() * a)) < 1e-12);
}

TEST_CASE("eta = 0 decouples qubit from motion") {
  ModelParams p = reference_two_mode_params(4);
  p.modes[0].lamb_dicke = 0.0;
  p.modes[1].lamb_dicke = 0.0;
  p.detuning_mhz = 0.4;
  const OperatorMatrix h = build_hamiltonian(p);
  const CompositeSpace space(p);
  for (int mode = 0; mode < 2; ++mode) {
    const OperatorMatrix a = space.embed_mode(annihilation(4), mode);
    const OperatorMatrix number = a.adjoint() * a;
    CHECK(max_abs(h * number - number * h) < 1e-12);
  }
}

TEST_CASE("hamiltonians are hermitian at the reference parameters") {
  const ModelParams p = reference_two_mode_params(8);
  CHECK(hermiticity_defect(build_hamiltonian(p)) < 1e-12);
  CHECK(hermiticity_defect(interaction_hamiltonian(p, 0.37)) < 1e-12);
  ModelParams detuned = p;
  detuned.detuning_mhz = 1.37;
  detuned.laser_phase = 0.4;
  CHECK(hermiticity_defect(interaction_hamiltonian(detuned, 0.37)) < 1e-12);
}

TEST_CASE("interaction hamiltonian phases") {
  const ModelParams p = reference_two_mode_params(4);
  CHECK(max_abs(interaction_hamiltonian(p, 0.0) - build_hamiltonian(p)) < 1e-12);
  CHECK(max_abs(interaction_hamiltonian(p, 3.3) - build_hamiltonian(p)) < 1e-12);

  ModelParams flipped = p;
  flipped.laser_phase = std::numbers::pi;
  const OperatorMatrix h0 = interaction_hamiltonian(p, 0.0);
  const OperatorMatrix h1 = interaction_hamiltonian(flipped, 0.0);
  const int m = 16;
  CHECK(max_abs(h1.topRightCorner(m, m) + h0.topRightCorner(m, m)) < 1e-12);
  CHECK(max_abs(h1.bottomLeftCorner(m, m) + h0.bottomLeftCorner(m, m)) < 1e-12);
  CHECK(max_abs(h1.topLeftCorner(m, m) - h0.topLeftCorner(m, m)) < 1e-12);

  ModelParams detuned = p;
  detuned.detuning_mhz = 0.5;
  const double t = 0.41;
  const Complex phase = std::exp(Complex(0.0, detuned.detuning_angular() * t));
  const OperatorMatrix ht = interaction_hamiltonian(detuned, t);
  CHECK(max_abs(ht.topRightCorner(m, m) - phase * h0.topRightCorner(m, m)) < 1e-12);
}

TEST_CASE("partial trace over motion") {
  std::mt19937_64 rng(11);
  const ModelParams p = reference_two_mode_params(3);
  const DensityMatrix rq = random_density(2, rng);
  const DensityMatrix rm = random_density(9, rng);
  const DensityMatrix joint = kron(rq, rm);
  CHECK(max_abs(partial_trace_motion(joint, p) - rq) < 1e-12);

  const DensityMatrix mixed = OperatorMatrix::Identity(18, 18) / 18.0;
  CHECK(max_abs(partial_trace_motion(mixed, p) - OperatorMatrix::Identity(2, 2) / 2.0) < 1e-12);

  const DensityMatrix entangled = random_density(18, rng);
  CHECK(std::abs(partial_trace_motion(entangled, p).trace() - entangled.trace()) < 1e-12);

  CHECK_THROWS_AS(partial_trace_motion(OperatorMatrix::Identity(10, 10), p), ShapeError);
}

TEST_CASE("composite space bookkeeping") {
  const CompositeSpace space(std::vector<int>{3, 4});
  CHECK(space.dim() == 24);
  CHECK(space.stride(0) == 4);
  CHECK(space.stride(1) == 1);
  CHECK(space.occupation(7, 0) == 1);
  CHECK(space.occupation(7, 1) == 3);
  const OperatorMatrix a1 = annihilation(3);
  const OperatorMatrix lifted = space.lift(a1, 0);
  CHECK(max_abs(lifted - kron(a1, OperatorMatrix::Identity(4, 4))) == 0.0);
  CHECK(max_abs(space.embed_qubit(pauli::z()) - kron(pauli::z(), OperatorMatrix::Identity(12, 12))) == 0.0);
}

TEST_CASE("pauli conventions") {
  const OperatorMatrix z = pauli::z();
  CHECK(z(0, 0).real() == 1.0);
  CHECK(z(1, 1).real() == -1.0);
  CHECK(max_abs(pauli::plus() - 0.5 * (pauli::x() + Complex(0.0, 1.0) * pauli::y())) < 1e-15);
  CHECK(std::abs(pauli::plus()(0, 1) - 1.0) < 1e-15);
  CHECK(max_abs(pauli::x() * pauli::y() - Complex(0.0, 1.0) * z) < 1e-15);
}
