#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "iontrap/error.hpp"
#include "iontrap/nmeasure.hpp"

using namespace iontrap;

namespace {

QubitTrajectory constant_trajectory(const Bloch& s, const Bloch& err, int n, double dt) {
  QubitTrajectory t;
  for (int i = 0; i < n; ++i) {
    t.times.push_back(i * dt);
    t.bloch.push_back(s);
  }
  t.bloch_err = std::vector<Bloch>(n, err);
  return t;
}

DensityMatrix from_bloch(const Bloch& s) {
  DensityMatrix rho(2, 2);
  rho << 0.5 * (1.0 + s[2]), 0.5 * Complex(s[0], -s[1]), 0.5 * Complex(s[0], s[1]), 0.5 * (1.0 - s[2]);
  return rho;
}

Bloch random_bloch(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Bloch s{g(rng), g(rng), g(rng)};
  const double norm = std::hypot(s[0], s[1], s[2]);
  const double r = std::cbrt(u(rng));
  for (double& c : s) c *= r / norm;
  return s;
}

// First-order propagation with the gradient of D = |S1 - S2| / 2 taken by central differences.
double finite_difference_dd(const Bloch& s1, const Bloch& s2, const Bloch& e1, const Bloch& e2) {
  const double h = 1e-6;
  double var = 0.0;
  for (int l = 0; l < 3; ++l) {
    Bloch up = s1, down = s1;
    up[l] += h;
    down[l] -= h;
    const double g1 = (trace_distance(up, s2) - trace_distance(down, s2)) / (2 * h);
    up = s2;
    down = s2;
    up[l] += h;
    down[l] -= h;
    const double g2 = (trace_distance(s1, up) - trace_distance(s1, down)) / (2 * h);
    var += g1 * g1 * e1[l] * e1[l] + g2 * g2 * e2[l] * e2[l];
  }
  return std::sqrt(var);
}

InitialCondition start(QubitLabel label) {
  InitialCondition ic;
  ic.qubit = QubitSpec::named(label);
  return ic;
}

}  // namespace

TEST_CASE("trace distance examples") {
  const Ket plus = prepare_qubit(QubitLabel::plus_x, PrepMode::ideal);
  const Ket minus = prepare_qubit(QubitLabel::minus_x, PrepMode::ideal);
  CHECK(trace_distance(plus * plus.adjoint(), minus * minus.adjoint()) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(trace_distance(plus * plus.adjoint(), plus * plus.adjoint()) < 1e-15);
  CHECK(trace_distance(Bloch{0.6, 0, 0}, Bloch{0, 0.8, 0}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(trace_distance(from_bloch({0.6, 0, 0}), from_bloch({0, 0.8, 0})) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(trace_distance(OperatorMatrix::Identity(3, 3), OperatorMatrix::Identity(3, 3)), ShapeError);
}

TEST_CASE("eigenvalue and Bloch trace distances agree") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Bloch a = random_bloch(rng);
    const Bloch b = random_bloch(rng);
    CHECK(std::abs(trace_distance(from_bloch(a), from_bloch(b)) - trace_distance(a, b)) < 1e-12);
  }
}

TEST_CASE("sigma series") {
  const std::vector<double> t{0.0, 0.1, 0.2, 0.3, 0.4};
  for (double s : sigma_series(t, {0.7, 0.7, 0.7, 0.7, 0.7})) CHECK(s == 0.0);
  for (double s : sigma_series(t, t)) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sigma_series(t, t).size() == 3);

  std::vector<double> times, d;
  for (int i = 0; i <= 20; ++i) {
    times.push_back(0.1 * i);
    d.push_back(std::exp(-0.1 * i));
  }
  const std::vector<double> s = sigma_series(times, d);
  CHECK(std::abs(s[9] - (-std::exp(-1.0) * std::sinh(0.1) / 0.1)) < 1e-12);
  CHECK(std::abs(s[9] - (-0.368493)) < 1e-6);

  CHECK_THROWS(sigma_series({0.0, 0.1, 0.3}, {1.0, 1.0, 1.0}));
  CHECK_THROWS(sigma_series({0.0, 0.1}, {1.0, 1.0}));
  CHECK_THROWS(sigma_series({0.0, 0.1, 0.2}, {1.0, 1.0}));
}

TEST_CASE("sigma converges at second order") {
  auto max_error = [](int n) {
    const double dt = 4.0 / n;
    std::vector<double> times, d;
    for (int i = 0; i <= n; ++i) {
      times.push_back(i * dt);
      d.push_back(std::exp(-i * dt) * std::cos(i * dt));
    }
    const std::vector<double> s = sigma_series(times, d);
    double worst = 0.0;
    for (double t : {1.0, 2.0, 3.0}) {
      const int i = static_cast<int>(std::lround(t / dt));
      const double exact = -std::exp(-t) * (std::cos(t) + std::sin(t));
      worst = std::max(worst, std::abs(s[i - 1] - exact));
    }
    return worst;
  };
  CHECK(std::log2(max_error(40) / max_error(80)) >= 1.9);
  CHECK(std::log2(max_error(80) / max_error(160)) >= 1.9);
}

TEST_CASE("nm integral") {
  CHECK(nm_integral({-1.0, 0.0, -0.5}, 0.5) == 0.0);
  CHECK(nm_integral({1.0, -1.0, 2.0}, 0.5) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(nm_integral({}, 0.5) == 0.0);
}

TEST_CASE("nm is cumulative in the window") {
  std::vector<double> times, d;
  for (int i = 0; i <= 200; ++i) {
    times.push_back(0.5 * i);
    d.push_back(0.5 + 0.4 * std::exp(-0.01 * i) * std::cos(0.3 * i));
  }
  double last = 0.0;
  for (int end = 10; end <= 200; end += 10) {
    const std::vector<double> t(times.begin(), times.begin() + end + 1);
    const std::vector<double> dd(d.begin(), d.begin() + end + 1);
    const double nm = nm_integral(sigma_series(t, dd), 0.5);
    CHECK(nm >= last);
    last = nm;
  }
  CHECK(last > 0.0);
}

TEST_CASE("error chain with zero shot errors") {
  const Bloch zero{0, 0, 0};
  QubitTrajectory a = constant_trajectory({0.5, 0.1, 0}, zero, 5, 0.5);
  QubitTrajectory b = constant_trajectory({-0.5, 0, 0.2}, zero, 5, 0.5);
  a.bloch[2][0] = 0.7;
  const NMResult r = error_chain(a, b);
  for (double v : *r.trace_distance_err) CHECK(v == 0.0);
  for (double v : *r.sigma_err) CHECK(v == 0.0);
  CHECK(r.nm > 0.0);
  CHECK(*r.nm_err == 0.0);
}

TEST_CASE("error chain first-order propagation") {
  const Bloch e{0.04, 0, 0};
  const QubitTrajectory a = constant_trajectory({0.5, 0, 0}, e, 3, 0.5);
  const QubitTrajectory b = constant_trajectory({-0.5, 0, 0}, e, 3, 0.5);
  const NMResult r = error_chain(a, b);
  const double oracle = finite_difference_dd({0.5, 0, 0}, {-0.5, 0, 0}, e, e);
  CHECK(std::abs(oracle - 0.0282843) < 1e-6);
  CHECK(std::abs((*r.trace_distance_err)[1] - oracle) < 1e-9);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.001, 0.05);
  for (int trial = 0; trial < 20; ++trial) {
    const Bloch s1 = random_bloch(rng), s2 = random_bloch(rng);
    const Bloch e1{u(rng), u(rng), u(rng)}, e2{u(rng), u(rng), u(rng)};
    const NMResult rr = error_chain(constant_trajectory(s1, e1, 3, 1.0), constant_trajectory(s2, e2, 3, 1.0));
    CHECK(std::abs((*rr.trace_distance_err)[0] - finite_difference_dd(s1, s2, e1, e2)) < 1e-8);
  }
}

TEST_CASE("error chain: constant dD gives c sqrt2 / dt") {
  const Bloch e{0.02, 0.03, 0.01};
  const double dt = 0.25;
  const NMResult r = error_chain(constant_trajectory({0.3, -0.2, 0.1}, e, 7, dt),
                                 constant_trajectory({-0.1, 0.4, -0.3}, e, 7, dt));
  const double c = (*r.trace_distance_err)[0];
  CHECK(c > 0.0);
  for (double v : *r.sigma_err) CHECK(std::abs(v - c * std::sqrt(2.0) / dt) < 1e-12);
  CHECK(*r.nm_err == 0.0);
}

TEST_CASE("error chain: nm error sums over positive sigma") {
  const double dt = 0.5;
  QubitTrajectory a, b;
  for (int i = 0; i < 8; ++i) {
    a.times.push_back(i * dt);
    b.times.push_back(i * dt);
    const double x = 0.1 + 0.05 * i * (i % 3 == 2 ? -1.0 : 1.0);
    a.bloch.push_back({x, 0, 0});
    b.bloch.push_back({-x, 0, 0});
  }
  a.bloch_err = std::vector<Bloch>(8, Bloch{0.02, 0.01, 0.01});
  b.bloch_err = std::vector<Bloch>(8, Bloch{0.03, 0.01, 0.01});
  const NMResult r = error_chain(a, b);
  double var = 0.0;
  for (std::size_t i = 0; i < r.sigma.size(); ++i) {
    if (r.sigma[i] > 0.0) var += std::pow((*r.sigma_err)[i] * dt, 2);
  }
  CHECK(*r.nm_err > 0.0);
  CHECK(std::abs(*r.nm_err - std::sqrt(var)) < 1e-15);
}

TEST_CASE("error chain singular point") {
  const Bloch e1{0.01, 0.05, 0.02}, e2{0.03, 0.0, 0.02};
  QubitTrajectory a = constant_trajectory({0.2, 0.2, 0.2}, e1, 3, 1.0);
  QubitTrajectory b = constant_trajectory({0.2, 0.2, 0.2}, e2, 3, 1.0);
  const NMResult r = error_chain(a, b);
  CHECK(r.singular_points.size() == 3);
  CHECK((*r.trace_distance_err)[1] == doctest::Approx(0.5 * std::sqrt(0.05 * 0.05)).epsilon(1e-14));
  QubitTrajectory plain = a;
  plain.bloch_err.reset();
  CHECK_THROWS(error_chain(plain, b));
}

TEST_CASE("unitary invariance under a common z rotation") {
  QubitTrajectory a, b;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 30; ++i) {
    a.times.push_back(0.2 * i);
    b.times.push_back(0.2 * i);
    a.bloch.push_back(random_bloch(rng));
    b.bloch.push_back(random_bloch(rng));
  }
  const NMResult r0 = analyze_pair(a, b);
  const NMResult r1 = analyze_pair(to_lab_frame(a, 1.3), to_lab_frame(b, 1.3));
  for (std::size_t i = 0; i < r0.trace_distance.size(); ++i) {
    CHECK(std::abs(r0.trace_distance[i] - r1.trace_distance[i]) < 1e-12);
  }
  for (std::size_t i = 0; i < r0.sigma.size(); ++i) CHECK(std::abs(r0.sigma[i] - r1.sigma[i]) < 1e-12);
  CHECK(std::abs(r0.nm - r1.nm) < 1e-12);
}

TEST_CASE("pure dephasing is Markovian") {
  ModelParams p = reference_single_mode_params(4);
  p.rabi_mhz = 0.0;
  const TimeGrid grid{0.0, 100.0, 201};
  const PairRun run = nm_for_pair(start(QubitLabel::plus_x), start(QubitLabel::minus_x), p, grid);
  CHECK(run.result.nm < 1e-9);
  for (double s : run.result.sigma) CHECK(s <= 1e-9);
  for (std::size_t i = 0; i < run.result.times.size(); ++i) {
    CHECK(std::abs(run.result.trace_distance[i] - std::exp(-2 * 0.004 * run.result.times[i])) < 1e-6);
  }
  p.gamma_plus_mhz = 0.0049;
  p.gamma_minus_mhz = 0.0008;
  CHECK(nm_for_pair(start(QubitLabel::plus_x), start(QubitLabel::minus_x), p, grid).result.nm < 1e-9);

  const MaximizedNM best = nm_maximized(p, TimeGrid{0.0, 20.0, 41}, 5, 4);
  CHECK(best.result.nm < 1e-9);
}

TEST_CASE("unitary qubit rotation keeps D = 1") {
  ModelParams p = reference_single_mode_params(4);
  p.modes[0].lamb_dicke = 0.0;
  p.gamma_plus_mhz = p.gamma_minus_mhz = 0.0;
  for (double rabi : {0.3, 1.7, 2.32}) {
    p.rabi_mhz = rabi;
    const TimeGrid grid{0.0, 10.0, 41};
    const PairRun run = nm_for_pair(start(QubitLabel::g), start(QubitLabel::e), p, grid);
    for (double d : run.result.trace_distance) CHECK(std::abs(d - 1.0) < 1e-6);
    CHECK(run.result.nm < 1e-9);
    // RK4 damps a rotation by O((h omega)^6) per step; a finer substep restores D = 1 to 1e-9.
    PairOptions fine;
    fine.evolve.substep_multiplier = 4;
    const PairRun refined = nm_for_pair(start(QubitLabel::g), start(QubitLabel::e), p, grid, fine);
    for (double d : refined.result.trace_distance) CHECK(std::abs(d - 1.0) < 1e-9);
    CHECK(refined.result.nm < 1e-9);
  }
}

TEST_CASE("reference parameters: D starts at 1 and shows revivals") {
  const ModelParams p = reference_two_mode_params(5);
  const PairRun run = nm_for_pair(start(QubitLabel::plus_x), start(QubitLabel::minus_x), p, TimeGrid{0.0, 20.0, 41});
  CHECK(run.result.trace_distance.front() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(run.result.trace_distance.back() < 1.0);
  CHECK(run.result.nm > 0.0);
  for (double d : run.result.trace_distance) CHECK(d <= 1.0 + 1e-9);
}

TEST_CASE("affine map reproduces direct evolution") {
  ModelParams p = reference_single_mode_params(6);
  p.detuning_mhz = 0.4;
  const TimeGrid grid{0.0, 5.0, 21};
  const QubitAffineMap map = qubit_affine_map({}, p, 0.004, grid);
  for (auto spec : {QubitSpec::angles(0.7, 1.9), QubitSpec::angles(2.5, 4.1), QubitSpec::named(QubitLabel::minus_y)}) {
    InitialCondition ic;
    ic.qubit = spec;
    const QubitTrajectory direct = evolve_qubit(ic, p, grid, Frame::lab);
    const Ket k = qubit_ket(spec, PrepMode::ideal);
    const QubitTrajectory mapped = map.apply(pauli_expectations(k * k.adjoint()));
    for (std::size_t i = 0; i < direct.size(); ++i) {
      for (int c = 0; c < 3; ++c) CHECK(std::abs(direct.bloch[i][c] - mapped.bloch[i][c]) < 1e-10);
    }
  }
}

TEST_CASE("maximisation grids") {
  CHECK(theta_grid(1) == std::vector<double>{std::numbers::pi / 2});
  const auto th = theta_grid(11);
  CHECK(th.size() == 11);
  CHECK(th.front() == 0.0);
  CHECK(th.back() == doctest::Approx(std::numbers::pi));
  const auto ph = phi_grid(12);
  CHECK(ph.size() == 12);
  CHECK(ph[1] == doctest::Approx(kTwoPi / 12));
  CHECK(ph.back() < kTwoPi);
}

TEST_CASE("degenerate maximisation equals the fixed pair") {
  const ModelParams p = reference_two_mode_params(4);
  const TimeGrid grid{0.0, 10.0, 21};
  const MaximizedNM best = nm_maximized(p, grid, 1, 1);
  const PairRun fixed = nm_for_pair(start(QubitLabel::plus_x), start(QubitLabel::minus_x), p, grid);
  CHECK(best.theta == doctest::Approx(std::numbers::pi / 2));
  CHECK(best.phi == 0.0);
  CHECK(std::abs(best.result.nm - fixed.result.nm) < 1e-12);
}

TEST_CASE("maximisation dominates every pair on its grid") {
  ModelParams p = reference_single_mode_params(6);
  p.rabi_mhz = 1.9;
  p.detuning_mhz = 1.37;
  const TimeGrid grid{0.0, 10.0, 51};
  const MaximizedNM best = nm_maximized(p, grid, 5, 4);
  REQUIRE(best.landscape.size() == 20);
  for (double theta : theta_grid(5)) {
    for (double phi : phi_grid(4)) {
      InitialCondition a, b;
      a.qubit = QubitSpec::angles(theta, phi);
      b.qubit = QubitSpec::angles(std::numbers::pi - theta, std::fmod(phi + std::numbers::pi, kTwoPi));
      const double nm = nm_for_pair(a, b, p, grid).result.nm;
      CHECK(best.result.nm >= nm - 1e-9);
    }
  }
}

TEST_CASE("interaction-frame pair is rotated back before D is formed") {
  ModelParams p = reference_single_mode_params(8);
  p.detuning_mhz = 1.0;
  p.rabi_mhz = 1.0;
  const TimeGrid grid{0.0, 10.0, 41};
  PairOptions inter;
  inter.frame = Frame::interaction;
  const PairRun a = nm_for_pair(start(QubitLabel::plus_x), start(QubitLabel::minus_x), p, grid);
  const PairRun b = nm_for_pair(start(QubitLabel::plus_x), start(QubitLabel::minus_x), p, grid, inter);
  for (std::size_t i = 0; i < a.traj1.size(); ++i) {
    for (int c = 0; c < 3; ++c) CHECK(std::abs(a.traj1.bloch[i][c] - b.traj1.bloch[i][c]) < 1e-6);
  }
  CHECK(std::abs(a.result.nm - b.result.nm) < 1e-5);
}

TEST_CASE("shots populate the error chain") {
  const ModelParams p = reference_two_mode_params(4);
  PairOptions o;
  o.shots = ShotConfig{600, 7};
  const PairRun run = nm_for_pair(start(QubitLabel::plus_x), start(QubitLabel::minus_x), p, TimeGrid{0.0, 5.0, 11}, o);
  REQUIRE(run.result.nm_err);
  CHECK(*run.result.nm_err >= 0.0);
  REQUIRE(run.traj1.bloch_err);
  REQUIRE(run.result.sigma_err);
}

TEST_CASE("nm csv layout") {
  NMResult r;
  r.times = {0.0, 0.5, 1.0};
  r.trace_distance = {1.0, 0.9, 0.95};
  r.sigma = {-0.05};
  r.dt = 0.5;
  const auto path = (std::filesystem::temp_directory_path() / "iontrap_nm_test.csv").string();
  write_nm_csv(path, r);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t_us,D,D_err,sigma,sigma_err");
  std::getline(in, line);
  CHECK(line == "0,1,,,");
  std::getline(in, line);
  CHECK(line == "0.5,0.90000000000000002,,-0.050000000000000003,");
  std::filesystem::remove(path);
}
