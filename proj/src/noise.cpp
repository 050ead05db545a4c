#include "iontrap/noise.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "iontrap/error.hpp"

namespace iontrap {

void ShotConfig::validate() const {
  if (n_cycles < 1) throw ConfigError("shots.n_cycles", "must be >= 1");
}

double qpn_error(double p, int n) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("qpn_error: p must lie in [0, 1]");
  if (n < 1) throw std::invalid_argument("qpn_error: N must be >= 1");
  return 2.0 * std::sqrt(p * (1.0 - p) / n);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

int draw(double p, int n, std::uint64_t seed) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::mt19937_64 rng(seed);
  std::binomial_distribution<int> dist(n, p);
  return dist(rng);
}

}  // namespace

QubitTrajectory sample_trajectory(const QubitTrajectory& traj, const ShotConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  QubitTrajectory out;
  out.times = traj.times;
  out.bloch.resize(traj.size());
  out.bloch_err.emplace(traj.size());
  const std::uint64_t base = mix_seed(cfg.seed, stream);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    for (int l = 0; l < 3; ++l) {
      const double p = std::clamp(0.5 * (traj.bloch[i][l] + 1.0), 0.0, 1.0);
      const int k = draw(p, cfg.n_cycles, mix_seed(base, 3 * i + l));
      const double p_hat = static_cast<double>(k) / cfg.n_cycles;
      out.bloch[i][l] = 2.0 * p_hat - 1.0;
      (*out.bloch_err)[i][l] = qpn_error(p_hat, cfg.n_cycles);
    }
  }
  return out;
}

ErrorCheck empirical_error_check(double p, int n, int trials, std::uint64_t seed) {
  if (trials < 1000) throw std::invalid_argument("empirical_error_check: need at least 1000 trials");
  ErrorCheck check;
  check.formula_std = qpn_error(p, n);
  std::mt19937_64 rng(seed);
  std::binomial_distribution<int> dist(n, std::clamp(p, 0.0, 1.0));
  double mean = 0.0;
  double m2 = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double x = 2.0 * dist(rng) / n - 1.0;
    const double delta = x - mean;
    mean += delta / (t + 1);
    m2 += delta * (x - mean);
  }
  check.empirical_std = std::sqrt(m2 / (trials - 1));
  return check;
}

}  // namespace iontrap
