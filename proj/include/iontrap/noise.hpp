#pragma once

// Finite-shot tomography emulation with quantum projection noise.
//
// Each Bloch component at each time is measured independently with n_cycles
// projective shots: k ~ Binomial(N, p), p = (<s> + 1) / 2, reported as
// 2k/N - 1 with standard error 2 sqrt(p^(1 - p^) / N). Draws use
// std::mt19937_64 seeded per (seed, branch, time index, component) through a
// splitmix64 mix, so results do not depend on evaluation order.

#include <cstdint>

#include "iontrap/dynamics.hpp"

namespace iontrap {

struct ShotConfig {
  int n_cycles = 600;
  std::uint64_t seed = 0;

  void validate() const;
};

/// 2 sqrt(p (1 - p) / N).
double qpn_error(double p, int n);

/// splitmix64 finaliser applied to a ^ (b + golden ratio increment).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Noisy copy of `traj` with bloch_err filled in. `stream` separates
/// independent datasets drawn with the same seed.
QubitTrajectory sample_trajectory(const QubitTrajectory& traj, const ShotConfig& cfg, std::uint64_t stream = 0);

struct ErrorCheck {
  double empirical_std = 0.0;
  double formula_std = 0.0;
};

/// Monte-Carlo standard deviation of the sampled <s> for a component with
/// outcome probability p, next to qpn_error(p, n).
ErrorCheck empirical_error_check(double p, int n, int trials, std::uint64_t seed = 1);

}  // namespace iontrap
