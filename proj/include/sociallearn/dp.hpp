#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sociallearn/gridworld.hpp"
#include "sociallearn/rl.hpp"

namespace sociallearn {

inline constexpr double kOptimalGamma = 0.99;

struct OptimalQ {
  QTable values;
  double gamma = kOptimalGamma;
  bool converged = false;
  double residual = 0.0;
  int sweeps = 0;
};

// Expected one-step reward of the true (deterministic) dynamics: the base value
// of a positive reward cell, otherwise the step cost.
inline double expected_reward(const WorldConfig& world, Cell next) {
  const int v = world.reward_value_at(next);
  return v > 0 ? v : kStepCost;
}

// Bellman backup of q at (s, a). Positive reward cells are absorbing.
inline double bellman_backup(const WorldConfig& world, const QTable& q, int s, int a, double gamma) {
  const Cell c = world.grid.cell(s);
  if (world.is_positive_reward_cell(c)) return 0.0;
  const Cell next = step_dynamics(world, c, kAllActions[static_cast<std::size_t>(a)]);
  const double r = expected_reward(world, next);
  return world.is_positive_reward_cell(next) ? r : r + gamma * q.max(world.grid.index(next));
}

inline double bellman_residual(const WorldConfig& world, const QTable& q, double gamma) {
  double worst = 0.0;
  for (int s = 0; s < q.num_states(); ++s)
    for (int a = 0; a < kNumActions; ++a) worst = std::max(worst, std::abs(q(s, a) - bellman_backup(world, q, s, a, gamma)));
  return worst;
}

// Value iteration (synchronous sweeps from zero) on the noise-free rewards.
inline OptimalQ optimal_q(const WorldConfig& world, double gamma = kOptimalGamma, double tol = 1e-6,
                          int max_sweeps = 100000) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("optimal_q: gamma must lie in [0,1)");
  OptimalQ out;
  out.gamma = gamma;
  out.values = QTable(world.grid.size(), 0.0);
  QTable next = out.values;
  for (out.sweeps = 1; out.sweeps <= max_sweeps; ++out.sweeps) {
    double change = 0.0;
    for (int s = 0; s < next.num_states(); ++s)
      for (int a = 0; a < kNumActions; ++a) {
        next(s, a) = bellman_backup(world, out.values, s, a, gamma);
        change = std::max(change, std::abs(next(s, a) - out.values(s, a)));
      }
    std::swap(out.values, next);
    if (change < tol) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged) throw std::runtime_error("optimal_q: value iteration did not converge");
  out.residual = bellman_residual(world, out.values, gamma);
  return out;
}

}  // namespace sociallearn
