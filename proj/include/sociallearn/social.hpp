#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "sociallearn/gridworld.hpp"
#include "sociallearn/rl.hpp"

namespace sociallearn {

struct ExpertStep {
  Cell state;
  Action action;
  friend bool operator==(const ExpertStep&, const ExpertStep&) = default;
};

// One demonstration episode of the expert. `steps[t]` is revealed to the
// learner at its step t.
struct ExpertTrace {
  std::vector<ExpertStep> steps;
  bool terminated_early = false;  // ended on a positive reward
  Cell final_state;
  int cum_reward = 0;

  // Expert location once step t has been taken; frozen at the final state
  // after the expert terminates.
  Cell location_after(std::size_t t) const noexcept {
    return t + 1 < steps.size() ? steps[t + 1].state : final_state;
  }

  friend bool operator==(const ExpertTrace&, const ExpertTrace&) = default;
};

// Controls for the belief-based expected-steps recursion.
struct DistanceControls {
  double cap = 1000.0;
  double tol = 1e-3;
  int max_iterations = 500;
};

struct DistanceMap {
  std::vector<double> steps;
  int iterations = 0;
  bool converged = false;
};

// Expected number of actions to reach `target` under the agent's beliefs:
// D(s) = min_a sum_{s'} B(s'|s,a) (1 + D(s')), D(target) = 0, clamped to cap.
//
// Gauss-Seidel sweeps from D = 0. The self-transition term of each action is
// solved in closed form, which leaves the fixed point unchanged but removes
// the slow geometric convergence caused by self-loop mass.
inline DistanceMap belief_distance_map(const BeliefModel& beliefs, int target, const DistanceControls& ctl = {}) {
  const int n = beliefs.num_states();
  DistanceMap out;
  out.steps.assign(static_cast<std::size_t>(n), 0.0);
  auto& d = out.steps;
  for (out.iterations = 1; out.iterations <= ctl.max_iterations; ++out.iterations) {
    double change = 0.0;
    for (int s = 0; s < n; ++s) {
      if (s == target) continue;
      const auto succ = beliefs.successors(s);
      double best = ctl.cap;
      for (int a = 0; a < kNumActions; ++a) {
        const auto p = beliefs.probs(s, a);
        double self = 0.0;
        double rest = 1.0;
        for (std::size_t i = 0; i < succ.size(); ++i) {
          if (succ[i] == s)
            self = p[i];
          else
            rest += p[i] * d[static_cast<std::size_t>(succ[i])];
        }
        if (self < 1.0) best = std::min(best, rest / (1.0 - self));
      }
      best = std::min(best, ctl.cap);
      change = std::max(change, std::abs(best - d[static_cast<std::size_t>(s)]));
      d[static_cast<std::size_t>(s)] = best;
    }
    if (change < ctl.tol) {
      out.converged = true;
      break;
    }
  }
  if (out.iterations > ctl.max_iterations) out.iterations = ctl.max_iterations;
  return out;
}

// Spreads probability 1 uniformly over the minimizing actions.
inline ActionProbs argmin_policy(const std::array<double, kNumActions>& scores, double rel_tol = 1e-9) {
  const double lo = *std::min_element(scores.begin(), scores.end());
  const double slack = rel_tol * std::max(1.0, std::abs(lo));
  ActionProbs p{};
  int ties = 0;
  for (int a = 0; a < kNumActions; ++a)
    if (scores[a] <= lo + slack) ++ties;
  for (int a = 0; a < kNumActions; ++a)
    if (scores[a] <= lo + slack) p[a] = 1.0 / ties;
  return p;
}

// Model-free social policy: Manhattan distance from the grid-clipped intended
// cell (walls ignored) to the expert.
inline ActionProbs social_policy_manhattan(const Grid& grid, Cell learner, Cell expert) {
  std::array<double, kNumActions> scores{};
  for (Action a : kAllActions) scores[index_of(a)] = manhattan_distance(grid.clipped(learner, a), expert);
  return argmin_policy(scores);
}

// Model-based social policy: expected remaining distance after each action
// under the learner's beliefs.
inline ActionProbs social_policy_beliefs(const BeliefModel& beliefs, int learner, const std::vector<double>& distance) {
  std::array<double, kNumActions> scores{};
  const auto succ = beliefs.successors(learner);
  for (int a = 0; a < kNumActions; ++a) {
    const auto p = beliefs.probs(learner, a);
    double e = 0.0;
    for (std::size_t i = 0; i < succ.size(); ++i) e += p[i] * distance[static_cast<std::size_t>(succ[i])];
    scores[a] = e;
  }
  return argmin_policy(scores);
}

inline ActionProbs db_policy(const ActionProbs& asocial, const ActionProbs& social, double omega) {
  ActionProbs p{};
  for (int a = 0; a < kNumActions; ++a) p[a] = (1.0 - omega) * asocial[a] + omega * social[a];
  return p;
}

inline void vs_bonus(QTable& q, int expert_state, int expert_action, double kappa) {
  q(expert_state, expert_action) += kappa;
}

}  // namespace sociallearn
