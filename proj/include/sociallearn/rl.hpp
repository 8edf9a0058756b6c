#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sociallearn/gridworld.hpp"
#include "sociallearn/rng.hpp"

namespace sociallearn {

using ActionValues = std::array<double, kNumActions>;
using ActionProbs = std::array<double, kNumActions>;

inline constexpr double kInitialQ = 1.0;

class QTable {
 public:
  QTable() = default;
  explicit QTable(int num_states, double initial = kInitialQ)
      : values_(static_cast<std::size_t>(num_states), ActionValues{initial, initial, initial, initial}) {}

  int num_states() const noexcept { return static_cast<int>(values_.size()); }

  double& operator()(int s, int a) { return values_[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]; }
  double operator()(int s, int a) const { return values_[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]; }

  const ActionValues& row(int s) const { return values_[static_cast<std::size_t>(s)]; }
  double max(int s) const { return *std::max_element(row(s).begin(), row(s).end()); }

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::vector<ActionValues> values_;
};

// Softmax over one row of action values with inverse temperature beta.
inline ActionProbs softmax_policy(const ActionValues& q, double beta) {
  const double top = *std::max_element(q.begin(), q.end());
  ActionProbs p{};
  double total = 0.0;
  for (int a = 0; a < kNumActions; ++a) {
    p[a] = std::exp(beta * (q[a] - top));
    total += p[a];
  }
  for (double& x : p) x /= total;
  return p;
}

template <typename Rng>
int sample_action(const ActionProbs& p, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (int a = 0; a < kNumActions - 1; ++a) {
    acc += p[a];
    if (u < acc) return a;
  }
  // Guard against rounding in the cumulative sum: fall back to the last
  // action with positive mass.
  for (int a = kNumActions - 1; a >= 0; --a)
    if (p[a] > 0.0) return a;
  return kNumActions - 1;
}

// One-step Q-learning. Terminal transitions do not bootstrap.
inline void td_update(QTable& q, int s, int a, double r, int s_next, bool terminal, double alpha, double gamma) {
  const double target = terminal ? r : r + gamma * q.max(s_next);
  q(s, a) += alpha * (target - q(s, a));
}

// ---------------------------------------------------------------------------
// Transition beliefs

inline constexpr int kMaxSupport = 5;

// Successor candidates of a state, shared by all its actions.
struct Support {
  std::array<int, kMaxSupport> states{};
  int count = 0;

  std::span<const int> view() const noexcept { return {states.data(), static_cast<std::size_t>(count)}; }
  int position(int s) const noexcept {
    for (int i = 0; i < count; ++i)
      if (states[i] == s) return i;
    return -1;
  }
};

// Self plus the grid-clipped neighbours, ignoring walls (duplicates merged).
inline std::vector<Support> grid_support(const Grid& grid) {
  std::vector<Support> out(static_cast<std::size_t>(grid.size()));
  for (int s = 0; s < grid.size(); ++s) {
    Support& sup = out[static_cast<std::size_t>(s)];
    sup.states[sup.count++] = s;
    for (Action a : kAllActions) {
      const int n = grid.index(grid.clipped(grid.cell(s), a));
      if (sup.position(n) < 0) sup.states[sup.count++] = n;
    }
  }
  return out;
}

class BeliefModel {
 public:
  BeliefModel() = default;

  // Uniform over each state's support.
  explicit BeliefModel(std::vector<Support> support) : support_(std::move(support)) {
    probs_.resize(support_.size() * kNumActions);
    for (std::size_t s = 0; s < support_.size(); ++s) {
      const Support& sup = support_[s];
      if (sup.count < 1 || sup.count > kMaxSupport) throw std::invalid_argument("support size must be 1..5");
      for (int i = 0; i < sup.count; ++i)
        if (sup.states[i] < 0 || sup.states[i] >= static_cast<int>(support_.size()))
          throw std::invalid_argument("support state out of range");
      for (int a = 0; a < kNumActions; ++a) {
        auto& p = probs_[s * kNumActions + static_cast<std::size_t>(a)];
        p.fill(0.0);
        for (int i = 0; i < sup.count; ++i) p[i] = 1.0 / sup.count;
      }
    }
  }

  static BeliefModel for_grid(const Grid& grid) { return BeliefModel(grid_support(grid)); }

  int num_states() const noexcept { return static_cast<int>(support_.size()); }
  const Support& support(int s) const { return support_[static_cast<std::size_t>(s)]; }
  std::span<const int> successors(int s) const { return support(s).view(); }
  std::span<const double> probs(int s, int a) const {
    return {slot(s, a).data(), static_cast<std::size_t>(support(s).count)};
  }

  double prob(int s, int a, int s_next) const {
    const int i = support(s).position(s_next);
    return i < 0 ? 0.0 : slot(s, a)[static_cast<std::size_t>(i)];
  }

  // Delta rule toward a one-hot on the realized successor.
  void update(int s, int a, int realized, double eta) {
    const int hit = support(s).position(realized);
    if (hit < 0) throw std::logic_error("belief_update: realized successor outside the belief support");
    auto& p = slot(s, a);
    for (int i = 0; i < support(s).count; ++i) p[i] += eta * ((i == hit ? 1.0 : 0.0) - p[i]);
  }

  // Direct assignment, used when restoring a snapshot.
  void set_prob(int s, int a, int s_next, double p) {
    const int i = support(s).position(s_next);
    if (i < 0) throw std::invalid_argument("set_prob: successor outside the belief support");
    slot(s, a)[static_cast<std::size_t>(i)] = p;
  }

  template <typename Rng>
  int sample(int s, int a, Rng& rng) const {
    const Support& sup = support(s);
    const auto& p = slot(s, a);
    const double u = uniform01(rng);
    double acc = 0.0;
    for (int i = 0; i < sup.count - 1; ++i) {
      acc += p[i];
      if (u < acc) return sup.states[i];
    }
    for (int i = sup.count - 1; i >= 0; --i)
      if (p[i] > 0.0) return sup.states[i];
    return sup.states[sup.count - 1];
  }

  friend bool operator==(const BeliefModel& x, const BeliefModel& y) { return x.probs_ == y.probs_; }

 private:
  using Slot = std::array<double, kMaxSupport>;
  Slot& slot(int s, int a) { return probs_[static_cast<std::size_t>(s) * kNumActions + static_cast<std::size_t>(a)]; }
  const Slot& slot(int s, int a) const {
    return probs_[static_cast<std::size_t>(s) * kNumActions + static_cast<std::size_t>(a)];
  }

  std::vector<Support> support_;
  std::vector<Slot> probs_;
};

inline void belief_update(BeliefModel& b, int s, int a, int realized, double eta) { b.update(s, a, realized, eta); }

// Last observed reward per state-action pair plus the planning memory of
// pairs experienced for real.
class RewardModel {
 public:
  RewardModel() = default;
  explicit RewardModel(int num_states)
      : last_reward_(static_cast<std::size_t>(num_states) * kNumActions, 0.0),
        seen_(static_cast<std::size_t>(num_states) * kNumActions, false),
        terminal_state_(static_cast<std::size_t>(num_states), false) {}

  void record(int s, int a, double r, int s_next, bool terminal) {
    const std::size_t k = key(s, a);
    if (!seen_[k]) {
      seen_[k] = true;
      observed_.emplace_back(s, a);
    }
    last_reward_[k] = r;
    if (terminal) terminal_state_[static_cast<std::size_t>(s_next)] = true;
  }

  bool observed(int s, int a) const { return seen_[key(s, a)]; }
  double last_reward(int s, int a) const { return last_reward_[key(s, a)]; }
  // Successor states in which a real episode has ended with a reward.
  bool known_terminal(int s) const { return terminal_state_[static_cast<std::size_t>(s)]; }
  const std::vector<std::pair<int, int>>& memory() const noexcept { return observed_; }

  friend bool operator==(const RewardModel&, const RewardModel&) = default;

 private:
  static std::size_t key(int s, int a) { return static_cast<std::size_t>(s) * kNumActions + static_cast<std::size_t>(a); }

  std::vector<double> last_reward_;
  std::vector<bool> seen_;
  std::vector<bool> terminal_state_;
  std::vector<std::pair<int, int>> observed_;  // insertion order
};

inline void record_experience(RewardModel& model, int s, int a, double r, int s_next, bool terminal) {
  model.record(s, a, r, s_next, terminal);
}

// Dyna-Q inner loop: k ~ Poisson(lambda) simulated one-step updates from
// uniformly drawn remembered pairs. Returns k.
template <typename Rng>
int dyna_planning(QTable& q, const BeliefModel& beliefs, const RewardModel& rewards, double lambda, double alpha,
                  double gamma, Rng& rng) {
  if (!(lambda > 0.0)) return 0;
  const int k = std::poisson_distribution<int>{lambda}(rng);
  const auto& memory = rewards.memory();
  if (memory.empty()) return k;
  const int n = static_cast<int>(memory.size());
  for (int i = 0; i < k; ++i) {
    const auto [s, a] = memory[static_cast<std::size_t>(uniform_index(rng, n))];
    const int s_next = beliefs.sample(s, a, rng);
    const double r = rewards.last_reward(s, a);
    td_update(q, s, a, r, s_next, r > 0.0 && rewards.known_terminal(s_next), alpha, gamma);
  }
  return k;
}

// ---------------------------------------------------------------------------
// Hyperparameters

enum class Learning { model_free, model_based };
enum class Social { asocial, decision_biasing, value_shaping };

struct ModelKind {
  Social social = Social::asocial;
  Learning learning = Learning::model_free;

  bool model_based() const noexcept { return learning == Learning::model_based; }
  friend constexpr bool operator==(const ModelKind&, const ModelKind&) = default;
};

struct AgentParams {
  double alpha = 0.1;   // learning rate
  double gamma = 0.9;   // discount
  double beta = 0.1;    // inverse temperature
  double eta = 0.5;     // belief learning rate (MB)
  double lambda = 0.0;  // planning rate (MB)
  double omega = 0.0;   // social mixture weight (DB)
  double kappa = 0.0;   // value bonus (VS)

  friend bool operator==(const AgentParams&, const AgentParams&) = default;
};

inline void validate(const AgentParams& p) {
  auto unit = [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; };
  auto nonneg = [](double x) { return std::isfinite(x) && x >= 0.0; };
  if (!unit(p.alpha)) throw std::invalid_argument("alpha must lie in [0,1]");
  if (!unit(p.gamma)) throw std::invalid_argument("gamma must lie in [0,1]");
  if (!nonneg(p.beta)) throw std::invalid_argument("beta must be >= 0");
  if (!unit(p.eta)) throw std::invalid_argument("eta must lie in [0,1]");
  if (!nonneg(p.lambda)) throw std::invalid_argument("lambda must be >= 0");
  if (!unit(p.omega)) throw std::invalid_argument("omega must lie in [0,1]");
  if (!nonneg(p.kappa)) throw std::invalid_argument("kappa must be >= 0");
}

}  // namespace sociallearn
