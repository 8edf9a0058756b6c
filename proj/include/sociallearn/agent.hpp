#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sociallearn/gridworld.hpp"
#include "sociallearn/rl.hpp"
#include "sociallearn/rng.hpp"
#include "sociallearn/social.hpp"

namespace sociallearn {

inline const char* model_name(ModelKind k) {
  const bool mb = k.model_based();
  switch (k.social) {
    case Social::asocial: return mb ? "AS-MB" : "AS-MF";
    case Social::decision_biasing: return mb ? "DB-MB" : "DB-MF";
    case Social::value_shaping: return mb ? "VS-MB" : "VS-MF";
  }
  return "?";
}

inline constexpr std::array<ModelKind, 6> kAllModels{
    ModelKind{Social::asocial, Learning::model_free},          ModelKind{Social::asocial, Learning::model_based},
    ModelKind{Social::decision_biasing, Learning::model_free}, ModelKind{Social::decision_biasing, Learning::model_based},
    ModelKind{Social::value_shaping, Learning::model_free},    ModelKind{Social::value_shaping, Learning::model_based},
};

inline ModelKind parse_model(const std::string& name) {
  for (ModelKind k : kAllModels)
    if (name == model_name(k)) return k;
  throw std::invalid_argument("unknown model '" + name + "'");
}

// Independent random streams driving one learner.
struct AgentStreams {
  Engine actions;
  Engine noise;
  Engine planning;

  static AgentStreams learner(std::uint64_t sim_seed) {
    return {make_engine(sim_seed, Stream::learner_actions), make_engine(sim_seed, Stream::learner_noise),
            make_engine(sim_seed, Stream::learner_planning)};
  }
  static AgentStreams from(std::uint64_t seed) {
    return {Engine{split_seed(seed, 1)}, Engine{split_seed(seed, 2)}, Engine{split_seed(seed, 3)}};
  }
};

class Agent {
 public:
  Agent(ModelKind kind, const AgentParams& params, const Grid& grid)
      : kind_(kind), params_(params), q_(grid.size()), visited_(static_cast<std::size_t>(grid.size()), false) {
    validate(params);
    if (kind.model_based()) {
      beliefs_ = BeliefModel::for_grid(grid);
      rewards_ = RewardModel(grid.size());
    }
  }

  ModelKind kind() const noexcept { return kind_; }
  const AgentParams& params() const noexcept { return params_; }
  const QTable& q() const noexcept { return q_; }
  QTable& q() noexcept { return q_; }
  const BeliefModel& beliefs() const noexcept { return beliefs_; }
  const RewardModel& rewards() const noexcept { return rewards_; }
  const std::vector<bool>& visited() const noexcept { return visited_; }

  ActionProbs asocial_policy(int s) const { return softmax_policy(q_.row(s), params_.beta); }

  void mark_visited(int s) { visited_[static_cast<std::size_t>(s)] = true; }

  // Learning from one real transition: TD update, then (MB) belief update,
  // experience memory and planning.
  template <typename Rng>
  void learn(int s, int a, double r, int s_next, bool terminal, Rng& planning) {
    td_update(q_, s, a, r, s_next, terminal, params_.alpha, params_.gamma);
    if (!kind_.model_based()) return;
    belief_update(beliefs_, s, a, s_next, params_.eta);
    record_experience(rewards_, s, a, r, s_next, terminal);
    dyna_planning(q_, beliefs_, rewards_, params_.lambda, params_.alpha, params_.gamma, planning);
  }

 private:
  ModelKind kind_;
  AgentParams params_;
  QTable q_;
  BeliefModel beliefs_;
  RewardModel rewards_;
  std::vector<bool> visited_;
};

struct EpisodeLog {
  int cum_reward = 0;
  int steps = 0;
  bool terminated_by_reward = false;
  friend bool operator==(const EpisodeLog&, const EpisodeLog&) = default;
};

enum class PolicyComponent { asocial, decision_biasing, value_shaping };

// Optional per-step row for trace inspection.
struct StepDebugRow {
  int step = 0;
  Cell learner;
  bool expert_present = false;
  Cell expert;
  PolicyComponent component = PolicyComponent::asocial;
  Action action = Action::up;
};

struct EpisodeOptions {
  int max_steps = kMaxSteps;
  DistanceControls distance{};
  std::vector<ExpertStep>* record = nullptr;     // filled with the agent's own (state, action) pairs
  std::vector<StepDebugRow>* debug = nullptr;
};

// One episode. `expert` is the demonstration revealed step by step during
// training; pass nullptr when no expert is present. Asocial agents never read it.
inline EpisodeLog run_episode(Agent& agent, const WorldConfig& world, Cell start, const ExpertTrace* expert,
                              AgentStreams& streams, const EpisodeOptions& opt = {}) {
  const Grid& grid = world.grid;
  const AgentParams& p = agent.params();
  const Social social = expert ? agent.kind().social : Social::asocial;

  EpisodeLog log;
  Cell cur = start;
  agent.mark_visited(grid.index(cur));
  for (int t = 0; t < opt.max_steps; ++t) {
    const int s = grid.index(cur);
    const auto ut = static_cast<std::size_t>(t);
    PolicyComponent component = PolicyComponent::asocial;

    if (social == Social::value_shaping && ut < expert->steps.size()) {
      const ExpertStep& e = expert->steps[ut];
      vs_bonus(agent.q(), grid.index(e.state), index_of(e.action), p.kappa);
      component = PolicyComponent::value_shaping;
    }

    ActionProbs probs = agent.asocial_policy(s);
    if (social == Social::decision_biasing) {
      const Cell target = expert->location_after(ut);
      ActionProbs soc;
      if (agent.kind().model_based()) {
        const DistanceMap d = belief_distance_map(agent.beliefs(), grid.index(target), opt.distance);
        soc = social_policy_beliefs(agent.beliefs(), s, d.steps);
      } else {
        soc = social_policy_manhattan(grid, cur, target);
      }
      probs = db_policy(probs, soc, p.omega);
      component = PolicyComponent::decision_biasing;
    }

    const int a = sample_action(probs, streams.actions);
    const Action action = kAllActions[static_cast<std::size_t>(a)];
    if (opt.record) opt.record->push_back({cur, action});
    if (opt.debug) {
      const bool present = social != Social::asocial;
      opt.debug->push_back({t, cur, present, present ? expert->location_after(ut) : Cell{}, component, action});
    }

    const Cell next = step_dynamics(world, cur, action);
    const StepOutcome out = observe_reward(world, next, streams.noise);
    agent.learn(s, a, out.reward, grid.index(next), out.terminal, streams.planning);
    agent.mark_visited(grid.index(next));

    log.cum_reward += out.reward;
    ++log.steps;
    cur = next;
    if (out.terminal) {
      log.terminated_by_reward = true;
      break;
    }
  }
  return log;
}

template <typename Rng>
Cell draw_start(const WorldConfig& world, Rng& rng) {
  return world.start_states[static_cast<std::size_t>(uniform_index(rng, 4))];
}

// Trains an asocial model-based expert for `episodes` episodes in `world`.
// All randomness derives from `seed`.
inline Agent pretrain_expert(const WorldConfig& world, const AgentParams& params, std::uint64_t seed,
                             int episodes = 120, std::vector<EpisodeLog>* logs = nullptr,
                             int max_steps = kMaxSteps) {
  Agent expert({Social::asocial, Learning::model_based}, params, world.grid);
  AgentStreams streams = AgentStreams::from(seed);
  Engine starts{split_seed(seed, 4)};
  EpisodeOptions opt;
  opt.max_steps = max_steps;
  for (int e = 0; e < episodes; ++e) {
    const Cell start = draw_start(world, starts);
    const EpisodeLog log = run_episode(expert, world, start, nullptr, streams, opt);
    if (logs) logs->push_back(log);
  }
  return expert;
}

// Rollout of a frozen expert under its softmax policy.
template <typename Rng>
ExpertTrace generate_expert_trace(const Agent& expert, const WorldConfig& world, Cell start, Rng& rng,
                                  int max_steps = kMaxSteps) {
  ExpertTrace trace;
  Cell cur = start;
  for (int t = 0; t < max_steps; ++t) {
    const int a = sample_action(expert.asocial_policy(world.grid.index(cur)), rng);
    const Action action = kAllActions[static_cast<std::size_t>(a)];
    trace.steps.push_back({cur, action});
    cur = step_dynamics(world, cur, action);
    const StepOutcome out = observe_reward(world, cur, rng);
    trace.cum_reward += out.reward;
    if (out.terminal) {
      trace.terminated_early = true;
      break;
    }
  }
  trace.final_state = cur;
  return trace;
}

// Demonstration by an expert that keeps learning while it demonstrates.
inline ExpertTrace generate_expert_trace_learning(Agent& expert, const WorldConfig& world, Cell start,
                                                  AgentStreams& streams, int max_steps = kMaxSteps) {
  ExpertTrace trace;
  EpisodeOptions opt;
  opt.max_steps = max_steps;
  opt.record = &trace.steps;
  const EpisodeLog log = run_episode(expert, world, start, nullptr, streams, opt);
  trace.cum_reward = log.cum_reward;
  trace.terminated_early = log.terminated_by_reward;
  Cell cur = start;
  for (const ExpertStep& st : trace.steps) cur = step_dynamics(world, st.state, st.action);
  trace.final_state = trace.steps.empty() ? start : cur;
  return trace;
}

}  // namespace sociallearn
