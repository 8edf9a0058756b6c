#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sociallearn/agent.hpp"
#include "sociallearn/gridworld.hpp"
#include "sociallearn/layout_io.hpp"
#include "sociallearn/parallel.hpp"
#include "sociallearn/rl.hpp"
#include "sociallearn/rng.hpp"

namespace sociallearn {

enum class Experiment { exp1 = 1, exp2 = 2, exp3 = 3 };

inline const char* experiment_name(Experiment e) {
  switch (e) {
    case Experiment::exp1: return "exp1";
    case Experiment::exp2: return "exp2";
    case Experiment::exp3: return "exp3";
  }
  return "?";
}

inline Experiment parse_experiment(const std::string& s) {
  if (s == "exp1" || s == "1") return Experiment::exp1;
  if (s == "exp2" || s == "2") return Experiment::exp2;
  if (s == "exp3" || s == "3") return Experiment::exp3;
  throw std::invalid_argument("unknown experiment '" + s + "'");
}

enum class Phase { train, test };
inline const char* phase_name(Phase p) { return p == Phase::train ? "train" : "test"; }

struct Protocol {
  int train_episodes = 10;
  int test_episodes = 10;
  int pretrain_episodes = 120;
  int max_steps = kMaxSteps;
  bool expert_learns = false;  // expert keeps learning while demonstrating
  DistanceControls distance{};

  int total_episodes() const noexcept { return train_episodes + test_episodes; }
};

// Per-simulation seed: simulation i of every experiment and model shares it.
constexpr std::uint64_t simulation_seed(std::uint64_t base_seed, int sim) noexcept {
  return split_seed(base_seed, static_cast<std::uint64_t>(sim));
}

// Everything one simulation index shares across models: the world (before and
// after the test-phase manipulation), the expert, its demonstrations and the
// start state of every episode.
struct SimContext {
  Experiment experiment = Experiment::exp1;
  int sim = 0;
  std::uint64_t seed = 0;
  WorldConfig train_world;
  WorldConfig test_world;
  std::vector<Cell> starts;           // one per episode
  std::vector<ExpertTrace> traces;    // one per training episode
  std::optional<Agent> expert;        // tables after pre-training (and demonstrations, if it learns)
  std::vector<EpisodeLog> pretrain_logs;
};

inline std::shared_ptr<const SimContext> prepare_context(Experiment experiment, int sim, std::uint64_t seed,
                                                         std::span<const QuadrantLayout, 4> layouts,
                                                         const AgentParams& expert_params, const Protocol& protocol) {
  auto ctx = std::make_shared<SimContext>();
  ctx->experiment = experiment;
  ctx->sim = sim;
  ctx->seed = seed;

  Engine world_rng = make_engine(seed, Stream::world);
  ctx->train_world = sample_world(layouts, world_rng);

  Engine manip_rng = make_engine(seed, Stream::manipulation);
  switch (experiment) {
    case Experiment::exp1: ctx->test_world = ctx->train_world; break;
    case Experiment::exp2: ctx->test_world = apply_reward_swap(ctx->train_world, manip_rng); break;
    case Experiment::exp3: ctx->test_world = shift_start_states(ctx->train_world); break;
  }

  // Start slots are drawn identically in every experiment; the slot maps to
  // the phase's start states.
  Engine start_rng = make_engine(seed, Stream::starts);
  for (int e = 0; e < protocol.total_episodes(); ++e) {
    const WorldConfig& w = e < protocol.train_episodes ? ctx->train_world : ctx->test_world;
    ctx->starts.push_back(draw_start(w, start_rng));
  }

  ctx->expert = pretrain_expert(ctx->train_world, expert_params, split_seed(seed, static_cast<std::uint64_t>(Stream::expert_pretrain)),
                                protocol.pretrain_episodes, &ctx->pretrain_logs, protocol.max_steps);

  const std::uint64_t demo_seed = split_seed(seed, static_cast<std::uint64_t>(Stream::expert_demo));
  if (protocol.expert_learns) {
    AgentStreams demo = AgentStreams::from(demo_seed);
    for (int e = 0; e < protocol.train_episodes; ++e)
      ctx->traces.push_back(generate_expert_trace_learning(*ctx->expert, ctx->train_world,
                                                           ctx->starts[static_cast<std::size_t>(e)], demo,
                                                           protocol.max_steps));
  } else {
    Engine demo{demo_seed};
    for (int e = 0; e < protocol.train_episodes; ++e)
      ctx->traces.push_back(generate_expert_trace(*ctx->expert, ctx->train_world,
                                                  ctx->starts[static_cast<std::size_t>(e)], demo, protocol.max_steps));
  }
  return ctx;
}

struct EpisodeRow {
  int episode = 0;  // 1-based
  Phase phase = Phase::train;
  EpisodeLog log;
  friend bool operator==(const EpisodeRow&, const EpisodeRow&) = default;
};

// Per-simulation outputs shared by every model: worlds, the expert's final
// tables and its demonstration episodes.
struct SimShared {
  int sim = 0;
  std::uint64_t seed = 0;
  WorldConfig train_world;
  WorldConfig test_world;
  QTable expert_q;
  BeliefModel expert_beliefs;
  std::vector<EpisodeLog> expert_demos;  // one per training episode
};

inline std::shared_ptr<const SimShared> share(const SimContext& ctx) {
  auto out = std::make_shared<SimShared>();
  out->sim = ctx.sim;
  out->seed = ctx.seed;
  out->train_world = ctx.train_world;
  out->test_world = ctx.test_world;
  out->expert_q = ctx.expert->q();
  out->expert_beliefs = ctx.expert->beliefs();
  for (const ExpertTrace& t : ctx.traces)
    out->expert_demos.push_back({t.cum_reward, static_cast<int>(t.steps.size()), t.terminated_early});
  return out;
}

struct SimRecord {
  Experiment experiment = Experiment::exp1;
  ModelKind model;
  int sim = 0;
  std::vector<EpisodeRow> episodes;
  QTable q;
  std::optional<BeliefModel> beliefs;  // model-based learners only
  std::vector<bool> visited;
  std::shared_ptr<const SimShared> shared;
};

// Learner episodes of one simulation against a prepared context.
inline SimRecord run_learner(const SimContext& ctx, ModelKind model, const AgentParams& params,
                             const Protocol& protocol) {
  SimRecord rec;
  rec.experiment = ctx.experiment;
  rec.model = model;
  rec.sim = ctx.sim;

  Agent agent(model, params, ctx.train_world.grid);
  AgentStreams streams = AgentStreams::learner(ctx.seed);
  EpisodeOptions opt;
  opt.max_steps = protocol.max_steps;
  opt.distance = protocol.distance;
  for (int e = 0; e < protocol.total_episodes(); ++e) {
    const bool training = e < protocol.train_episodes;
    const WorldConfig& world = training ? ctx.train_world : ctx.test_world;
    const ExpertTrace* trace = training ? &ctx.traces[static_cast<std::size_t>(e)] : nullptr;
    const EpisodeLog log = run_episode(agent, world, ctx.starts[static_cast<std::size_t>(e)], trace, streams, opt);
    rec.episodes.push_back({e + 1, training ? Phase::train : Phase::test, log});
  }
  rec.q = agent.q();
  if (model.model_based()) rec.beliefs = agent.beliefs();
  rec.visited = agent.visited();
  return rec;
}

struct SimulationSpec {
  Experiment experiment = Experiment::exp1;
  ModelKind model;
  std::uint64_t seed = 0;
  int sim = 0;
  AgentParams params;
  AgentParams expert_params;
  Protocol protocol;
  std::array<QuadrantLayout, 4> layouts = default_layouts();
};

inline SimRecord run_simulation(const SimulationSpec& spec) {
  auto ctx = prepare_context(spec.experiment, spec.sim, spec.seed, spec.layouts, spec.expert_params, spec.protocol);
  SimRecord rec = run_learner(*ctx, spec.model, spec.params, spec.protocol);
  rec.shared = share(*ctx);
  return rec;
}

// Parameters for each learner model plus the expert.
struct ParamSet {
  std::array<AgentParams, 6> models{};
  AgentParams expert;

  const AgentParams& of(ModelKind k) const {
    for (std::size_t i = 0; i < kAllModels.size(); ++i)
      if (kAllModels[i] == k) return models[i];
    throw std::invalid_argument("unknown model");
  }
  AgentParams& of(ModelKind k) { return const_cast<AgentParams&>(std::as_const(*this).of(k)); }
};

struct Dataset {
  Experiment experiment = Experiment::exp1;
  std::vector<ModelKind> models;
  int n_sims = 0;
  std::uint64_t base_seed = 0;
  std::vector<std::shared_ptr<const SimShared>> shared;  // by sim
  std::vector<SimRecord> records;                           // model-major, then sim

  const SimRecord& record(std::size_t model_index, int sim) const {
    return records[model_index * static_cast<std::size_t>(n_sims) + static_cast<std::size_t>(sim)];
  }
  std::size_t model_index(ModelKind k) const {
    for (std::size_t i = 0; i < models.size(); ++i)
      if (models[i] == k) return i;
    throw std::invalid_argument(std::string("model not in dataset: ") + model_name(k));
  }
};

struct ExperimentConfig {
  int n_sims = 200;
  std::uint64_t base_seed = 0;
  int workers = 1;
  Protocol protocol;
  std::array<QuadrantLayout, 4> layouts = default_layouts();
};

inline Dataset run_experiment(Experiment experiment, std::span<const ModelKind> models, const ParamSet& params,
                              const ExperimentConfig& cfg) {
  Dataset ds;
  ds.experiment = experiment;
  ds.models.assign(models.begin(), models.end());
  ds.n_sims = cfg.n_sims;
  ds.base_seed = cfg.base_seed;
  ds.shared.resize(static_cast<std::size_t>(cfg.n_sims));
  ds.records.resize(models.size() * static_cast<std::size_t>(cfg.n_sims));
  parallel_for(cfg.n_sims, cfg.workers, [&](int i) {
    auto ctx = prepare_context(experiment, i, simulation_seed(cfg.base_seed, i), cfg.layouts, params.expert, cfg.protocol);
    auto shared = share(*ctx);
    for (std::size_t m = 0; m < models.size(); ++m) {
      SimRecord rec = run_learner(*ctx, models[m], params.of(models[m]), cfg.protocol);
      rec.shared = shared;
      ds.records[m * static_cast<std::size_t>(cfg.n_sims) + static_cast<std::size_t>(i)] = std::move(rec);
    }
    ds.shared[static_cast<std::size_t>(i)] = std::move(shared);
  });
  return ds;
}

// Protocol invariants of a finished dataset; returns one message per violation.
inline std::vector<std::string> check_invariants(const Dataset& ds, const Protocol& protocol) {
  std::vector<std::string> bad;
  auto where = [&](const SimRecord& r) {
    return std::string(experiment_name(r.experiment)) + " " + model_name(r.model) + " sim " + std::to_string(r.sim) + ": ";
  };
  // Noise spans [-200, 200]; positive base values span [25, 75].
  const int max_reward = kRewardValues.back() + 200;
  const int min_reward = kRewardValues[1] - 200;
  for (const SimRecord& r : ds.records) {
    if (static_cast<int>(r.episodes.size()) != protocol.total_episodes())
      bad.push_back(where(r) + "wrong episode count");
    for (const EpisodeRow& e : r.episodes) {
      const EpisodeLog& l = e.log;
      if (l.steps < 1 || l.steps > protocol.max_steps) bad.push_back(where(r) + "step count out of range");
      const bool consistent = l.terminated_by_reward ? l.cum_reward <= max_reward - (l.steps - 1) &&
                                                           l.cum_reward >= min_reward - (l.steps - 1)
                                                     : l.cum_reward == -l.steps;
      if (!consistent) bad.push_back(where(r) + "cumulative reward inconsistent with episode length");
    }
    if (r.beliefs) {
      for (int s = 0; s < r.beliefs->num_states(); ++s)
        for (int a = 0; a < kNumActions; ++a) {
          double sum = 0.0;
          for (double p : r.beliefs->probs(s, a)) {
            if (p < 0.0) bad.push_back(where(r) + "negative belief");
            sum += p;
          }
          if (std::abs(sum - 1.0) > 1e-9) bad.push_back(where(r) + "belief distribution does not sum to 1");
        }
    }
  }
  return bad;
}

}  // namespace sociallearn
