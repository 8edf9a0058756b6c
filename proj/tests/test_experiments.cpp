#include <gtest/gtest.h>

#include "support.hpp"

using namespace sociallearn;
using testing_support::test_params;

namespace {

ExperimentConfig small_config(int n_sims, int workers = 1) {
  ExperimentConfig cfg;
  cfg.n_sims = n_sims;
  cfg.base_seed = 123;
  cfg.workers = workers;
  return cfg;
}

constexpr ModelKind kAsMf{Social::asocial, Learning::model_free};
constexpr ModelKind kAsMb{Social::asocial, Learning::model_based};

}  // namespace

TEST(Seeds, SplitIsStableAndSpread) {
  EXPECT_EQ(simulation_seed(1, 0), simulation_seed(1, 0));
  EXPECT_NE(simulation_seed(1, 0), simulation_seed(1, 1));
  EXPECT_NE(simulation_seed(1, 0), simulation_seed(2, 0));
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10000; ++i) seen.insert(simulation_seed(42, i));
  EXPECT_EQ(seen.size(), 10000u);
}

TEST(Simulation, RecordShapeAndPhases) {
  SimulationSpec spec;
  spec.experiment = Experiment::exp1;
  spec.model = {Social::value_shaping, Learning::model_based};
  spec.seed = 5;
  const ParamSet ps = test_params();
  spec.params = ps.of(spec.model);
  spec.expert_params = ps.expert;
  const SimRecord r = run_simulation(spec);
  ASSERT_EQ(r.episodes.size(), 20u);
  for (int e = 0; e < 20; ++e) {
    EXPECT_EQ(r.episodes[e].episode, e + 1);
    EXPECT_EQ(r.episodes[e].phase, e < 10 ? Phase::train : Phase::test);
    EXPECT_LE(r.episodes[e].log.steps, 40);
    EXPECT_GE(r.episodes[e].log.steps, 1);
  }
  EXPECT_TRUE(r.beliefs.has_value());
  EXPECT_EQ(r.shared->expert_demos.size(), 10u);
  EXPECT_EQ(r.shared->train_world, r.shared->test_world);
  EXPECT_EQ(r.visited.size(), 100u);

  // Identical spec, identical record.
  const SimRecord again = run_simulation(spec);
  EXPECT_EQ(again.episodes, r.episodes);
  EXPECT_EQ(again.q, r.q);
}

TEST(Simulation, TerminatedEpisodeRewardDecomposes) {
  const ParamSet ps = test_params();
  const auto ctx = prepare_context(Experiment::exp1, 0, 77, default_layouts(), ps.expert, Protocol{});
  Agent agent(kAsMb, ps.of(kAsMb), ctx->train_world.grid);
  AgentStreams streams = AgentStreams::learner(ctx->seed);
  int checked = 0;
  for (int e = 0; e < 40; ++e) {
    std::vector<ExpertStep> path;
    EpisodeOptions opt;
    opt.record = &path;
    const Cell start = ctx->starts[static_cast<std::size_t>(e % 20)];
    const EpisodeLog log = run_episode(agent, ctx->train_world, start, nullptr, streams, opt);
    if (!log.terminated_by_reward) {
      EXPECT_EQ(log.cum_reward, -log.steps);
      continue;
    }
    const Cell end = step_dynamics(ctx->train_world, path.back().state, path.back().action);
    const int v = ctx->train_world.reward_value_at(end);
    const int noise = log.cum_reward - v + (log.steps - 1);
    EXPECT_GE(noise, -200);
    EXPECT_LE(noise, 200);
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(Context, ExperimentManipulations) {
  const ParamSet ps = test_params();
  const Protocol protocol;
  for (int sim = 0; sim < 20; ++sim) {
    const std::uint64_t seed = simulation_seed(9, sim);
    const auto c1 = prepare_context(Experiment::exp1, sim, seed, default_layouts(), ps.expert, protocol);
    const auto c2 = prepare_context(Experiment::exp2, sim, seed, default_layouts(), ps.expert, protocol);
    const auto c3 = prepare_context(Experiment::exp3, sim, seed, default_layouts(), ps.expert, protocol);
    EXPECT_EQ(c1->train_world, c2->train_world);
    EXPECT_EQ(c1->train_world, c3->train_world);
    EXPECT_EQ(c1->test_world, c1->train_world);
    EXPECT_EQ(c1->traces, c3->traces);
    EXPECT_EQ(c1->expert->q(), c2->expert->q());

    int changed = 0;
    for (int k = 0; k < 4; ++k) changed += c2->test_world.reward_values[k] != c2->train_world.reward_values[k];
    EXPECT_EQ(changed, 2);
    EXPECT_EQ(c2->test_world.grid, c2->train_world.grid);

    EXPECT_EQ(c3->test_world.grid, c3->train_world.grid);
    EXPECT_EQ(c3->test_world.reward_values, c3->train_world.reward_values);
    EXPECT_NE(c3->test_world.start_states, c3->train_world.start_states);
    for (int e = 10; e < 20; ++e) {
      const Cell s = c3->starts[static_cast<std::size_t>(e)];
      EXPECT_NE(std::find(c3->test_world.start_states.begin(), c3->test_world.start_states.end(), s),
                c3->test_world.start_states.end());
    }
  }
}

TEST(Experiment, DeterministicAcrossRunsAndWorkers) {
  const ParamSet ps = test_params();
  const auto a = run_experiment(Experiment::exp2, kAllModels, ps, small_config(6, 1));
  const auto b = run_experiment(Experiment::exp2, kAllModels, ps, small_config(6, 3));
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].episodes, b.records[i].episodes);
    EXPECT_EQ(a.records[i].q, b.records[i].q);
    EXPECT_EQ(a.records[i].beliefs, b.records[i].beliefs);
    EXPECT_EQ(a.records[i].visited, b.records[i].visited);
  }
  const auto da = testing_support::temp_dir("det_a"), db = testing_support::temp_dir("det_b");
  csv::write_run(da, {&a});
  csv::write_run(db, {&b});
  for (const char* f : {"episodes.csv", "values.csv", "beliefs.csv", "world.csv", "visited.csv"})
    EXPECT_EQ(testing_support::slurp(da / f), testing_support::slurp(db / f)) << f;
}

TEST(Experiment, RowCountsAndInvariants) {
  const ParamSet ps = test_params();
  const auto ds = run_experiment(Experiment::exp1, kAllModels, ps, small_config(4));
  EXPECT_EQ(ds.records.size(), 24u);
  std::size_t rows = 0;
  for (const auto& r : ds.records) rows += r.episodes.size();
  EXPECT_EQ(rows, 4u * 6u * 20u);
  EXPECT_TRUE(check_invariants(ds, Protocol{}).empty());
  const auto dir = testing_support::temp_dir("rows");
  csv::write_run(dir, {&ds});
  EXPECT_EQ(csv::read_table(dir / "episodes.csv", "episodes").rows.size(), 4u * 6u * 20u + 4u * 10u);
}

TEST(Experiment, InvariantCheckFlagsCorruptRecords) {
  const ParamSet ps = test_params();
  auto ds = run_experiment(Experiment::exp1, std::vector<ModelKind>{kAsMf}, ps, small_config(2));
  ds.records[0].episodes[3].log.cum_reward = 1000;
  ds.records[1].episodes.pop_back();
  EXPECT_EQ(check_invariants(ds, Protocol{}).size(), 2u);
}

TEST(Experiment, PairedAcrossExperimentsAndModels) {
  const ParamSet ps = test_params();
  const auto e1 = run_experiment(Experiment::exp1, kAllModels, ps, small_config(5));
  const auto e3 = run_experiment(Experiment::exp3, kAllModels, ps, small_config(5));
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(e1.shared[i]->train_world, e3.shared[i]->train_world);
    EXPECT_EQ(e1.shared[i]->seed, e3.shared[i]->seed);
    for (std::size_t m = 0; m < kAllModels.size(); ++m) EXPECT_EQ(e1.record(m, i).shared, e1.shared[i]);
  }
  // The training phase does not depend on the test-phase manipulation.
  for (std::size_t m = 0; m < kAllModels.size(); ++m)
    for (int i = 0; i < 5; ++i)
      for (int e = 0; e < 10; ++e) EXPECT_EQ(e1.record(m, i).episodes[e], e3.record(m, i).episodes[e]);
}

TEST(Experiment, ZeroPlanningReducesToModelFree) {
  ParamSet ps = test_params();
  ps.of(kAsMb) = ps.of(kAsMf);
  ps.of(kAsMb).lambda = 0.0;
  ps.of(kAsMb).eta = 0.9;
  const auto ds = run_experiment(Experiment::exp2, std::vector<ModelKind>{kAsMf, kAsMb}, ps, small_config(10));
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(ds.record(0, i).episodes, ds.record(1, i).episodes);
    EXPECT_EQ(ds.record(0, i).q, ds.record(1, i).q);
  }
}

TEST(Experiment, AddingModelsDoesNotPerturbOthers) {
  const ParamSet ps = test_params();
  const auto one = run_experiment(Experiment::exp1, std::vector<ModelKind>{kAsMb}, ps, small_config(3));
  const auto all = run_experiment(Experiment::exp1, kAllModels, ps, small_config(3));
  for (int i = 0; i < 3; ++i) EXPECT_EQ(one.record(0, i).episodes, all.record(all.model_index(kAsMb), i).episodes);
}

TEST(Expert, PretrainingImprovesOnNaiveLearner) {
  const ParamSet ps = test_params();
  int short_final = 0;
  double expert_late = 0.0, naive_early = 0.0;
  constexpr int n = 40;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t seed = simulation_seed(3, i);
    Engine world_rng = make_engine(seed, Stream::world);
    const WorldConfig w = sample_world(default_layouts(), world_rng);
    std::vector<EpisodeLog> logs, naive;
    pretrain_expert(w, ps.expert, seed, 120, &logs);
    pretrain_expert(w, ps.expert, seed, 20, &naive);
    for (int e = 100; e < 120; ++e) expert_late += logs[e].cum_reward;
    for (const auto& l : naive) naive_early += l.cum_reward;
    double steps = 0.0;
    for (int e = 110; e < 120; ++e) steps += logs[e].steps;
    short_final += steps / 10.0 < 40.0;
  }
  EXPECT_GT(expert_late / (20.0 * n), naive_early / (20.0 * n));
  EXPECT_GE(short_final, static_cast<int>(0.95 * n));
}
