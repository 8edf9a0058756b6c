#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "support.hpp"

using namespace sociallearn;
using testing_support::true_beliefs;

TEST(Softmax, Examples) {
  for (double p : softmax_policy({3, -1, 7, 0}, 0.0)) EXPECT_DOUBLE_EQ(p, 0.25);
  for (double beta : {0.1, 1.0, 50.0})
    for (double p : softmax_policy({1, 1, 1, 1}, beta)) EXPECT_DOUBLE_EQ(p, 0.25);
  EXPECT_GT(softmax_policy({2, 0, 0, 0}, 10.0)[0], 0.999);
}

TEST(Softmax, SumsToOneAndShiftInvariant) {
  Engine rng{1};
  std::normal_distribution<double> n{0.0, 50.0};
  for (int i = 0; i < 2000; ++i) {
    const ActionValues q{n(rng), n(rng), n(rng), n(rng)};
    const double beta = std::exp(std::uniform_real_distribution<double>{-5, 3}(rng));
    const double c = n(rng) * 10;
    const auto p = softmax_policy(q, beta);
    const auto ps = softmax_policy({q[0] + c, q[1] + c, q[2] + c, q[3] + c}, beta);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (int a = 0; a < 4; ++a) {
      EXPECT_TRUE(std::isfinite(p[a]));
      EXPECT_NEAR(p[a], ps[a], 1e-9);
    }
  }
}

TEST(SampleAction, FollowsDistribution) {
  Engine rng{4};
  std::array<int, 4> counts{};
  const ActionProbs p{0.1, 0.2, 0.3, 0.4};
  constexpr int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[sample_action(p, rng)];
  for (int a = 0; a < 4; ++a) EXPECT_NEAR(counts[a] / double(n), p[a], 0.005);
  const ActionProbs onehot{0, 0, 1, 0};
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_action(onehot, rng), 2);
}

TEST(TdUpdate, Examples) {
  QTable q(3);
  td_update(q, 0, 1, -1.0, 1, false, 0.1, 0.9);
  EXPECT_DOUBLE_EQ(q(0, 1), 0.89);

  QTable t(3);
  td_update(t, 0, 0, 49.0, 1, true, 0.5, 0.9);
  EXPECT_DOUBLE_EQ(t(0, 0), 25.0);

  QTable z(3);
  td_update(z, 2, 3, 100.0, 1, false, 0.0, 0.9);
  EXPECT_EQ(z, QTable(3));
}

TEST(TdUpdate, TouchesExactlyOneEntry) {
  Engine rng{8};
  QTable q(20);
  for (int i = 0; i < 500; ++i) {
    const QTable before = q;
    const int s = uniform_index(rng, 20), a = uniform_index(rng, 4), s2 = uniform_index(rng, 20);
    td_update(q, s, a, uniform01(rng) * 100 - 50, s2, uniform01(rng) < 0.2, 0.3, 0.95);
    for (int x = 0; x < 20; ++x)
      for (int y = 0; y < 4; ++y)
        if (x != s || y != a) EXPECT_EQ(q(x, y), before(x, y));
  }
}

TEST(Beliefs, SupportAndInitialisation) {
  const Grid g(10, 10);
  const BeliefModel b = BeliefModel::for_grid(g);
  EXPECT_EQ(b.successors(g.index({0, 0})).size(), 3u);
  EXPECT_EQ(b.successors(g.index({0, 5})).size(), 4u);
  EXPECT_EQ(b.successors(g.index({5, 5})).size(), 5u);
  for (int a = 0; a < 4; ++a)
    for (double p : b.probs(g.index({5, 5}), a)) EXPECT_DOUBLE_EQ(p, 0.2);
}

TEST(Beliefs, DeltaRuleExamples) {
  const Grid g(10, 10);
  const int s = g.index({5, 5});
  BeliefModel b = BeliefModel::for_grid(g);
  belief_update(b, s, 0, s, 0.5);
  EXPECT_DOUBLE_EQ(b.prob(s, 0, s), 0.6);
  for (int succ : b.successors(s))
    if (succ != s) EXPECT_DOUBLE_EQ(b.prob(s, 0, succ), 0.1);
  // Other actions are untouched.
  EXPECT_DOUBLE_EQ(b.prob(s, 1, s), 0.2);

  const int up = g.index({4, 5});
  belief_update(b, s, 2, up, 1.0);
  for (int succ : b.successors(s)) EXPECT_DOUBLE_EQ(b.prob(s, 2, succ), succ == up ? 1.0 : 0.0);

  EXPECT_THROW(belief_update(b, s, 0, g.index({0, 0}), 0.5), std::logic_error);
}

TEST(Beliefs, StayNormalisedUnderRandomUpdates) {
  const Grid g(10, 10);
  BeliefModel b = BeliefModel::for_grid(g);
  Engine rng{11};
  for (int i = 0; i < 50000; ++i) {
    const int s = uniform_index(rng, 100), a = uniform_index(rng, 4);
    const auto succ = b.successors(s);
    belief_update(b, s, a, succ[uniform_index(rng, static_cast<int>(succ.size()))], uniform01(rng));
  }
  for (int s = 0; s < 100; ++s)
    for (int a = 0; a < 4; ++a) {
      double sum = 0.0;
      for (double p : b.probs(s, a)) {
        EXPECT_GE(p, 0.0);
        sum += p;
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
}

TEST(RewardModel, RecordsRealExperience) {
  RewardModel m(10);
  EXPECT_TRUE(m.memory().empty());
  record_experience(m, 3, 2, -1.0, 4, false);
  EXPECT_TRUE(m.observed(3, 2));
  EXPECT_FALSE(m.observed(3, 1));
  EXPECT_EQ(m.memory().size(), 1u);
  record_experience(m, 3, 2, 60.0, 4, true);
  EXPECT_DOUBLE_EQ(m.last_reward(3, 2), 60.0);
  EXPECT_EQ(m.memory().size(), 1u);
  EXPECT_TRUE(m.known_terminal(4));
  EXPECT_FALSE(m.known_terminal(3));
}

TEST(Dyna, ZeroRateAndEmptyMemoryAreNoOps) {
  const Grid g(3, 3);
  const BeliefModel b = BeliefModel::for_grid(g);
  QTable q(9);
  RewardModel empty(9);
  Engine rng{1};
  dyna_planning(q, b, empty, 50.0, 0.5, 0.9, rng);
  EXPECT_EQ(q, QTable(9));

  RewardModel m(9);
  record_experience(m, 0, 3, -1.0, 1, false);
  Engine a{2}, untouched{2};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(dyna_planning(q, b, m, 0.0, 0.5, 0.9, a), 0);
  EXPECT_EQ(q, QTable(9));
  EXPECT_EQ(a(), untouched());  // no draws at all
}

TEST(Dyna, PlanningNeverAddsToMemory) {
  const Grid g(3, 3);
  const BeliefModel b = BeliefModel::for_grid(g);
  QTable q(9);
  RewardModel m(9);
  record_experience(m, 4, 0, -1.0, 1, false);
  record_experience(m, 4, 1, -1.0, 7, false);
  const RewardModel before = m;
  Engine rng{3};
  for (int i = 0; i < 100; ++i) dyna_planning(q, b, m, 10.0, 0.5, 0.9, rng);
  EXPECT_EQ(m, before);
}

namespace {

// Finite-horizon dynamic programming on a grid with deterministic moves and
// terminal reward cells; non-terminal moves cost one point.
QTable finite_horizon(const Grid& g, const std::vector<double>& terminal_reward, double gamma, int horizon) {
  QTable q(g.size(), 0.0);
  for (int h = 0; h < horizon; ++h) {
    QTable next = q;
    for (int s = 0; s < g.size(); ++s)
      for (Action a : kAllActions) {
        const int n = g.index(g.step(g.cell(s), a));
        const double r = terminal_reward[n];
        next(s, index_of(a)) = r > 0 ? r : -1.0 + gamma * q.max(n);
      }
    q = next;
  }
  return q;
}

// Feeds every (state, action) of non-terminal states into the reward model as
// real experience under the true dynamics.
RewardModel full_memory(const Grid& g, const std::vector<double>& terminal_reward) {
  RewardModel m(g.size());
  for (int s = 0; s < g.size(); ++s) {
    if (terminal_reward[s] > 0) continue;
    for (Action a : kAllActions) {
      const int n = g.index(g.step(g.cell(s), a));
      const bool term = terminal_reward[n] > 0;
      record_experience(m, s, index_of(a), term ? terminal_reward[n] : -1.0, n, term);
    }
  }
  return m;
}

}  // namespace

TEST(Dyna, ConvergesToDynamicProgrammingOnChain) {
  const Grid chain(1, 3);
  const std::vector<double> reward{0, 0, 10};
  const BeliefModel b = true_beliefs(chain);
  const RewardModel m = full_memory(chain, reward);
  QTable q(3);
  Engine rng{5};
  for (int i = 0; i < 10000; ++i) dyna_planning(q, b, m, 1.0, 0.5, 0.9, rng);
  const QTable oracle = finite_horizon(chain, reward, 0.9, 400);
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 4; ++a) EXPECT_NEAR(q(s, a), oracle(s, a), 1e-3) << s << "," << a;
}

TEST(Dyna, PerfectModelPlanningMatchesValueIterationOnSmallGrids) {
  Engine rng{77};
  for (int trial = 0; trial < 20; ++trial) {
    Grid g(3, 4);
    for (int s = 0; s < g.size(); ++s)
      for (Action a : {Action::down, Action::right}) {
        const Cell c = g.cell(s);
        if (g.in_bounds(offset(c, a)) && uniform01(rng) < 0.25) g.block(c, offset(c, a));
      }
    std::vector<double> reward(12, 0.0);
    reward[static_cast<std::size_t>(uniform_index(rng, 12))] = 25.0 + 25.0 * uniform_index(rng, 3);
    const BeliefModel b = true_beliefs(g);
    const RewardModel m = full_memory(g, reward);
    QTable q(12);
    for (int i = 0; i < 400; ++i) dyna_planning(q, b, m, 200.0, 0.5, 0.9, rng);
    const QTable oracle = finite_horizon(g, reward, 0.9, 400);
    for (int s = 0; s < 12; ++s) {
      if (reward[s] > 0) continue;
      for (int a = 0; a < 4; ++a) EXPECT_NEAR(q(s, a), oracle(s, a), 1e-3) << "trial " << trial;
    }
  }
}

TEST(Agent, ValuesStayBoundedOverLongRuns) {
  const WorldConfig w = testing_support::world_for_seed(12);
  const AgentParams p{0.5, 0.95, 0.5, 0.5, 10.0, 0.0, 0.0};
  Agent agent({Social::asocial, Learning::model_based}, p, w.grid);
  AgentStreams streams = AgentStreams::from(1);
  Engine starts{2};
  const double bound = 276.0 / (1.0 - p.gamma) + 1.0;
  for (int e = 0; e < 300; ++e) {
    run_episode(agent, w, draw_start(w, starts), nullptr, streams);
    for (int s = 0; s < kNumStates; ++s)
      for (int a = 0; a < 4; ++a) ASSERT_LE(std::abs(agent.q()(s, a)), bound);
  }
}

TEST(Params, Validation) {
  EXPECT_NO_THROW(validate(AgentParams{}));
  EXPECT_THROW(validate(AgentParams{1.5, 0.9, 1, 0.5, 0, 0, 0}), std::invalid_argument);
  EXPECT_THROW(validate(AgentParams{0.5, 0.9, -1, 0.5, 0, 0, 0}), std::invalid_argument);
  EXPECT_THROW(validate(AgentParams{0.5, 0.9, 1, 0.5, -2, 0, 0}), std::invalid_argument);
  EXPECT_THROW(validate(AgentParams{0.5, 0.9, 1, 0.5, 0, 2, 0}), std::invalid_argument);
  EXPECT_THROW(validate(AgentParams{0.5, NAN, 1, 0.5, 0, 0, 0}), std::invalid_argument);
}
