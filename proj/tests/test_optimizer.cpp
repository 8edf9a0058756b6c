#include <gtest/gtest.h>

#include <cmath>
#include <mutex>

#include "support.hpp"

using namespace sociallearn;
using testing_support::test_params;

namespace {

constexpr ModelKind kAsMf{Social::asocial, Learning::model_free};
constexpr ModelKind kAsMb{Social::asocial, Learning::model_based};
constexpr ModelKind kDbMb{Social::decision_biasing, Learning::model_based};

double neg_sphere(const std::vector<double>& x) {
  return -((x[0] - 0.7) * (x[0] - 0.7) + (x[1] + 1.3) * (x[1] + 1.3));
}

}  // namespace

TEST(DE, FindsSphereOptimum) {
  DEConfig cfg;
  cfg.population = 40;
  cfg.generations = 100;
  cfg.seed = 5;
  const DEResult r = de_optimize({-5, -5}, {5, 5}, cfg, neg_sphere);
  EXPECT_NEAR(r.best_x[0], 0.7, 1e-3);
  EXPECT_NEAR(r.best_x[1], -1.3, 1e-3);
  ASSERT_EQ(r.history.size(), 101u);
  for (std::size_t g = 1; g < r.history.size(); ++g) EXPECT_GE(r.history[g].best, r.history[g - 1].best);
  EXPECT_EQ(r.evaluations, 40L * 101L);
}

TEST(DE, DefaultPopulationAndEvaluationCount) {
  DEConfig cfg;
  cfg.generations = 7;
  const DEResult r = de_optimize({-1, -1, -1}, {1, 1, 1}, cfg, [](const std::vector<double>& x) { return -x[0]; });
  EXPECT_EQ(r.evaluations, 30L * 8L);
}

TEST(DE, SameSeedSameHistory) {
  DEConfig cfg;
  cfg.population = 12;
  cfg.generations = 15;
  cfg.seed = 9;
  const DEResult a = de_optimize({-2, -2}, {2, 2}, cfg, neg_sphere);
  cfg.workers = 3;
  const DEResult b = de_optimize({-2, -2}, {2, 2}, cfg, neg_sphere);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t g = 0; g < a.history.size(); ++g) {
    EXPECT_EQ(a.history[g].best, b.history[g].best);
    EXPECT_EQ(a.history[g].mean, b.history[g].mean);
    EXPECT_EQ(a.history[g].best_x, b.history[g].best_x);
  }
  cfg.seed = 10;
  EXPECT_NE(de_optimize({-2, -2}, {2, 2}, cfg, neg_sphere).history.back().mean, a.history.back().mean);
}

TEST(DE, RejectsBadConfigs) {
  DEConfig cfg;
  cfg.population = 3;
  EXPECT_THROW(de_optimize({0}, {1}, cfg, neg_sphere), std::invalid_argument);
  cfg.population = 10;
  cfg.crossover = 1.5;
  EXPECT_THROW(de_optimize({0}, {1}, cfg, neg_sphere), std::invalid_argument);
}

TEST(SearchSpace, FrozenParameterNeverMoves) {
  SearchSpace space = SearchSpace::for_model(kDbMb);
  space.freeze("alpha", 0.37);
  space.freeze("eta", 0.61);
  EXPECT_EQ(space.dimension(), 4);
  std::mutex m;
  std::vector<AgentParams> seen;
  DEConfig cfg;
  cfg.generations = 5;
  cfg.workers = 2;
  de_optimize(space.init_lower(), space.init_upper(), cfg, [&](const std::vector<double>& x) {
    const AgentParams p = space.decode(x, zeroed_params());
    std::lock_guard lock(m);
    seen.push_back(p);
    return p.omega;
  });
  ASSERT_EQ(seen.size(), 40u * 6u);
  for (const AgentParams& p : seen) {
    EXPECT_EQ(p.alpha, 0.37);
    EXPECT_EQ(p.eta, 0.61);
    EXPECT_NO_THROW(validate(p));
  }
  EXPECT_THROW(space.freeze("kappa", 1.0), std::invalid_argument);
}

TEST(SearchSpace, TransformsRoundTrip) {
  Engine rng{17};
  for (const char* name : {"alpha", "gamma", "beta", "eta", "lambda", "omega", "kappa"}) {
    const ParamSpec p = default_spec(name);
    for (int i = 0; i < 10000; ++i) {
      // Interior points, away from the clamping floor of the transforms.
      const double v = p.lower + (p.upper - p.lower) * (1e-6 + (1 - 2e-6) * uniform01(rng));
      const double back = from_unbounded(p, to_unbounded(p, v));
      EXPECT_LT(std::abs(back - v), 1e-12 * std::max(1.0, std::abs(v))) << name << " " << v;
    }
    // Any real maps into the domain.
    for (double x : {-1e3, -30.0, 0.0, 30.0, 1e3}) {
      const double v = from_unbounded(p, x);
      EXPECT_GE(v, p.lower);
      EXPECT_LE(v, p.upper);
    }
  }
  EXPECT_LT(from_unbounded(default_spec("gamma"), 1e3), 1.0);
}

TEST(Objective, DeterministicAndReducible) {
  const ParamSet ps = test_params();
  const ObjectiveBank bank = make_bank(4, 3, ps.expert, Protocol{}, default_layouts(), 1);
  const double a = learner_objective(bank, kAsMf, ps.of(kAsMf), Window::all);
  EXPECT_EQ(a, learner_objective(bank, kAsMf, ps.of(kAsMf), Window::all));
  const ObjectiveBank again = make_bank(4, 3, ps.expert, Protocol{}, default_layouts(), 2);
  EXPECT_EQ(a, learner_objective(again, kAsMf, ps.of(kAsMf), Window::all));

  AgentParams mb = ps.of(kAsMf);
  mb.lambda = 0.0;
  mb.eta = 0.4;
  EXPECT_EQ(learner_objective(bank, kAsMb, mb, Window::all), a);
  EXPECT_NE(learner_objective(bank, kAsMf, ps.of(kAsMf), Window::training), a);

  EXPECT_EQ(expert_objective(ps.expert, 3, 1, Protocol{}, default_layouts()),
            expert_objective(ps.expert, 3, 1, Protocol{}, default_layouts()));
}

TEST(Fit, StagedFitFreezesSharedParameters) {
  FitConfig cfg;
  cfg.de.population = 4;
  cfg.de.generations = 1;
  cfg.n_sims = 2;
  const Registry reg = fit_all_models(cfg);
  ASSERT_EQ(reg.entries.size(), 7u);
  const auto& as_mb = reg.find("AS-MB")->params;
  for (const char* m : {"DB-MB", "VS-MB"}) {
    const RegistryEntry* e = reg.find(m);
    ASSERT_NE(e, nullptr);
    EXPECT_EQ(e->params.alpha, as_mb.alpha);
    EXPECT_EQ(e->params.eta, as_mb.eta);
  }
  for (const char* m : {"DB-MF", "VS-MF"}) EXPECT_EQ(reg.find(m)->params.alpha, reg.find("AS-MF")->params.alpha);
  for (const auto& e : reg.entries) {
    EXPECT_NO_THROW(validate(e.params));
    for (const auto& name : e.names) {
      const ParamSpec spec = default_spec(name);
      EXPECT_GE(get_param(e.params, name), spec.lower);
      EXPECT_LE(get_param(e.params, name), spec.upper);
    }
  }
  EXPECT_NO_THROW(reg.param_set());

  const Registry again = fit_all_models(cfg);
  for (std::size_t i = 0; i < reg.entries.size(); ++i) {
    EXPECT_EQ(reg.entries[i].params.alpha, again.entries[i].params.alpha);
    EXPECT_EQ(reg.entries[i].objective, again.entries[i].objective);
  }

  const auto dir = testing_support::temp_dir("registry");
  csv::write_registry(dir / "params.csv", reg);
  const Registry back = csv::read_registry(dir / "params.csv");
  ASSERT_EQ(back.entries.size(), reg.entries.size());
  for (std::size_t i = 0; i < reg.entries.size(); ++i) {
    EXPECT_EQ(back.entries[i].agent, reg.entries[i].agent);
    EXPECT_EQ(back.entries[i].names, reg.entries[i].names);
    EXPECT_EQ(back.entries[i].frozen, reg.entries[i].frozen);
    EXPECT_EQ(back.entries[i].objective, reg.entries[i].objective);
    for (const auto& n : reg.entries[i].names)
      EXPECT_EQ(get_param(back.entries[i].params, n), get_param(reg.entries[i].params, n));
  }
}

TEST(Fit, SocialStageRequiresAsocialStage) {
  FitConfig cfg;
  cfg.de.population = 4;
  cfg.de.generations = 0;
  cfg.n_sims = 1;
  cfg.models = {kDbMb};
  EXPECT_THROW(fit_all_models(cfg), std::runtime_error);
}
