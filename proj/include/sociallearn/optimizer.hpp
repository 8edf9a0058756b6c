#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sociallearn/experiments.hpp"
#include "sociallearn/parallel.hpp"
#include "sociallearn/rl.hpp"
#include "sociallearn/rng.hpp"

namespace sociallearn {

// ---------------------------------------------------------------------------
// Search space

enum class Transform { log, logit };

struct ParamSpec {
  std::string name;
  Transform transform = Transform::log;
  double lower = 0.0;  // natural-domain bounds; decoded values are clamped here
  double upper = 1.0;
  double init_lower = 0.0;  // initial population box, natural domain
  double init_upper = 1.0;
  std::optional<double> frozen;
};

inline double to_unbounded(const ParamSpec& p, double v) {
  constexpr double tiny = 1e-12;
  switch (p.transform) {
    case Transform::log: return std::log(std::max(v, tiny));
    case Transform::logit: {
      const double c = std::clamp(v, tiny, 1.0 - tiny);
      return std::log(c / (1.0 - c));
    }
  }
  return v;
}

inline double from_unbounded(const ParamSpec& p, double x) {
  double v = 0.0;
  switch (p.transform) {
    case Transform::log: v = std::exp(x); break;
    case Transform::logit: v = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); break;
  }
  return std::clamp(v, p.lower, p.upper);
}

inline double get_param(const AgentParams& a, const std::string& name) {
  if (name == "alpha") return a.alpha;
  if (name == "gamma") return a.gamma;
  if (name == "beta") return a.beta;
  if (name == "eta") return a.eta;
  if (name == "lambda") return a.lambda;
  if (name == "omega") return a.omega;
  if (name == "kappa") return a.kappa;
  throw std::invalid_argument("unknown parameter '" + name + "'");
}

inline void set_param(AgentParams& a, const std::string& name, double v) {
  if (name == "alpha") a.alpha = v;
  else if (name == "gamma") a.gamma = v;
  else if (name == "beta") a.beta = v;
  else if (name == "eta") a.eta = v;
  else if (name == "lambda") a.lambda = v;
  else if (name == "omega") a.omega = v;
  else if (name == "kappa") a.kappa = v;
  else throw std::invalid_argument("unknown parameter '" + name + "'");
}

// Default bounded domains. gamma stops short of 1.
inline ParamSpec default_spec(const std::string& name) {
  if (name == "alpha") return {name, Transform::logit, 0.0, 1.0, 0.05, 0.95, {}};
  if (name == "gamma") return {name, Transform::logit, 0.0, 1.0 - 1e-6, 0.5, 0.99, {}};
  if (name == "beta") return {name, Transform::log, 0.0, 20.0, 0.01, 2.0, {}};
  if (name == "eta") return {name, Transform::logit, 0.0, 1.0, 0.05, 0.95, {}};
  if (name == "lambda") return {name, Transform::log, 0.0, 100.0, 0.5, 50.0, {}};
  if (name == "omega") return {name, Transform::logit, 0.0, 1.0, 0.05, 0.95, {}};
  if (name == "kappa") return {name, Transform::log, 0.0, 100.0, 0.1, 30.0, {}};
  throw std::invalid_argument("unknown parameter '" + name + "'");
}

// Parameters that influence a model.
inline std::vector<std::string> relevant_params(ModelKind k) {
  std::vector<std::string> out{"alpha", "gamma", "beta"};
  if (k.model_based()) {
    out.push_back("eta");
    out.push_back("lambda");
  }
  if (k.social == Social::decision_biasing) out.push_back("omega");
  if (k.social == Social::value_shaping) out.push_back("kappa");
  return out;
}

class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<ParamSpec> params) : params_(std::move(params)) {}

  static SearchSpace for_model(ModelKind k) {
    std::vector<ParamSpec> ps;
    for (const auto& n : relevant_params(k)) ps.push_back(default_spec(n));
    return SearchSpace(std::move(ps));
  }

  void freeze(const std::string& name, double value) {
    for (ParamSpec& p : params_)
      if (p.name == name) {
        p.frozen = value;
        return;
      }
    throw std::invalid_argument("cannot freeze unknown parameter '" + name + "'");
  }

  const std::vector<ParamSpec>& params() const noexcept { return params_; }

  std::vector<const ParamSpec*> free_params() const {
    std::vector<const ParamSpec*> out;
    for (const ParamSpec& p : params_)
      if (!p.frozen) out.push_back(&p);
    return out;
  }
  int dimension() const { return static_cast<int>(free_params().size()); }

  std::vector<double> init_lower() const {
    std::vector<double> out;
    for (const ParamSpec* p : free_params()) out.push_back(to_unbounded(*p, p->init_lower));
    return out;
  }
  std::vector<double> init_upper() const {
    std::vector<double> out;
    for (const ParamSpec* p : free_params()) out.push_back(to_unbounded(*p, p->init_upper));
    return out;
  }

  // Maps an unbounded vector over the free parameters onto `base`, with
  // frozen values applied.
  AgentParams decode(const std::vector<double>& x, AgentParams base = {}) const {
    std::size_t i = 0;
    for (const ParamSpec& p : params_) {
      if (p.frozen)
        set_param(base, p.name, *p.frozen);
      else
        set_param(base, p.name, from_unbounded(p, x.at(i++)));
    }
    return base;
  }

 private:
  std::vector<ParamSpec> params_;
};

// ---------------------------------------------------------------------------
// Differential evolution (DE/rand/1/bin), maximizing.

struct DEConfig {
  int population = 0;  // 0: 10 x dimension
  double mutation = 0.8;
  double crossover = 0.9;
  int generations = 50;
  std::uint64_t seed = 1;
  int workers = 1;
};

inline void validate(const DEConfig& c, int dimension) {
  const int pop = c.population ? c.population : 10 * dimension;
  if (pop < 4) throw std::invalid_argument("DE population must be at least 4");
  if (!(c.mutation > 0.0 && c.mutation <= 2.0)) throw std::invalid_argument("DE mutation factor must lie in (0,2]");
  if (!(c.crossover >= 0.0 && c.crossover <= 1.0)) throw std::invalid_argument("DE crossover rate must lie in [0,1]");
  if (c.generations < 0) throw std::invalid_argument("DE generations must be >= 0");
}

struct DEGeneration {
  int generation = 0;
  double best = 0.0;
  double mean = 0.0;
  std::vector<double> best_x;
};

struct DEResult {
  std::vector<double> best_x;
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<DEGeneration> history;  // generation 0 is the initial population
  long evaluations = 0;
};

using Objective = std::function<double(const std::vector<double>&)>;

inline DEResult de_optimize(const std::vector<double>& lower, const std::vector<double>& upper, const DEConfig& cfg,
                            const Objective& objective) {
  const int dim = static_cast<int>(lower.size());
  if (dim == 0 || upper.size() != lower.size()) throw std::invalid_argument("de_optimize: bad bounds");
  validate(cfg, dim);
  const int np = cfg.population ? cfg.population : 10 * dim;

  Engine rng{split_seed(cfg.seed, 0xde)};
  std::vector<std::vector<double>> pop(static_cast<std::size_t>(np), std::vector<double>(static_cast<std::size_t>(dim)));
  for (auto& x : pop)
    for (int j = 0; j < dim; ++j)
      x[j] = std::uniform_real_distribution<double>{lower[j], upper[j]}(rng);

  DEResult res;
  std::vector<double> fit(static_cast<std::size_t>(np));
  auto evaluate = [&](const std::vector<std::vector<double>>& xs, std::vector<double>& out) {
    parallel_for(static_cast<int>(xs.size()), cfg.workers, [&](int i) { out[i] = objective(xs[i]); });
    res.evaluations += static_cast<long>(xs.size());
  };
  auto record = [&](int g) {
    const auto best = std::max_element(fit.begin(), fit.end()) - fit.begin();
    if (fit[best] > res.best_value) {
      res.best_value = fit[best];
      res.best_x = pop[best];
    }
    double mean = 0.0;
    for (double f : fit) mean += f / np;
    res.history.push_back({g, res.best_value, mean, res.best_x});
  };

  evaluate(pop, fit);
  record(0);

  std::vector<std::vector<double>> trial(pop);
  std::vector<double> trial_fit(static_cast<std::size_t>(np));
  for (int g = 1; g <= cfg.generations; ++g) {
    for (int i = 0; i < np; ++i) {
      int a, b, c;
      do a = uniform_index(rng, np); while (a == i);
      do b = uniform_index(rng, np); while (b == i || b == a);
      do c = uniform_index(rng, np); while (c == i || c == a || c == b);
      const int forced = uniform_index(rng, dim);
      for (int j = 0; j < dim; ++j) {
        const bool cross = j == forced || uniform01(rng) < cfg.crossover;
        trial[i][j] = cross ? pop[a][j] + cfg.mutation * (pop[b][j] - pop[c][j]) : pop[i][j];
      }
    }
    evaluate(trial, trial_fit);
    for (int i = 0; i < np; ++i)
      if (trial_fit[i] >= fit[i]) {
        pop[i] = trial[i];
        fit[i] = trial_fit[i];
      }
    record(g);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Simulation objective

enum class Window { training, all, pretraining };

// Worlds, experts and demonstrations for a fixed set of objective seeds.
// Reused across candidates so every candidate sees identical environments.
struct ObjectiveBank {
  std::vector<std::shared_ptr<const SimContext>> contexts;
  Protocol protocol;
};

inline ObjectiveBank make_bank(int n_sims, std::uint64_t seed, const AgentParams& expert, const Protocol& protocol,
                               std::span<const QuadrantLayout, 4> layouts, int workers) {
  ObjectiveBank bank;
  bank.protocol = protocol;
  bank.contexts.resize(static_cast<std::size_t>(n_sims));
  parallel_for(n_sims, workers, [&](int i) {
    bank.contexts[static_cast<std::size_t>(i)] =
        prepare_context(Experiment::exp1, i, simulation_seed(seed, i), layouts, expert, protocol);
  });
  return bank;
}

// Mean over simulations of the summed episode rewards in `window`.
inline double learner_objective(const ObjectiveBank& bank, ModelKind model, const AgentParams& params, Window window) {
  validate(params);
  Protocol p = bank.protocol;
  if (window == Window::training) p.test_episodes = 0;
  double total = 0.0;
  for (const auto& ctx : bank.contexts) {
    const SimRecord r = run_learner(*ctx, model, params, p);
    for (const EpisodeRow& e : r.episodes) total += e.log.cum_reward;
  }
  return bank.contexts.empty() ? 0.0 : total / static_cast<double>(bank.contexts.size());
}

inline double expert_objective(const AgentParams& params, int n_sims, std::uint64_t seed, const Protocol& protocol,
                               std::span<const QuadrantLayout, 4> layouts) {
  validate(params);
  double total = 0.0;
  for (int i = 0; i < n_sims; ++i) {
    const std::uint64_t s = simulation_seed(seed, i);
    Engine world_rng = make_engine(s, Stream::world);
    const WorldConfig world = sample_world(layouts, world_rng);
    std::vector<EpisodeLog> logs;
    pretrain_expert(world, params, split_seed(s, static_cast<std::uint64_t>(Stream::expert_pretrain)),
                    protocol.pretrain_episodes, &logs, protocol.max_steps);
    for (const EpisodeLog& l : logs) total += l.cum_reward;
  }
  return n_sims ? total / n_sims : 0.0;
}

// ---------------------------------------------------------------------------
// Staged fitting

struct RegistryEntry {
  std::string agent;  // model name or "expert"
  AgentParams params;
  std::vector<std::string> names;   // relevant parameters, in registry order
  std::vector<bool> frozen;
  double objective = 0.0;
  std::uint64_t seed = 0;
  std::vector<DEGeneration> history;
};

struct Registry {
  std::vector<RegistryEntry> entries;

  const RegistryEntry* find(const std::string& agent) const {
    for (const auto& e : entries)
      if (e.agent == agent) return &e;
    return nullptr;
  }

  ParamSet param_set() const {
    ParamSet ps;
    const RegistryEntry* ex = find("expert");
    if (!ex) throw std::runtime_error("parameter registry has no expert entry");
    ps.expert = ex->params;
    for (std::size_t i = 0; i < kAllModels.size(); ++i) {
      const RegistryEntry* e = find(model_name(kAllModels[i]));
      if (!e) throw std::runtime_error(std::string("parameter registry has no entry for ") + model_name(kAllModels[i]));
      ps.models[i] = e->params;
    }
    return ps;
  }
};

struct FitConfig {
  DEConfig de;
  int n_sims = 50;              // simulations per objective evaluation
  std::uint64_t objective_seed = 7;
  Protocol protocol;
  std::array<QuadrantLayout, 4> layouts = default_layouts();
  std::vector<ModelKind> models{kAllModels.begin(), kAllModels.end()};
  std::function<void(const std::string&)> progress;
};

inline AgentParams zeroed_params() { return AgentParams{0, 0, 0, 0, 0, 0, 0}; }

inline RegistryEntry fit_one(const std::string& agent, const SearchSpace& space, const DEConfig& de,
                             const Objective& objective, std::uint64_t objective_seed) {
  RegistryEntry entry;
  entry.agent = agent;
  entry.seed = objective_seed;
  const DEResult r = de_optimize(space.init_lower(), space.init_upper(), de, objective);
  entry.params = space.decode(r.best_x, zeroed_params());
  entry.objective = r.best_value;
  entry.history = r.history;
  for (const ParamSpec& p : space.params()) {
    entry.names.push_back(p.name);
    entry.frozen.push_back(p.frozen.has_value());
  }
  return entry;
}

// Stage 1: expert on pre-training episodes. Stage 2: asocial learners on all
// episodes. Stage 3: social learners on training episodes with alpha (and eta)
// frozen at the matching asocial learner's values.
inline Registry fit_all_models(const FitConfig& cfg) {
  Registry reg;
  auto say = [&](const std::string& m) {
    if (cfg.progress) cfg.progress(m);
  };
  const int workers = cfg.de.workers;

  say("stage 1: expert");
  {
    const SearchSpace space = SearchSpace::for_model({Social::asocial, Learning::model_based});
    DEConfig de = cfg.de;
    de.seed = split_seed(cfg.de.seed, 100);
    reg.entries.push_back(fit_one(
        "expert", space, de,
        [&](const std::vector<double>& x) {
          return expert_objective(space.decode(x, zeroed_params()), cfg.n_sims, cfg.objective_seed, cfg.protocol,
                                  cfg.layouts);
        },
        cfg.objective_seed));
  }
  const AgentParams expert = reg.entries.back().params;
  const ObjectiveBank bank = make_bank(cfg.n_sims, cfg.objective_seed, expert, cfg.protocol, cfg.layouts, workers);

  auto fit_model = [&](ModelKind k, const SearchSpace& space, Window w, std::uint64_t tag) {
    say(std::string("fitting ") + model_name(k));
    DEConfig de = cfg.de;
    de.seed = split_seed(cfg.de.seed, tag);
    // Evaluations inside one candidate run serially; candidates run in parallel.
    reg.entries.push_back(fit_one(
        model_name(k), space, de,
        [&](const std::vector<double>& x) { return learner_objective(bank, k, space.decode(x, zeroed_params()), w); },
        cfg.objective_seed));
  };
  auto wanted = [&](ModelKind k) { return std::find(cfg.models.begin(), cfg.models.end(), k) != cfg.models.end(); };

  say("stage 2: asocial learners");
  for (Learning l : {Learning::model_free, Learning::model_based}) {
    const ModelKind k{Social::asocial, l};
    if (wanted(k)) fit_model(k, SearchSpace::for_model(k), Window::all, 200 + static_cast<int>(l));
  }

  say("stage 3: social learners");
  for (Social soc : {Social::decision_biasing, Social::value_shaping})
    for (Learning l : {Learning::model_free, Learning::model_based}) {
      const ModelKind k{soc, l};
      if (!wanted(k)) continue;
      const RegistryEntry* base = reg.find(model_name(ModelKind{Social::asocial, l}));
      if (!base) throw std::runtime_error(std::string("fit ") + model_name(k) + " requires the asocial stage for " +
                                          model_name(ModelKind{Social::asocial, l}));
      SearchSpace space = SearchSpace::for_model(k);
      space.freeze("alpha", base->params.alpha);
      if (k.model_based()) space.freeze("eta", base->params.eta);
      fit_model(k, space, Window::training, 300 + 10 * static_cast<int>(soc) + static_cast<int>(l));
    }
  return reg;
}

}  // namespace sociallearn
