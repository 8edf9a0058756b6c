#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sociallearn/dp.hpp"
#include "sociallearn/experiments.hpp"
#include "sociallearn/gridworld.hpp"
#include "sociallearn/rl.hpp"
#include "sociallearn/stats.hpp"

namespace sociallearn {

// Distance (in steps, respecting walls) from every state to the nearest of
// the four designated reward cells.
using DistanceGroups = std::vector<int>;

inline DistanceGroups distance_groups(const WorldConfig& world) { return reward_distances(world); }

inline constexpr int kMaxDistanceBucket = 8;
inline constexpr int kTailBucket = kMaxDistanceBucket + 1;

// Buckets 0..8 are exact distances; 9 pools everything farther.
inline int bucket_of(int distance) { return std::min(distance, kTailBucket); }

inline std::string bucket_label(int bucket) {
  return bucket == kTailBucket ? std::to_string(kTailBucket) + "+" : std::to_string(bucket);
}

using GroupedCorrelation = std::map<int, std::optional<double>>;

// Spearman between learner and expert action values over all state-action
// pairs in each distance bucket.
inline GroupedCorrelation value_transfer(const QTable& learner, const QTable& expert, const DistanceGroups& groups) {
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> cols;
  for (int s = 0; s < learner.num_states(); ++s) {
    if (groups[static_cast<std::size_t>(s)] == kUnreachable) continue;
    auto& [x, y] = cols[bucket_of(groups[static_cast<std::size_t>(s)])];
    for (int a = 0; a < kNumActions; ++a) {
      x.push_back(learner(s, a));
      y.push_back(expert(s, a));
    }
  }
  GroupedCorrelation out;
  for (const auto& [b, xy] : cols) out[b] = stats::spearman(xy.first, xy.second);
  return out;
}

inline void flatten_beliefs(const BeliefModel& b, int s, std::vector<double>& out) {
  for (int a = 0; a < kNumActions; ++a)
    for (double p : b.probs(s, a)) out.push_back(p);
}

// Pearson between flattened transition beliefs per distance bucket.
inline GroupedCorrelation belief_transfer_raw(const BeliefModel& learner, const BeliefModel& expert,
                                              const DistanceGroups& groups) {
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> cols;
  for (int s = 0; s < learner.num_states(); ++s) {
    if (groups[static_cast<std::size_t>(s)] == kUnreachable) continue;
    auto& [x, y] = cols[bucket_of(groups[static_cast<std::size_t>(s)])];
    flatten_beliefs(learner, s, x);
    flatten_beliefs(expert, s, y);
  }
  GroupedCorrelation out;
  for (const auto& [b, xy] : cols) out[b] = stats::pearson(xy.first, xy.second);
  return out;
}

// Pearson between flattened transition beliefs pooled over all states.
inline std::optional<double> belief_transfer_pooled(const BeliefModel& learner, const BeliefModel& expert) {
  std::vector<double> x, y;
  for (int s = 0; s < learner.num_states(); ++s) {
    flatten_beliefs(learner, s, x);
    flatten_beliefs(expert, s, y);
  }
  return stats::pearson(x, y);
}

// Spearman between learner values and Q* over visited states, per bucket.
// Buckets with fewer than two visited states are undefined.
inline GroupedCorrelation value_accuracy(const QTable& learner, const QTable& optimal, const std::vector<bool>& visited,
                                         const DistanceGroups& groups) {
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> cols;
  std::map<int, int> states;
  for (int s = 0; s < learner.num_states(); ++s) {
    const int g = groups[static_cast<std::size_t>(s)];
    if (g == kUnreachable) continue;
    const int b = bucket_of(g);
    cols[b];
    if (!visited[static_cast<std::size_t>(s)]) continue;
    ++states[b];
    for (int a = 0; a < kNumActions; ++a) {
      cols[b].first.push_back(learner(s, a));
      cols[b].second.push_back(optimal(s, a));
    }
  }
  GroupedCorrelation out;
  for (const auto& [b, xy] : cols)
    out[b] = states[b] < 2 ? std::nullopt : stats::spearman(xy.first, xy.second);
  return out;
}

// ---------------------------------------------------------------------------
// Aggregated table

struct MetricRow {
  std::string experiment;
  std::string model;
  std::string statistic;
  std::string group;
  double value = 0.0;
  double sem = 0.0;
  int n = 0;
  int excluded = 0;

  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

using MetricsTable = std::vector<MetricRow>;

class PairingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline MetricRow summary_row(const std::string& exp, const std::string& model, const std::string& stat,
                             const std::string& group, const std::vector<double>& xs, int excluded) {
  const auto s = stats::summarize(xs);
  return {exp, model, stat, group, s.mean, s.sem, s.n, excluded};
}

// Collects per-simulation grouped correlations into per-bucket samples.
struct BucketSamples {
  std::map<int, std::vector<double>> values;
  std::map<int, int> excluded;

  void add(const GroupedCorrelation& g) {
    for (const auto& [b, v] : g) {
      values[b];
      if (v)
        values[b].push_back(*v);
      else
        ++excluded[b];
    }
  }
};

inline double phase_mean(const SimRecord& r, Phase phase) {
  double sum = 0.0;
  int n = 0;
  for (const EpisodeRow& e : r.episodes)
    if (e.phase == phase) {
      sum += e.log.cum_reward;
      ++n;
    }
  return n ? sum / n : 0.0;
}

}  // namespace detail

// Mean cumulative reward per (model, episode), per-phase means, and the
// expert's mean over the demonstrations the learners observed.
inline MetricsTable performance_curves(const Dataset& ds) {
  MetricsTable out;
  const std::string exp = experiment_name(ds.experiment);
  for (std::size_t m = 0; m < ds.models.size(); ++m) {
    const std::string name = model_name(ds.models[m]);
    const std::size_t episodes = ds.n_sims ? ds.record(m, 0).episodes.size() : 0;
    for (std::size_t e = 0; e < episodes; ++e) {
      std::vector<double> xs;
      for (int i = 0; i < ds.n_sims; ++i) xs.push_back(ds.record(m, i).episodes[e].log.cum_reward);
      out.push_back(detail::summary_row(exp, name, "performance", std::to_string(e + 1), xs, 0));
    }
    for (Phase ph : {Phase::train, Phase::test}) {
      std::vector<double> xs;
      for (int i = 0; i < ds.n_sims; ++i) xs.push_back(detail::phase_mean(ds.record(m, i), ph));
      out.push_back(detail::summary_row(exp, name, std::string("performance_") + phase_name(ph), "all", xs, 0));
    }
  }
  std::vector<double> expert;
  for (const auto& sh : ds.shared) {
    if (sh->expert_demos.empty()) continue;
    double sum = 0.0;
    for (const EpisodeLog& l : sh->expert_demos) sum += l.cum_reward;
    expert.push_back(sum / static_cast<double>(sh->expert_demos.size()));
  }
  out.push_back(detail::summary_row(exp, "expert", "performance_train", "all", expert, 0));
  return out;
}

inline MetricsTable value_transfer_table(const Dataset& ds) {
  MetricsTable out;
  const std::string exp = experiment_name(ds.experiment);
  for (std::size_t m = 0; m < ds.models.size(); ++m) {
    detail::BucketSamples samples;
    for (int i = 0; i < ds.n_sims; ++i) {
      const SimRecord& r = ds.record(m, i);
      samples.add(value_transfer(r.q, r.shared->expert_q, distance_groups(r.shared->test_world)));
    }
    for (const auto& [b, xs] : samples.values)
      out.push_back(detail::summary_row(exp, model_name(ds.models[m]), "value_transfer", bucket_label(b), xs,
                                        samples.excluded[b]));
  }
  return out;
}

// Raw per-bucket belief transfer and the same values with the AS-MB bucket
// mean subtracted (the asocial baseline sits at 0).
inline MetricsTable belief_transfer_table(const Dataset& ds) {
  MetricsTable out;
  const std::string exp = experiment_name(ds.experiment);
  std::map<std::size_t, detail::BucketSamples> per_model;
  for (std::size_t m = 0; m < ds.models.size(); ++m) {
    if (!ds.models[m].model_based()) continue;
    auto& samples = per_model[m];
    for (int i = 0; i < ds.n_sims; ++i) {
      const SimRecord& r = ds.record(m, i);
      samples.add(belief_transfer_raw(*r.beliefs, r.shared->expert_beliefs, distance_groups(r.shared->test_world)));
    }
  }
  std::optional<std::size_t> baseline;
  for (const auto& [m, samples] : per_model)
    if (ds.models[m] == ModelKind{Social::asocial, Learning::model_based}) baseline = m;

  for (const auto& [m, samples] : per_model) {
    const std::string name = model_name(ds.models[m]);
    for (const auto& [b, xs] : samples.values) {
      const int excluded = samples.excluded.count(b) ? samples.excluded.at(b) : 0;
      MetricRow raw = detail::summary_row(exp, name, "belief_transfer_raw", bucket_label(b), xs, excluded);
      out.push_back(raw);
      if (!baseline || xs.empty()) continue;
      const auto& base = per_model.at(*baseline).values;
      if (!base.count(b) || base.at(b).empty()) continue;
      MetricRow norm = raw;
      norm.statistic = "belief_transfer";
      norm.value = raw.value - stats::mean(base.at(b));
      out.push_back(norm);
    }
  }
  return out;
}

// Value accuracy against Q* of the test-phase world (the post-swap world in Exp. 2).
inline MetricsTable value_accuracy_table(const Dataset& ds) {
  MetricsTable out;
  const std::string exp = experiment_name(ds.experiment);
  std::vector<QTable> optimal;
  for (const auto& sh : ds.shared) optimal.push_back(optimal_q(sh->test_world).values);
  for (std::size_t m = 0; m < ds.models.size(); ++m) {
    detail::BucketSamples samples;
    for (int i = 0; i < ds.n_sims; ++i) {
      const SimRecord& r = ds.record(m, i);
      samples.add(value_accuracy(r.q, optimal[static_cast<std::size_t>(i)], r.visited,
                                 distance_groups(r.shared->test_world)));
    }
    for (const auto& [b, xs] : samples.values)
      out.push_back(detail::summary_row(exp, model_name(ds.models[m]), "value_accuracy", bucket_label(b), xs,
                                        samples.excluded[b]));
  }
  return out;
}

inline void require_paired(const Dataset& baseline, const Dataset& shifted) {
  if (baseline.base_seed != shifted.base_seed || baseline.n_sims != shifted.n_sims)
    throw PairingError("belief stability needs paired simulations (same base seed and simulation count)");
  for (int i = 0; i < baseline.n_sims; ++i) {
    const auto& a = *baseline.shared[static_cast<std::size_t>(i)];
    const auto& b = *shifted.shared[static_cast<std::size_t>(i)];
    if (a.seed != b.seed || !(a.train_world == b.train_world))
      throw PairingError("simulation " + std::to_string(i) + " is not paired across experiments");
  }
}

struct StabilityResult {
  std::vector<double> deviation;  // per paired simulation (NaN-free; undefined sims dropped)
  std::vector<double> baseline;   // Exp. 1 pooled belief transfer of the same simulations
  std::vector<double> shifted;    // Exp. 3 pooled belief transfer
  int excluded = 0;
};

inline StabilityResult belief_stability(const Dataset& baseline, const Dataset& shifted, ModelKind model) {
  require_paired(baseline, shifted);
  const std::size_t mb = baseline.model_index(model), ms = shifted.model_index(model);
  StabilityResult out;
  for (int i = 0; i < baseline.n_sims; ++i) {
    const SimRecord& rb = baseline.record(mb, i);
    const SimRecord& rs = shifted.record(ms, i);
    const auto x = belief_transfer_pooled(*rb.beliefs, rb.shared->expert_beliefs);
    const auto y = belief_transfer_pooled(*rs.beliefs, rs.shared->expert_beliefs);
    if (!x || !y) {
      ++out.excluded;
      continue;
    }
    out.baseline.push_back(*x);
    out.shifted.push_back(*y);
    out.deviation.push_back(*y - *x);
  }
  return out;
}

// Splits indices sorted by `key` into `bins` groups whose sizes differ by at most one.
inline std::vector<std::vector<std::size_t>> quantile_bins(const std::vector<double>& key, int bins) {
  std::vector<std::size_t> order(key.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  const std::size_t nb = std::min<std::size_t>(static_cast<std::size_t>(std::max(bins, 1)), std::max<std::size_t>(order.size(), 1));
  std::vector<std::vector<std::size_t>> out(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const std::size_t lo = k * order.size() / nb, hi = (k + 1) * order.size() / nb;
    out[k].assign(order.begin() + static_cast<std::ptrdiff_t>(lo), order.begin() + static_cast<std::ptrdiff_t>(hi));
  }
  return out;
}

inline constexpr int kStabilityBins = 10;

inline MetricsTable belief_stability_table(const Dataset& baseline, const Dataset& shifted, int bins = kStabilityBins) {
  MetricsTable out;
  for (ModelKind k : shifted.models) {
    if (!k.model_based()) continue;
    const StabilityResult r = belief_stability(baseline, shifted, k);
    const std::string name = model_name(k);
    out.push_back(detail::summary_row("exp3", name, "belief_stability", "all", r.deviation, r.excluded));
    const auto groups = quantile_bins(r.baseline, bins);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      std::vector<double> xs, ys;
      for (std::size_t i : groups[g]) {
        xs.push_back(r.baseline[i]);
        ys.push_back(r.shifted[i]);
      }
      if (xs.empty()) continue;
      out.push_back(detail::summary_row("exp3", name, "stability_bin_baseline", std::to_string(g + 1), xs, 0));
      out.push_back(detail::summary_row("exp3", name, "stability_bin_shifted", std::to_string(g + 1), ys, 0));
    }
  }
  return out;
}

// Orders rows by (experiment, model, statistic, group); numeric groups sort
// numerically.
inline void sort_metrics(MetricsTable& t) {
  auto group_key = [](const std::string& g) {
    int v = 0;
    std::size_t i = 0;
    while (i < g.size() && g[i] >= '0' && g[i] <= '9') v = v * 10 + (g[i++] - '0');
    return std::pair<int, std::string>{i == 0 ? -1 : v, g.substr(i)};
  };
  std::stable_sort(t.begin(), t.end(), [&](const MetricRow& a, const MetricRow& b) {
    if (a.experiment != b.experiment) return a.experiment < b.experiment;
    if (a.model != b.model) return a.model < b.model;
    if (a.statistic != b.statistic) return a.statistic < b.statistic;
    const auto ga = group_key(a.group), gb = group_key(b.group);
    if (ga != gb) return ga < gb;
    return a.group < b.group;
  });
}

// All statistics for whichever experiments are present. Belief stability is
// computed when both Exp. 1 and Exp. 3 are supplied.
inline MetricsTable compute_metrics(const std::vector<const Dataset*>& datasets) {
  MetricsTable out;
  const Dataset* exp1 = nullptr;
  const Dataset* exp3 = nullptr;
  for (const Dataset* ds : datasets) {
    auto append = [&out](MetricsTable t) { out.insert(out.end(), t.begin(), t.end()); };
    append(performance_curves(*ds));
    append(value_transfer_table(*ds));
    append(belief_transfer_table(*ds));
    append(value_accuracy_table(*ds));
    if (ds->experiment == Experiment::exp1) exp1 = ds;
    if (ds->experiment == Experiment::exp3) exp3 = ds;
  }
  if (exp3) {
    if (!exp1) throw PairingError("exp3 belief stability requires the paired exp1 results");
    const auto t = belief_stability_table(*exp1, *exp3);
    out.insert(out.end(), t.begin(), t.end());
  }
  sort_metrics(out);
  return out;
}

inline const MetricRow* find_metric(const MetricsTable& t, const std::string& exp, const std::string& model,
                                    const std::string& stat, const std::string& group) {
  for (const MetricRow& r : t)
    if (r.experiment == exp && r.model == model && r.statistic == stat && r.group == group) return &r;
  return nullptr;
}

}  // namespace sociallearn
