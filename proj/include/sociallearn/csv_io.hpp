#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <tuple>
#include <vector>

#include "sociallearn/experiments.hpp"
#include "sociallearn/metrics.hpp"
#include "sociallearn/optimizer.hpp"

namespace sociallearn::csv {

inline constexpr int kSchemaVersion = 1;

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw CsvError("not a number: '" + s + "'");
  return v;
}

template <typename Int>
Int parse_int(const std::string& s) {
  Int v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw CsvError("not an integer: '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

// A table is a versioned comment line, a header row and data rows.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw CsvError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline void write_table(const std::filesystem::path& path, const std::string& kind, const Table& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CsvError("cannot write '" + path.string() + "'");
  out << "# sociallearn " << kind << " v" << kSchemaVersion << '\n';
  for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  if (!out) throw CsvError("failed writing '" + path.string() + "'");
}

inline Table read_table(const std::filesystem::path& path, const std::string& kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("cannot open '" + path.string() + "'");
  Table t;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# sociallearn " + kind + " v", 0) != 0)
    throw CsvError("'" + path.string() + "' is not a sociallearn " + kind + " file");
  const int version = parse_int<int>(line.substr(("# sociallearn " + kind + " v").size()));
  if (version != kSchemaVersion) throw CsvError("'" + path.string() + "': unsupported schema version");
  if (!std::getline(in, line)) throw CsvError("'" + path.string() + "': missing header");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto row = split(line);
    if (row.size() != t.header.size()) throw CsvError("'" + path.string() + "': ragged row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

// Sorts rows by the given key columns; numeric keys compare numerically.
inline void sort_rows(Table& t, const std::vector<std::pair<std::string, bool>>& keys) {
  std::vector<std::pair<std::size_t, bool>> idx;
  for (const auto& [name, numeric] : keys) idx.emplace_back(t.column(name), numeric);
  std::stable_sort(t.rows.begin(), t.rows.end(), [&](const auto& a, const auto& b) {
    for (const auto& [c, numeric] : idx) {
      if (numeric) {
        const double x = parse_double(a[c]), y = parse_double(b[c]);
        if (x != y) return x < y;
      } else if (a[c] != b[c]) {
        return a[c] < b[c];
      }
    }
    return false;
  });
}

inline std::string str(int v) { return std::to_string(v); }
inline std::string str(std::uint64_t v) { return std::to_string(v); }

// ---------------------------------------------------------------------------
// Run outputs

inline const char* kExpert = "expert";

struct RunTables {
  Table episodes, values, beliefs, world, visited;
};

inline RunTables empty_run_tables() {
  RunTables t;
  t.episodes.header = {"experiment", "model", "sim", "episode", "phase", "cum_reward", "steps", "terminated_by_reward"};
  t.values.header = {"experiment", "model", "sim", "state", "action", "q_value", "source"};
  t.beliefs.header = {"experiment", "model", "sim", "state", "action", "successor", "probability", "source"};
  t.world.header = {"experiment", "sim", "base_seed", "seed", "phase"};
  for (const char* f : {"perm", "rot", "reward"})
    for (int k = 0; k < 4; ++k) t.world.header.push_back(f + std::to_string(k));
  for (int k = 0; k < 4; ++k) {
    t.world.header.push_back("start" + std::to_string(k) + "_row");
    t.world.header.push_back("start" + std::to_string(k) + "_col");
  }
  for (int k = 0; k < 4; ++k) {
    t.world.header.push_back("reward_cell" + std::to_string(k) + "_row");
    t.world.header.push_back("reward_cell" + std::to_string(k) + "_col");
  }
  t.visited.header = {"experiment", "model", "sim", "state"};
  return t;
}

inline void append_q(Table& t, const std::string& exp, const std::string& model, int sim, const QTable& q,
                     const std::string& source) {
  for (int s = 0; s < q.num_states(); ++s)
    for (int a = 0; a < kNumActions; ++a)
      t.rows.push_back({exp, model, str(sim), str(s), str(a), format_double(q(s, a)), source});
}

inline void append_beliefs(Table& t, const std::string& exp, const std::string& model, int sim, const BeliefModel& b,
                           const std::string& source) {
  for (int s = 0; s < b.num_states(); ++s) {
    const auto succ = b.successors(s);
    for (int a = 0; a < kNumActions; ++a) {
      const auto p = b.probs(s, a);
      for (std::size_t i = 0; i < succ.size(); ++i)
        t.rows.push_back({exp, model, str(sim), str(s), str(a), str(succ[i]), format_double(p[i]), source});
    }
  }
}

inline std::vector<std::string> world_row(const std::string& exp, int sim, std::uint64_t base_seed, std::uint64_t seed,
                                          Phase phase, const WorldConfig& w) {
  std::vector<std::string> row{exp, str(sim), str(base_seed), str(seed), phase_name(phase)};
  for (int v : w.permutation) row.push_back(str(v));
  for (int v : w.rotations) row.push_back(str(v));
  for (int v : w.reward_values) row.push_back(str(v));
  for (Cell c : w.start_states) {
    row.push_back(str(c.row));
    row.push_back(str(c.col));
  }
  for (Cell c : w.reward_cells) {
    row.push_back(str(c.row));
    row.push_back(str(c.col));
  }
  return row;
}

inline void append_dataset(RunTables& t, const Dataset& ds) {
  const std::string exp = experiment_name(ds.experiment);
  for (int i = 0; i < ds.n_sims; ++i) {
    const SimShared& sh = *ds.shared[static_cast<std::size_t>(i)];
    t.world.rows.push_back(world_row(exp, i, ds.base_seed, sh.seed, Phase::train, sh.train_world));
    t.world.rows.push_back(world_row(exp, i, ds.base_seed, sh.seed, Phase::test, sh.test_world));
    for (std::size_t e = 0; e < sh.expert_demos.size(); ++e) {
      const EpisodeLog& l = sh.expert_demos[e];
      t.episodes.rows.push_back({exp, kExpert, str(i), str(static_cast<int>(e + 1)), "train", str(l.cum_reward),
                                 str(l.steps), l.terminated_by_reward ? "1" : "0"});
    }
    append_q(t.values, exp, kExpert, i, sh.expert_q, "expert");
    append_beliefs(t.beliefs, exp, kExpert, i, sh.expert_beliefs, "expert");
  }
  for (const SimRecord& r : ds.records) {
    const std::string model = model_name(r.model);
    for (const EpisodeRow& e : r.episodes)
      t.episodes.rows.push_back({exp, model, str(r.sim), str(e.episode), phase_name(e.phase), str(e.log.cum_reward),
                                 str(e.log.steps), e.log.terminated_by_reward ? "1" : "0"});
    append_q(t.values, exp, model, r.sim, r.q, "learner");
    if (r.beliefs) append_beliefs(t.beliefs, exp, model, r.sim, *r.beliefs, "learner");
    for (std::size_t s = 0; s < r.visited.size(); ++s)
      if (r.visited[s]) t.visited.rows.push_back({exp, model, str(r.sim), str(static_cast<int>(s))});
  }
}

inline void write_run(const std::filesystem::path& dir, const std::vector<const Dataset*>& datasets) {
  std::filesystem::create_directories(dir);
  RunTables t = empty_run_tables();
  for (const Dataset* ds : datasets) append_dataset(t, *ds);
  sort_rows(t.episodes, {{"experiment", false}, {"model", false}, {"sim", true}, {"episode", true}});
  sort_rows(t.values, {{"experiment", false}, {"model", false}, {"sim", true}, {"state", true}, {"action", true}});
  sort_rows(t.beliefs, {{"experiment", false}, {"model", false}, {"sim", true}, {"state", true}, {"action", true}, {"successor", true}});
  sort_rows(t.world, {{"experiment", false}, {"sim", true}, {"phase", false}});
  sort_rows(t.visited, {{"experiment", false}, {"model", false}, {"sim", true}, {"state", true}});
  write_table(dir / "episodes.csv", "episodes", t.episodes);
  write_table(dir / "values.csv", "values", t.values);
  write_table(dir / "beliefs.csv", "beliefs", t.beliefs);
  write_table(dir / "world.csv", "world", t.world);
  write_table(dir / "visited.csv", "visited", t.visited);
}

namespace detail {

inline WorldConfig world_from_row(const Table& t, const std::vector<std::string>& row,
                                  std::span<const QuadrantLayout, 4> layouts) {
  auto col = [&](const std::string& n) { return parse_int<int>(row[t.column(n)]); };
  std::array<int, 4> perm{}, rot{}, reward{};
  std::array<Cell, 4> starts{}, cells{};
  for (int k = 0; k < 4; ++k) {
    const auto ks = std::to_string(k);
    perm[k] = col("perm" + ks);
    rot[k] = col("rot" + ks);
    reward[k] = col("reward" + ks);
    starts[k] = {col("start" + ks + "_row"), col("start" + ks + "_col")};
    cells[k] = {col("reward_cell" + ks + "_row"), col("reward_cell" + ks + "_col")};
  }
  WorldConfig w = assemble_world(layouts, perm, rot, reward, starts);
  if (w.reward_cells != cells) throw CsvError("world.csv does not match the supplied layouts");
  return w;
}

}  // namespace detail

// Rebuilds every experiment found in `dir`. Worlds are re-assembled from the
// stored descriptors and `layouts`.
inline std::vector<Dataset> read_run(const std::filesystem::path& dir, std::span<const QuadrantLayout, 4> layouts) {
  const Table episodes = read_table(dir / "episodes.csv", "episodes");
  const Table values = read_table(dir / "values.csv", "values");
  const Table beliefs = read_table(dir / "beliefs.csv", "beliefs");
  const Table world = read_table(dir / "world.csv", "world");
  const Table visited = read_table(dir / "visited.csv", "visited");

  std::map<std::string, Dataset> by_exp;
  std::map<std::string, std::map<int, std::shared_ptr<SimShared>>> shared;
  const Grid board(kBoardSize, kBoardSize);

  for (const auto& row : world.rows) {
    const std::string exp = row[world.column("experiment")];
    const int sim = parse_int<int>(row[world.column("sim")]);
    Dataset& ds = by_exp[exp];
    ds.experiment = parse_experiment(exp);
    ds.base_seed = parse_int<std::uint64_t>(row[world.column("base_seed")]);
    auto& sh = shared[exp][sim];
    if (!sh) {
      sh = std::make_shared<SimShared>();
      sh->sim = sim;
      sh->seed = parse_int<std::uint64_t>(row[world.column("seed")]);
      sh->expert_q = QTable(board.size());
      sh->expert_beliefs = BeliefModel::for_grid(board);
    }
    const WorldConfig w = detail::world_from_row(world, row, layouts);
    (row[world.column("phase")] == "train" ? sh->train_world : sh->test_world) = w;
  }

  // Learner records keyed by (experiment, model, sim).
  std::map<std::tuple<std::string, std::string, int>, SimRecord> recs;
  auto record = [&](const std::string& exp, const std::string& model, int sim) -> SimRecord& {
    auto [it, fresh] = recs.try_emplace({exp, model, sim});
    if (fresh) {
      it->second.experiment = parse_experiment(exp);
      it->second.model = parse_model(model);
      it->second.sim = sim;
      it->second.q = QTable(board.size());
      it->second.visited.assign(static_cast<std::size_t>(board.size()), false);
      if (it->second.model.model_based()) it->second.beliefs = BeliefModel::for_grid(board);
    }
    return it->second;
  };
  auto shared_of = [&](const std::string& exp, int sim) -> SimShared& {
    auto it = shared[exp].find(sim);
    if (it == shared[exp].end()) throw CsvError("no world descriptor for " + exp + " sim " + std::to_string(sim));
    return *it->second;
  };

  {
    const auto ce = episodes.column("experiment"), cm = episodes.column("model"), cs = episodes.column("sim"),
               cep = episodes.column("episode"), cph = episodes.column("phase"), cr = episodes.column("cum_reward"),
               cst = episodes.column("steps"), ct = episodes.column("terminated_by_reward");
    for (const auto& row : episodes.rows) {
      const EpisodeLog log{parse_int<int>(row[cr]), parse_int<int>(row[cst]), row[ct] == "1"};
      const int sim = parse_int<int>(row[cs]);
      if (row[cm] == kExpert) {
        shared_of(row[ce], sim).expert_demos.push_back(log);
        continue;
      }
      record(row[ce], row[cm], sim).episodes.push_back(
          {parse_int<int>(row[cep]), row[cph] == "train" ? Phase::train : Phase::test, log});
    }
  }
  {
    const auto ce = values.column("experiment"), cm = values.column("model"), cs = values.column("sim"),
               cst = values.column("state"), ca = values.column("action"), cq = values.column("q_value");
    for (const auto& row : values.rows) {
      const int sim = parse_int<int>(row[cs]), s = parse_int<int>(row[cst]), a = parse_int<int>(row[ca]);
      QTable& q = row[cm] == kExpert ? shared_of(row[ce], sim).expert_q : record(row[ce], row[cm], sim).q;
      q(s, a) = parse_double(row[cq]);
    }
  }
  {
    const auto ce = beliefs.column("experiment"), cm = beliefs.column("model"), cs = beliefs.column("sim"),
               cst = beliefs.column("state"), ca = beliefs.column("action"), cn = beliefs.column("successor"),
               cp = beliefs.column("probability");
    for (const auto& row : beliefs.rows) {
      const int sim = parse_int<int>(row[cs]), s = parse_int<int>(row[cst]), a = parse_int<int>(row[ca]);
      BeliefModel* b = nullptr;
      if (row[cm] == kExpert) {
        b = &shared_of(row[ce], sim).expert_beliefs;
      } else {
        SimRecord& r = record(row[ce], row[cm], sim);
        if (!r.beliefs) throw CsvError("beliefs.csv has rows for model-free learner " + row[cm]);
        b = &*r.beliefs;
      }
      b->set_prob(s, a, parse_int<int>(row[cn]), parse_double(row[cp]));
    }
  }
  {
    const auto ce = visited.column("experiment"), cm = visited.column("model"), cs = visited.column("sim"),
               cst = visited.column("state");
    for (const auto& row : visited.rows)
      record(row[ce], row[cm], parse_int<int>(row[cs])).visited[static_cast<std::size_t>(parse_int<int>(row[cst]))] = true;
  }

  std::vector<Dataset> out;
  for (auto& [exp, ds] : by_exp) {
    auto& sims = shared[exp];
    ds.n_sims = static_cast<int>(sims.size());
    for (int i = 0; i < ds.n_sims; ++i) {
      if (!sims.count(i)) throw CsvError(exp + ": simulation indices are not contiguous");
      ds.shared.push_back(sims[i]);
    }
    for (ModelKind k : kAllModels) {
      bool any = false;
      for (int i = 0; i < ds.n_sims; ++i) any = any || recs.count({exp, model_name(k), i});
      if (!any) continue;
      ds.models.push_back(k);
      for (int i = 0; i < ds.n_sims; ++i) {
        auto it = recs.find({exp, model_name(k), i});
        if (it == recs.end()) throw CsvError(exp + ": missing " + model_name(k) + " sim " + std::to_string(i));
        SimRecord r = std::move(it->second);
        std::sort(r.episodes.begin(), r.episodes.end(), [](const auto& a, const auto& b) { return a.episode < b.episode; });
        r.shared = sims[i];
        ds.records.push_back(std::move(r));
      }
    }
    out.push_back(std::move(ds));
  }
  return out;
}

// ---------------------------------------------------------------------------
// metrics.csv

inline void write_metrics(const std::filesystem::path& path, const MetricsTable& rows) {
  Table t;
  t.header = {"experiment", "model", "statistic", "group", "value", "sem", "n", "excluded_count"};
  for (const MetricRow& r : rows)
    t.rows.push_back({r.experiment, r.model, r.statistic, r.group, format_double(r.value), format_double(r.sem),
                      str(r.n), str(r.excluded)});
  write_table(path, "metrics", t);
}

inline MetricsTable read_metrics(const std::filesystem::path& path) {
  const Table t = read_table(path, "metrics");
  MetricsTable out;
  for (const auto& row : t.rows)
    out.push_back({row[t.column("experiment")], row[t.column("model")], row[t.column("statistic")],
                   row[t.column("group")], parse_double(row[t.column("value")]), parse_double(row[t.column("sem")]),
                   parse_int<int>(row[t.column("n")]), parse_int<int>(row[t.column("excluded_count")])});
  return out;
}

// ---------------------------------------------------------------------------
// params.csv

inline void write_registry(const std::filesystem::path& path, const Registry& reg) {
  Table t;
  t.header = {"model", "parameter", "value", "frozen", "objective", "seed"};
  for (const RegistryEntry& e : reg.entries)
    for (std::size_t i = 0; i < e.names.size(); ++i)
      t.rows.push_back({e.agent, e.names[i], format_double(get_param(e.params, e.names[i])), e.frozen[i] ? "1" : "0",
                        format_double(e.objective), str(e.seed)});
  write_table(path, "params", t);
}

inline Registry read_registry(const std::filesystem::path& path) {
  const Table t = read_table(path, "params");
  Registry reg;
  for (const auto& row : t.rows) {
    const std::string agent = row[t.column("model")];
    RegistryEntry* e = nullptr;
    for (auto& x : reg.entries)
      if (x.agent == agent) e = &x;
    if (!e) {
      if (agent != "expert") parse_model(agent);
      reg.entries.push_back({});
      e = &reg.entries.back();
      e->agent = agent;
      e->params = zeroed_params();
    }
    const std::string name = row[t.column("parameter")];
    set_param(e->params, name, parse_double(row[t.column("value")]));
    e->names.push_back(name);
    e->frozen.push_back(row[t.column("frozen")] == "1");
    e->objective = parse_double(row[t.column("objective")]);
    e->seed = parse_int<std::uint64_t>(row[t.column("seed")]);
  }
  for (const auto& e : reg.entries) validate(e.params);
  return reg;
}

}  // namespace sociallearn::csv
