#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sociallearn/sociallearn.hpp"

#ifndef SOCIALLEARN_DATA_DIR
#define SOCIALLEARN_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace sociallearn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInput = 2;

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::vector<std::string> experiments{"exp1", "exp2", "exp3"};
  std::vector<std::string> models;
  int n_sims = 200;
  bool paper_scale = false;
  std::uint64_t base_seed = 20240601;
  Protocol protocol;
  std::string layouts;  // empty: built-in defaults
  std::string params = std::string(SOCIALLEARN_DATA_DIR) + "/params.csv";
  std::string out = "results";
  std::string in;  // metrics: run directory (defaults to out)
  int workers = 1;
};

std::array<QuadrantLayout, 4> layouts_of(const RunConfig& c) {
  return c.layouts.empty() ? default_layouts() : load_layouts(c.layouts);
}

std::vector<ModelKind> models_of(const RunConfig& c) {
  if (c.models.empty()) return {kAllModels.begin(), kAllModels.end()};
  std::vector<ModelKind> out;
  for (const auto& m : c.models) out.push_back(parse_model(m));
  return out;
}

Registry registry_of(const RunConfig& c) {
  if (!fs::exists(c.params)) throw InputError("parameter registry '" + c.params + "' not found");
  return csv::read_registry(c.params);
}

void add_common(CLI::App& app, RunConfig& c) {
  app.add_option("--layouts", c.layouts, "Layout file (default: built-in quadrants)");
  app.add_option("--out,-o", c.out, "Output directory")->envname("SOCIALLEARN_OUT")->capture_default_str();
  app.add_option("--workers,-j", c.workers, "Parallel workers (output is identical for any value)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_protocol(CLI::App& app, RunConfig& c) {
  app.add_option("--train-episodes", c.protocol.train_episodes, "Training episodes (expert present)")
      ->capture_default_str();
  app.add_option("--test-episodes", c.protocol.test_episodes, "Test episodes (expert removed)")->capture_default_str();
  app.add_option("--pretrain-episodes", c.protocol.pretrain_episodes, "Expert pre-training episodes")
      ->capture_default_str();
  app.add_option("--max-steps", c.protocol.max_steps, "Step cap per episode")->capture_default_str();
  app.add_flag("--expert-learns", c.protocol.expert_learns, "Expert keeps learning while it demonstrates");
}

void print_summary(const MetricsTable& perf) {
  std::cout << std::left << std::setw(6) << "exp" << std::setw(8) << "model" << std::right << std::setw(18)
            << "train (±SEM)" << std::setw(18) << "test (±SEM)" << '\n';
  for (const MetricRow& r : perf) {
    if (r.statistic != "performance_train") continue;
    const MetricRow* test = find_metric(perf, r.experiment, r.model, "performance_test", "all");
    std::ostringstream tr, te;
    tr << std::fixed << std::setprecision(2) << r.value << " ±" << r.sem;
    if (test) te << std::fixed << std::setprecision(2) << test->value << " ±" << test->sem;
    std::cout << std::left << std::setw(6) << r.experiment << std::setw(8) << r.model << std::right << std::setw(18)
              << tr.str() << std::setw(18) << te.str() << '\n';
  }
}

int cmd_run(RunConfig c) {
  if (c.paper_scale) c.n_sims = 1000;
  const auto layouts = layouts_of(c);
  const ParamSet params = registry_of(c).param_set();
  const auto models = models_of(c);

  ExperimentConfig cfg;
  cfg.n_sims = c.n_sims;
  cfg.base_seed = c.base_seed;
  cfg.workers = c.workers;
  cfg.protocol = c.protocol;
  cfg.layouts = layouts;

  std::vector<Dataset> datasets;
  for (const auto& e : c.experiments) {
    std::cerr << "running " << e << " (" << c.n_sims << " simulations x " << models.size() << " models)\n";
    datasets.push_back(run_experiment(parse_experiment(e), models, params, cfg));
  }
  std::vector<const Dataset*> ptrs;
  std::vector<std::string> violations;
  for (const auto& d : datasets) {
    ptrs.push_back(&d);
    for (auto& v : check_invariants(d, c.protocol)) violations.push_back(std::move(v));
  }
  csv::write_run(c.out, ptrs);

  MetricsTable perf;
  for (const auto& d : datasets) {
    const auto t = performance_curves(d);
    perf.insert(perf.end(), t.begin(), t.end());
  }
  print_summary(perf);
  std::cerr << "wrote run outputs to " << c.out << '\n';
  if (!violations.empty()) {
    for (const auto& v : violations) std::cerr << "invariant violation: " << v << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

struct OptimizeOptions {
  DEConfig de;
  int objective_sims = 50;
  std::uint64_t objective_seed = 7;
  std::string registry_out;
};

int cmd_optimize(const RunConfig& c, OptimizeOptions o) {
  FitConfig fit;
  fit.de = o.de;
  fit.de.workers = c.workers;
  fit.n_sims = o.objective_sims;
  fit.objective_seed = o.objective_seed;
  fit.protocol = c.protocol;
  fit.layouts = layouts_of(c);
  fit.progress = [](const std::string& m) { std::cerr << m << std::endl; };
  const Registry reg = fit_all_models(fit);

  fs::create_directories(c.out);
  const fs::path path = o.registry_out.empty() ? fs::path(c.out) / "params.csv" : fs::path(o.registry_out);
  csv::write_registry(path, reg);

  csv::Table hist;
  hist.header = {"model", "generation", "best_objective", "mean_objective"};
  for (const auto& e : reg.entries)
    for (const auto& g : e.history)
      hist.rows.push_back({e.agent, csv::str(g.generation), csv::format_double(g.best), csv::format_double(g.mean)});
  csv::write_table(fs::path(c.out) / "de_history.csv", "de_history", hist);

  for (const auto& e : reg.entries) {
    std::cout << e.agent << " objective=" << e.objective;
    for (std::size_t i = 0; i < e.names.size(); ++i)
      std::cout << ' ' << e.names[i] << '=' << get_param(e.params, e.names[i]) << (e.frozen[i] ? "*" : "");
    std::cout << '\n';
  }
  std::cerr << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_metrics(const RunConfig& c) {
  const fs::path in = c.in.empty() ? fs::path(c.out) : fs::path(c.in);
  for (const char* f : {"episodes.csv", "values.csv", "beliefs.csv", "world.csv", "visited.csv"})
    if (!fs::exists(in / f)) throw InputError("missing run output '" + (in / f).string() + "'");
  const auto datasets = csv::read_run(in, layouts_of(c));
  std::vector<const Dataset*> ptrs;
  for (const auto& d : datasets) ptrs.push_back(&d);
  const MetricsTable table = compute_metrics(ptrs);
  fs::create_directories(c.out);
  csv::write_metrics(fs::path(c.out) / "metrics.csv", table);
  std::cerr << "wrote " << table.size() << " rows to " << (fs::path(c.out) / "metrics.csv").string() << '\n';
  return kExitOk;
}

int cmd_validate_layout(const std::string& path) {
  const auto layouts = load_layouts(path);
  std::cout << path << ": 4 valid quadrants\n";
  for (std::size_t i = 0; i < layouts.size(); ++i)
    std::cout << "  quadrant " << i << ": reward (" << layouts[i].reward_cell.row << ',' << layouts[i].reward_cell.col
              << "), " << layouts[i].walls.size() << " walls\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid-world social learning simulations"};
  app.set_config("--config", "", "Key-value config file; command-line flags take precedence");
  app.require_subcommand(1);

  RunConfig run_cfg;
  auto* run = app.add_subcommand("run", "Run experiments and write episodes/values/beliefs/world/visited CSVs");
  add_common(*run, run_cfg);
  add_protocol(*run, run_cfg);
  run->add_option("--experiments,-e", run_cfg.experiments, "Experiments (exp1 exp2 exp3)")->capture_default_str();
  run->add_option("--models,-m", run_cfg.models, "Models (default: all six)");
  run->add_option("--sims,-n", run_cfg.n_sims, "Simulations per experiment")->capture_default_str();
  run->add_flag("--paper-scale", run_cfg.paper_scale, "Use 1000 simulations per experiment");
  run->add_option("--seed", run_cfg.base_seed, "Base seed")->capture_default_str();
  run->add_option("--params", run_cfg.params, "Parameter registry (params.csv)")->capture_default_str();

  RunConfig opt_cfg;
  OptimizeOptions opt;
  auto* optimize = app.add_subcommand("optimize", "Fit hyperparameters of all agents with differential evolution");
  add_common(*optimize, opt_cfg);
  add_protocol(*optimize, opt_cfg);
  optimize->add_option("--population", opt.de.population, "DE population (0: 10 x dimension)")->capture_default_str();
  optimize->add_option("--generations", opt.de.generations, "DE generations")->capture_default_str();
  optimize->add_option("--mutation", opt.de.mutation, "DE mutation factor F")->capture_default_str();
  optimize->add_option("--crossover", opt.de.crossover, "DE crossover rate CR")->capture_default_str();
  optimize->add_option("--seed", opt.de.seed, "DE master seed")->capture_default_str();
  optimize->add_option("--objective-sims", opt.objective_sims, "Simulations per objective evaluation")
      ->capture_default_str();
  optimize->add_option("--objective-seed", opt.objective_seed, "Seed of the objective simulations")
      ->capture_default_str();
  optimize->add_option("--registry-out", opt.registry_out, "Registry path (default: <out>/params.csv)");

  RunConfig met_cfg;
  auto* metrics = app.add_subcommand("metrics", "Compute all statistics from run outputs into metrics.csv");
  add_common(*metrics, met_cfg);
  metrics->add_option("--in,-i", met_cfg.in, "Run output directory (default: --out)");

  std::string layout_path;
  auto* validate_layout = app.add_subcommand("validate-layout", "Check a quadrant layout file");
  validate_layout->add_option("file", layout_path, "Layout file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*run) return cmd_run(run_cfg);
    if (*optimize) return cmd_optimize(opt_cfg, opt);
    if (*metrics) return cmd_metrics(met_cfg);
    if (*validate_layout) return cmd_validate_layout(layout_path);
  } catch (const LayoutError& e) {
    std::cerr << "invalid layout: " << e.what() << '\n';
    return kExitInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const PairingError& e) {
    std::cerr << "pairing error: " << e.what() << '\n';
    return kExitInput;
  } catch (const csv::CsvError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
