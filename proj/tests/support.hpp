#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "sociallearn/sociallearn.hpp"

namespace testing_support {

using namespace sociallearn;

// Beliefs equal to the true deterministic dynamics of `grid`.
inline BeliefModel true_beliefs(const Grid& grid) {
  BeliefModel b = BeliefModel::for_grid(grid);
  for (int s = 0; s < grid.size(); ++s)
    for (Action a : kAllActions) {
      const int next = grid.index(grid.step(grid.cell(s), a));
      for (int succ : b.successors(s)) b.set_prob(s, index_of(a), succ, succ == next ? 1.0 : 0.0);
    }
  return b;
}

inline WorldConfig world_for_seed(std::uint64_t seed) {
  Engine rng{seed};
  const auto layouts = default_layouts();
  return sample_world(layouts, rng);
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Parameters that give every learner something sensible to do in a few
// episodes; used where a test needs behaviour but not fitted values.
inline ParamSet test_params() {
  ParamSet ps;
  ps.expert = {0.3, 0.95, 0.2, 0.7, 20.0, 0.0, 0.0};
  for (std::size_t i = 0; i < kAllModels.size(); ++i) {
    AgentParams p{0.3, 0.95, 0.2, 0.7, 0.0, 0.0, 0.0};
    if (kAllModels[i].model_based()) p.lambda = 5.0;
    if (kAllModels[i].social == Social::decision_biasing) p.omega = 0.8;
    if (kAllModels[i].social == Social::value_shaping) p.kappa = 10.0;
    ps.models[i] = p;
  }
  return ps;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("sociallearn_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing_support
