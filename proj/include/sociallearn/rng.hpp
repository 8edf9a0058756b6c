#pragma once

#include <cstdint>
#include <random>

namespace sociallearn {

using Engine = std::mt19937_64;

// SplitMix64 finalizer. Used as the documented mixing function for all
// counter-based seed derivation.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives the seed of child `index` from `parent`. Children of one parent are
// independent of how many siblings are requested.
constexpr std::uint64_t split_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix64(mix64(parent) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

// Named sub-streams of one simulation seed.
enum class Stream : std::uint64_t {
  world = 1,
  expert_pretrain = 2,
  expert_demo = 3,
  starts = 4,
  learner_actions = 5,
  learner_noise = 6,
  learner_planning = 7,
  manipulation = 8,
};

inline Engine make_engine(std::uint64_t seed, Stream stream) {
  return Engine{split_seed(seed, static_cast<std::uint64_t>(stream))};
}

// Uniform integer in [0, n).
template <typename Rng>
int uniform_index(Rng& rng, int n) {
  return std::uniform_int_distribution<int>{0, n - 1}(rng);
}

template <typename Rng>
double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>{0.0, 1.0}(rng);
}

}  // namespace sociallearn
