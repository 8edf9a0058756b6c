#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <deque>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sociallearn/rng.hpp"

namespace sociallearn {

struct Cell {
  int row = 0;
  int col = 0;
  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

enum class Action : int { up = 0, down = 1, left = 2, right = 3 };

inline constexpr int kNumActions = 4;
inline constexpr std::array<Action, kNumActions> kAllActions{Action::up, Action::down, Action::left,
                                                              Action::right};

inline constexpr int kQuadrantSize = 5;
inline constexpr int kBoardSize = 2 * kQuadrantSize;
inline constexpr int kNumStates = kBoardSize * kBoardSize;

inline constexpr int kMaxSteps = 40;
inline constexpr int kStepCost = -1;
inline constexpr std::array<int, 4> kRewardValues{0, 25, 50, 75};

constexpr int index_of(Action a) noexcept { return static_cast<int>(a); }

inline const char* action_name(Action a) {
  switch (a) {
    case Action::up: return "up";
    case Action::down: return "down";
    case Action::left: return "left";
    case Action::right: return "right";
  }
  return "?";
}

// Unclipped coordinate move.
constexpr Cell offset(Cell c, Action a) noexcept {
  switch (a) {
    case Action::up: return {c.row - 1, c.col};
    case Action::down: return {c.row + 1, c.col};
    case Action::left: return {c.row, c.col - 1};
    case Action::right: return {c.row, c.col + 1};
  }
  return c;
}

constexpr int manhattan_distance(Cell a, Cell b) noexcept {
  return (a.row > b.row ? a.row - b.row : b.row - a.row) + (a.col > b.col ? a.col - b.col : b.col - a.col);
}

// Rectangular grid with blocked edges. The outer boundary is always blocked.
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols) : rows_(rows), cols_(cols), open_(static_cast<std::size_t>(rows * cols), 0) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("grid dimensions must be positive");
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        for (Action a : kAllActions)
          if (in_bounds(offset({r, c}, a))) open_[index({r, c})] |= bit(a);
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int size() const noexcept { return rows_ * cols_; }

  bool in_bounds(Cell c) const noexcept { return c.row >= 0 && c.row < rows_ && c.col >= 0 && c.col < cols_; }
  int index(Cell c) const noexcept { return c.row * cols_ + c.col; }
  Cell cell(int index) const noexcept { return {index / cols_, index % cols_}; }

  bool is_open(Cell c, Action a) const noexcept { return (open_[index(c)] & bit(a)) != 0; }
  std::uint8_t open_mask(int index) const noexcept { return open_[static_cast<std::size_t>(index)]; }

  // Deterministic movement: blocked edges and the boundary leave the agent in place.
  Cell step(Cell c, Action a) const noexcept { return is_open(c, a) ? offset(c, a) : c; }

  // Grid-clipped move ignoring walls.
  Cell clipped(Cell c, Action a) const noexcept {
    const Cell n = offset(c, a);
    return in_bounds(n) ? n : c;
  }

  void block(Cell a, Cell b) {
    const Action dir = direction(a, b);
    open_[index(a)] &= static_cast<std::uint8_t>(~bit(dir));
    open_[index(b)] &= static_cast<std::uint8_t>(~bit(opposite(dir)));
  }

  static constexpr Action opposite(Action a) noexcept {
    switch (a) {
      case Action::up: return Action::down;
      case Action::down: return Action::up;
      case Action::left: return Action::right;
      case Action::right: return Action::left;
    }
    return a;
  }

  // Direction from a to an orthogonally adjacent b.
  Action direction(Cell a, Cell b) const {
    if (!in_bounds(a) || !in_bounds(b)) throw std::invalid_argument("edge cell out of bounds");
    for (Action d : kAllActions)
      if (offset(a, d) == b) return d;
    throw std::invalid_argument("edge cells are not orthogonally adjacent");
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static constexpr std::uint8_t bit(Action a) noexcept { return static_cast<std::uint8_t>(1u << index_of(a)); }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> open_;
};

inline constexpr int kUnreachable = -1;

// Shortest-path step counts (respecting walls) to the nearest target.
inline std::vector<int> bfs_distance(const Grid& grid, std::span<const Cell> targets) {
  if (targets.empty()) throw std::invalid_argument("bfs_distance: empty target set");
  std::vector<int> dist(static_cast<std::size_t>(grid.size()), kUnreachable);
  std::deque<Cell> frontier;
  for (Cell t : targets) {
    if (!grid.in_bounds(t)) throw std::invalid_argument("bfs_distance: target out of bounds");
    if (dist[grid.index(t)] != 0) {
      dist[grid.index(t)] = 0;
      frontier.push_back(t);
    }
  }
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop_front();
    for (Action a : kAllActions) {
      if (!grid.is_open(c, a)) continue;
      const Cell n = offset(c, a);
      if (dist[grid.index(n)] == kUnreachable) {
        dist[grid.index(n)] = dist[grid.index(c)] + 1;
        frontier.push_back(n);
      }
    }
  }
  return dist;
}

// ---------------------------------------------------------------------------
// Quadrants

struct Edge {
  Cell a;
  Cell b;

  static Edge make(Cell x, Cell y) { return x < y ? Edge{x, y} : Edge{y, x}; }
  friend constexpr auto operator<=>(const Edge&, const Edge&) = default;
};

struct QuadrantLayout {
  std::set<Edge> walls;
  Cell reward_cell;

  friend bool operator==(const QuadrantLayout&, const QuadrantLayout&) = default;
};

inline Grid quadrant_grid(const QuadrantLayout& layout) {
  Grid g(kQuadrantSize, kQuadrantSize);
  for (const Edge& e : layout.walls) g.block(e.a, e.b);
  return g;
}

// Throws std::invalid_argument when the layout is malformed: edges out of
// bounds or not adjacent, an enclosed reward cell, or an open cell that cannot
// reach the reward cell.
inline void validate(const QuadrantLayout& layout) {
  const Grid g = quadrant_grid(layout);
  if (!g.in_bounds(layout.reward_cell)) throw std::invalid_argument("reward cell out of bounds");
  if (g.open_mask(g.index(layout.reward_cell)) == 0) throw std::invalid_argument("reward cell is fully enclosed");
  const Cell target[] = {layout.reward_cell};
  const auto dist = bfs_distance(g, target);
  for (int i = 0; i < g.size(); ++i)
    if (g.open_mask(i) != 0 && dist[i] == kUnreachable)
      throw std::invalid_argument("cell (" + std::to_string(g.cell(i).row) + "," + std::to_string(g.cell(i).col) +
                                  ") cannot reach the reward cell");
}

// Quarter turns clockwise on the 5x5 grid: (r, c) -> (c, 4 - r).
constexpr Cell rotate_cell(Cell c, int quarter_turns) noexcept {
  const int turns = ((quarter_turns % 4) + 4) % 4;
  for (int i = 0; i < turns; ++i) c = Cell{c.col, kQuadrantSize - 1 - c.row};
  return c;
}

inline QuadrantLayout rotate_quadrant(const QuadrantLayout& layout, int quarter_turns) {
  QuadrantLayout out;
  out.reward_cell = rotate_cell(layout.reward_cell, quarter_turns);
  for (const Edge& e : layout.walls)
    out.walls.insert(Edge::make(rotate_cell(e.a, quarter_turns), rotate_cell(e.b, quarter_turns)));
  return out;
}

// ---------------------------------------------------------------------------
// World

// Board position k of a quadrant: 0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right.
constexpr Cell quadrant_origin(int position) noexcept {
  return {(position / 2) * kQuadrantSize, (position % 2) * kQuadrantSize};
}

inline constexpr std::array<Cell, 4> kCentralStarts{Cell{4, 4}, Cell{4, 5}, Cell{5, 4}, Cell{5, 5}};

struct WorldConfig {
  std::array<int, 4> permutation{0, 1, 2, 3};  // layout id at each board position
  std::array<int, 4> rotations{0, 0, 0, 0};    // clockwise quarter turns per board position
  std::array<int, 4> reward_values{};          // value of the reward cell at each board position
  std::array<Cell, 4> reward_cells{};          // global coordinates, per board position
  std::array<Cell, 4> start_states = kCentralStarts;
  Grid grid;

  // Base value of a designated reward cell, or -1 for ordinary cells.
  int reward_value_at(Cell c) const noexcept {
    for (int k = 0; k < 4; ++k)
      if (reward_cells[k] == c) return reward_values[k];
    return -1;
  }
  bool is_positive_reward_cell(Cell c) const noexcept { return reward_value_at(c) > 0; }
  bool is_reward_cell(Cell c) const noexcept { return reward_value_at(c) >= 0; }

  friend bool operator==(const WorldConfig&, const WorldConfig&) = default;
};

inline bool is_value_permutation(const std::array<int, 4>& values) {
  auto sorted = values;
  std::sort(sorted.begin(), sorted.end());
  return sorted == kRewardValues;
}

inline WorldConfig assemble_world(std::span<const QuadrantLayout, 4> layouts, const std::array<int, 4>& permutation,
                                  const std::array<int, 4>& rotations, const std::array<int, 4>& reward_values,
                                  const std::array<Cell, 4>& start_states = kCentralStarts) {
  auto sorted = permutation;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != std::array<int, 4>{0, 1, 2, 3}) throw std::invalid_argument("permutation is not a bijection");
  if (!is_value_permutation(reward_values)) throw std::invalid_argument("reward values must permute {0,25,50,75}");
  for (int r : rotations)
    if (r < 0 || r > 3) throw std::invalid_argument("rotation must be 0..3 quarter turns");
  for (const auto& l : layouts) validate(l);

  WorldConfig w;
  w.permutation = permutation;
  w.rotations = rotations;
  w.reward_values = reward_values;
  w.start_states = start_states;
  w.grid = Grid(kBoardSize, kBoardSize);
  for (int pos = 0; pos < 4; ++pos) {
    const QuadrantLayout q = rotate_quadrant(layouts[static_cast<std::size_t>(permutation[pos])], rotations[pos]);
    const Cell o = quadrant_origin(pos);
    auto global = [o](Cell c) { return Cell{c.row + o.row, c.col + o.col}; };
    for (const Edge& e : q.walls) w.grid.block(global(e.a), global(e.b));
    w.reward_cells[pos] = global(q.reward_cell);
  }
  for (Cell s : start_states) {
    if (!w.grid.in_bounds(s)) throw std::invalid_argument("start state out of bounds");
    if (w.is_reward_cell(s)) throw std::invalid_argument("start state coincides with a reward cell");
  }
  return w;
}

template <typename Rng>
WorldConfig sample_world(std::span<const QuadrantLayout, 4> layouts, Rng& rng) {
  std::array<int, 4> perm{0, 1, 2, 3};
  std::array<int, 4> rot{};
  std::array<int, 4> values = kRewardValues;
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int& r : rot) r = uniform_index(rng, 4);
  std::shuffle(values.begin(), values.end(), rng);
  return assemble_world(layouts, perm, rot, values);
}

inline Cell step_dynamics(const WorldConfig& world, Cell state, Action action) noexcept {
  return world.grid.step(state, action);
}

// Binomial(400, 0.5) - 200: integer noise with mean 0 and variance 100.
template <typename Rng>
int sample_noise(Rng& rng) {
  return std::binomial_distribution<int>{400, 0.5}(rng) - 200;
}

struct StepOutcome {
  Cell next_state;
  int reward = 0;
  bool terminal = false;
};

// Positive reward cells pay their value plus noise and end the episode; every
// other cell, including the zero-value reward cell, costs one point.
template <typename Rng>
StepOutcome observe_reward(const WorldConfig& world, Cell next_state, Rng& rng) {
  const int v = world.reward_value_at(next_state);
  if (v > 0) return {next_state, v + sample_noise(rng), true};
  return {next_state, kStepCost, false};
}

inline std::vector<int> reward_distances(const WorldConfig& world) {
  return bfs_distance(world.grid, world.reward_cells);
}

// Moves each central start one diagonal step toward its corner. If that lands
// on a reward cell the row-only shift is used, then the column-only shift.
inline WorldConfig shift_start_states(const WorldConfig& world) {
  WorldConfig out = world;
  for (Cell& s : out.start_states) {
    const int dr = s.row < kBoardSize / 2 ? -1 : 1;
    const int dc = s.col < kBoardSize / 2 ? -1 : 1;
    const Cell candidates[] = {{s.row + dr, s.col + dc}, {s.row + dr, s.col}, {s.row, s.col + dc}};
    for (Cell c : candidates) {
      if (!world.is_reward_cell(c)) {
        s = c;
        break;
      }
    }
  }
  return out;
}

// Exchanges the values of two distinct designated reward cells chosen uniformly.
template <typename Rng>
WorldConfig apply_reward_swap(const WorldConfig& world, Rng& rng) {
  WorldConfig out = world;
  const int i = uniform_index(rng, 4);
  int j = uniform_index(rng, 3);
  if (j >= i) ++j;
  std::swap(out.reward_values[static_cast<std::size_t>(i)], out.reward_values[static_cast<std::size_t>(j)]);
  return out;
}

}  // namespace sociallearn
