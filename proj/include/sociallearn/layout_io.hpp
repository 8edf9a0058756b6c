#pragma once

#include <array>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sociallearn/gridworld.hpp"

namespace sociallearn {

// Layout file format, one quadrant per block:
//
//   .....        five rows of five markers, '.' open and 'R' the reward cell
//   .R...
//   .....
//   .....
//   .....
//   WALL 0 1 1 1 one line per blocked edge: row/col of both cells
//
// Blank lines and lines starting with '#' are ignored.
class LayoutError : public std::runtime_error {
 public:
  LayoutError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

inline std::vector<QuadrantLayout> parse_layouts(std::istream& in) {
  std::vector<QuadrantLayout> out;
  std::vector<int> block_lines;
  int grid_rows = 0;
  bool reward_seen = false;
  std::string line;
  int lineno = 0;

  auto finish_block = [&](int at) {
    if (out.empty()) return;
    if (grid_rows != kQuadrantSize) throw LayoutError(at, "quadrant has fewer than 5 grid rows");
    if (!reward_seen) throw LayoutError(block_lines.back(), "quadrant has no reward cell 'R'");
    try {
      validate(out.back());
    } catch (const std::invalid_argument& e) {
      throw LayoutError(block_lines.back(), std::string("invalid quadrant: ") + e.what());
    }
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::string body = line.substr(first, line.find_last_not_of(" \t") - first + 1);

    if (body.rfind("WALL", 0) == 0) {
      if (out.empty() || grid_rows != kQuadrantSize) throw LayoutError(lineno, "WALL before a complete 5x5 grid");
      std::istringstream fields(body.substr(4));
      int r1, c1, r2, c2;
      std::string extra;
      if (!(fields >> r1 >> c1 >> r2 >> c2) || (fields >> extra))
        throw LayoutError(lineno, "expected 'WALL r1 c1 r2 c2'");
      const Cell a{r1, c1}, b{r2, c2};
      auto in_quadrant = [](Cell c) { return c.row >= 0 && c.row < kQuadrantSize && c.col >= 0 && c.col < kQuadrantSize; };
      if (!in_quadrant(a) || !in_quadrant(b)) throw LayoutError(lineno, "wall cell outside the 5x5 quadrant");
      if (manhattan_distance(a, b) != 1) throw LayoutError(lineno, "wall cells are not orthogonally adjacent");
      if (!out.back().walls.insert(Edge::make(a, b)).second) throw LayoutError(lineno, "duplicate wall");
      continue;
    }

    if (body.size() != kQuadrantSize || body.find_first_not_of(".R") != std::string::npos)
      throw LayoutError(lineno, "expected a row of five '.'/'R' markers or a WALL line");
    if (out.empty() || grid_rows == kQuadrantSize) {
      finish_block(lineno);
      out.emplace_back();
      block_lines.push_back(lineno);
      grid_rows = 0;
      reward_seen = false;
    }
    for (int c = 0; c < kQuadrantSize; ++c) {
      if (body[static_cast<std::size_t>(c)] != 'R') continue;
      if (reward_seen) throw LayoutError(lineno, "more than one reward cell in quadrant");
      reward_seen = true;
      out.back().reward_cell = {grid_rows, c};
    }
    ++grid_rows;
  }
  if (out.empty()) throw LayoutError(lineno, "no quadrants found");
  finish_block(lineno);
  return out;
}

inline std::array<QuadrantLayout, 4> require_four(const std::vector<QuadrantLayout>& layouts) {
  if (layouts.size() != 4)
    throw LayoutError(0, "expected exactly 4 quadrants, found " + std::to_string(layouts.size()));
  return {layouts[0], layouts[1], layouts[2], layouts[3]};
}

inline std::array<QuadrantLayout, 4> load_layouts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LayoutError(0, "cannot open layout file '" + path + "'");
  return require_four(parse_layouts(in));
}

inline void write_layouts(std::ostream& out, std::span<const QuadrantLayout> layouts) {
  for (std::size_t i = 0; i < layouts.size(); ++i) {
    if (i) out << '\n';
    out << "# quadrant " << i << '\n';
    for (int r = 0; r < kQuadrantSize; ++r) {
      for (int c = 0; c < kQuadrantSize; ++c) out << (layouts[i].reward_cell == Cell{r, c} ? 'R' : '.');
      out << '\n';
    }
    for (const Edge& e : layouts[i].walls)
      out << "WALL " << e.a.row << ' ' << e.a.col << ' ' << e.b.row << ' ' << e.b.col << '\n';
  }
}

// Shipped default quadrants. Quadrant 0's reward pocket opens on two sides, so
// cells two steps out have two equally short routes in.
inline constexpr const char* kDefaultLayoutText = R"(# Default quadrant layouts (5x5 each).
# quadrant 0
.....
.R...
.....
.....
.....
WALL 0 1 1 1
WALL 1 0 1 1
WALL 2 2 2 3
WALL 3 1 3 2
WALL 3 2 4 2
WALL 0 3 1 3
WALL 1 3 1 4

# quadrant 1
.....
.R...
.....
.....
.....
WALL 1 1 1 2
WALL 1 1 2 1
WALL 0 2 0 3
WALL 2 2 3 2
WALL 2 3 3 3
WALL 3 0 3 1
WALL 4 3 4 4

# quadrant 2
.....
..R..
.....
.....
.....
WALL 1 2 1 3
WALL 1 2 2 2
WALL 0 1 1 1
WALL 2 0 2 1
WALL 3 2 3 3
WALL 3 3 4 3
WALL 2 4 3 4

# quadrant 3
.....
.R...
.....
.....
.....
WALL 0 1 1 1
WALL 1 1 1 2
WALL 2 2 2 3
WALL 1 3 2 3
WALL 3 1 4 1
WALL 3 3 3 4
)";

inline std::array<QuadrantLayout, 4> default_layouts() {
  std::istringstream in(kDefaultLayoutText);
  return require_four(parse_layouts(in));
}

}  // namespace sociallearn
