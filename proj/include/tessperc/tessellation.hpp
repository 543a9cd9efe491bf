#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "tessperc/geometry.hpp"
#include "tessperc/point_process.hpp"

namespace tessperc::tess {

enum class Adjacency { face, star };
std::string adjacency_name(Adjacency a);
Adjacency adjacency_from_name(const std::string& name);

struct Cell {
  std::uint32_t id = 0;
  Vec2 center;
  Polygon polygon;  // CCW
  double diameter = 0.0;
  //! Side mask (kLeft | kRight | kBottom | kTop) of core-window sides this cell meets.
  unsigned touches_core_boundary = 0;
  //! Index into the generator configuration, or -1 for lattice cells.
  std::int64_t generator = -1;
};

/// Closure intersection of two cells: the segment [p, q] (p == q for a corner contact).
struct Contact {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  Vec2 p;
  Vec2 q;
  double length = 0.0;
};

struct AdjacencyGraph {
  Adjacency mode = Adjacency::face;
  std::vector<std::vector<std::uint32_t>> neighbors;
  std::uint32_t root = 0;

  std::size_t size() const { return neighbors.size(); }
  std::size_t edge_count() const;
};

/// Bucket index of cell bounding boxes for point location and pair queries.
class CellIndex {
 public:
  CellIndex() = default;
  CellIndex(const std::vector<Cell>& cells, const Window& extent, double bucket);

  template <class Fn>
  void for_each_near(Vec2 lo, Vec2 hi, Fn&& fn) const {
    if (nx_ == 0) return;
    const auto x0 = bx(lo.x), x1 = bx(hi.x), y0 = by(lo.y), y1 = by(hi.y);
    for (auto iy = y0; iy <= y1; ++iy)
      for (auto ix = x0; ix <= x1; ++ix) {
        const auto b = static_cast<std::size_t>(iy * nx_ + ix);
        for (auto k = start_[b]; k < start_[b + 1]; ++k) fn(items_[k]);
      }
  }

 private:
  std::int64_t bx(double x) const;
  std::int64_t by(double y) const;

  Window extent_;
  double bucket_ = 1.0;
  std::int64_t nx_ = 0;
  std::int64_t ny_ = 0;
  std::vector<std::uint32_t> start_;
  std::vector<std::uint32_t> items_;
};

/// Cells meeting a core window, with both adjacency graphs. Immutable after construction.
struct Tessellation {
  std::vector<Cell> cells;
  Window core_window;
  double buffer_width = 0.0;
  std::shared_ptr<const pp::PointConfiguration> generators;
  //! Absolute geometric tolerance: 1e-9 times the core-window diagonal.
  double tol = 0.0;
  //! One entry per pair of cells with intersecting closures, a < b.
  std::vector<Contact> contacts;
  //! contact_index[c] lists indices into `contacts` involving cell c.
  std::vector<std::vector<std::uint32_t>> contact_index;
  AdjacencyGraph face;
  AdjacencyGraph star;
  CellIndex index;

  std::size_t size() const { return cells.size(); }
  const AdjacencyGraph& graph(Adjacency a) const { return a == Adjacency::face ? face : star; }
  std::uint32_t root() const { return face.root; }
};

inline double tolerance_for(const Window& core) { return 1e-9 * core.diagonal(); }

/// Voronoi cells of `points` (clipped to the sampling window points.window) that meet the core
/// window. With `validate`, a cell meeting the core window whose boundary reaches the sampling
/// window raises EdgeEffectError; without it such cells are kept clipped.
Tessellation build_voronoi(const pp::PointConfiguration& points, const Window& core_window, double buffer_width,
                           bool validate = true);

enum class LatticeKind { square, hexagonal };
std::string lattice_name(LatticeKind k);
LatticeKind lattice_from_name(const std::string& name);

/// Square cells of side `spacing`, or regular hexagons whose centers are `spacing` apart
/// (pointy-top, horizontal rows), translated by `shift`. Cells meeting the core window with positive
/// area are kept.
Tessellation build_lattice_tessellation(LatticeKind kind, double spacing, Vec2 shift, const Window& core_window);

//! Wraps prebuilt cells (ids are reassigned in order) and computes contacts, graphs and the root.
Tessellation from_cells(std::vector<Cell> cells, const Window& core_window, double buffer_width = 0.0);

//! Recomputes contacts, graphs, index and zero cell from `cells` and `core_window`.
void finalize(Tessellation& tess);

AdjacencyGraph build_adjacency(const Tessellation& tess, Adjacency mode);

//! Cell containing the origin; ties go to the lexicographically smallest center.
std::uint32_t zero_cell(const Tessellation& tess);
//! Cell containing x (same tie rule); nullopt if no kept cell contains it.
std::optional<std::uint32_t> locate(const Tessellation& tess, Vec2 x);

struct Ball {
  //! Members ordered by distance from the root, then id.
  std::vector<std::uint32_t> members;
  //! layer_end[k] = number of members at distance <= k.
  std::vector<std::size_t> layer_end;
  //! Some member touches the core-window boundary.
  bool truncated = false;
};

Ball graph_ball(const AdjacencyGraph& g, const Tessellation& tess, std::uint32_t root, std::size_t n);
//! Vertices at graph distance exactly 1 from `set`.
std::vector<std::uint32_t> outer_boundary(const AdjacencyGraph& g, const std::vector<std::uint32_t>& set);
//! Members of `set` with a neighbor outside it.
std::vector<std::uint32_t> inner_boundary(const AdjacencyGraph& g, const std::vector<std::uint32_t>& set);

struct AnimalCounts {
  //! counts[k] = number of connected vertex sets of size k + 1 containing the root.
  std::vector<std::uint64_t> counts;
  bool complete = true;
  //! First size whose count may be partial when the budget ran out; 0 when complete.
  std::size_t cutoff = 0;
  std::uint64_t nodes = 0;
};

AnimalCounts enumerate_animals(const AdjacencyGraph& g, std::uint32_t root, std::size_t n_max,
                               std::uint64_t node_budget = 50'000'000);

/// Redelmeier enumeration: calls on(animal) once for every connected set of size <= n_max that
/// contains `root` and avoids vertices with blocked[v] != 0. `blocked` is used as scratch and
/// restored. Returns false when `node_budget` animals were visited before finishing.
template <class Nbrs, class OnAnimal>
bool visit_animals(Nbrs&& nbrs, std::uint32_t root, std::size_t n_max, std::vector<char>& blocked,
                   std::uint64_t node_budget, OnAnimal&& on) {
  if (n_max == 0 || blocked[root]) return true;
  std::vector<std::uint32_t> animal;
  std::uint64_t nodes = 0;
  bool ok = true;
  auto rec = [&](auto&& self, std::vector<std::uint32_t> untried) -> void {
    while (!untried.empty() && ok) {
      const auto v = untried.back();
      untried.pop_back();
      animal.push_back(v);
      if (++nodes > node_budget) {
        ok = false;
        animal.pop_back();
        return;
      }
      on(static_cast<const std::vector<std::uint32_t>&>(animal));
      if (animal.size() < n_max) {
        std::vector<std::uint32_t> next = untried;
        const std::size_t first_new = next.size();
        nbrs(v, [&](std::uint32_t w) {
          if (!blocked[w]) {
            blocked[w] = 1;
            next.push_back(w);
          }
        });
        self(self, next);
        for (std::size_t k = first_new; k < next.size(); ++k) blocked[next[k]] = 0;
      }
      animal.pop_back();
    }
  };
  blocked[root] = 1;
  rec(rec, {root});
  blocked[root] = 0;
  return ok;
}

struct GrowthProfile {
  //! sizes[n] = |B_n| for n = 0..n_max.
  std::vector<std::size_t> sizes;
  //! Least-squares slope of log |B_n| against log n over the upper half n in [ceil(n_max/2), n_max].
  double exponent = 0.0;
  bool truncated = false;
};

GrowthProfile ball_growth_profile(const AdjacencyGraph& g, const Tessellation& tess, std::uint32_t root,
                                  std::size_t n_max);
//! Same fit from raw sizes.
double growth_exponent(const std::vector<std::size_t>& sizes);

nlohmann::json to_json(const Tessellation& tess);

}  // namespace tessperc::tess
