#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tessperc/errors.hpp"
#include "tessperc/parallel.hpp"
#include "tessperc/point_process.hpp"
#include "tessperc/rng.hpp"
#include "tessperc/stats.hpp"
#include "tessperc/tessellation.hpp"

namespace tessperc::perc {

using tess::Adjacency;
using tess::Tessellation;

/// Per-cell uniforms with a threshold; cell i is black iff uniforms[i] < p.
struct Coloring {
  std::vector<double> uniforms;
  double p = 0.0;

  bool black(std::size_t i) const { return uniforms[i] < p; }
  //! Same uniforms, new threshold.
  Coloring at(double p_new) const { return {uniforms, p_new}; }
  std::size_t black_count() const;
};

Coloring color(const Tessellation& tess, double p, Stream& stream);
//! Fixed colors: uniform 0 for black cells and 1 for white ones, threshold 1/2.
Coloring fixed_coloring(const std::vector<bool>& black);

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = static_cast<std::uint32_t>(i);
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  //! Returns the surviving root.
  std::uint32_t unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return a;
  }
  std::uint32_t size_of(std::uint32_t x) { return size_[find(x)]; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
};

/// Restriction of a tessellation to a rectangle: the cells whose clipped polygon has positive
/// area, the sides each of them meets, and the contacts that survive clipping.
///
/// Face mode keeps a side or contact when its intersection with the rectangle has positive
/// length; star mode keeps any nonempty intersection.
struct RectView {
  Window rect;
  Adjacency mode = Adjacency::face;
  std::vector<std::uint32_t> cells;
  //! Cell id to local index, -1 when the cell does not meet the rectangle.
  std::vector<std::int32_t> local;
  std::vector<unsigned> sides;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
};

RectView restrict_to(const Tessellation& tess, const Window& rect, Adjacency mode);

enum class Direction { horizontal, vertical };
enum class Color { black, white };

struct CrossingQuery {
  Window rect;
  Direction direction = Direction::horizontal;
  Color color = Color::black;
  Adjacency adjacency = Adjacency::face;
};

inline unsigned start_side(Direction d) { return d == Direction::horizontal ? kLeft : kBottom; }
inline unsigned end_side(Direction d) { return d == Direction::horizontal ? kRight : kTop; }

bool crossing(const Tessellation& tess, const Coloring& coloring, const CrossingQuery& query);
bool crossing(const RectView& view, const Coloring& coloring, Direction dir, Color color);

/// Newman-Ziff style: adds view cells in increasing uniform order and returns the uniform of the
/// cell that completes a black crossing, so crossing at p holds iff p > threshold. +inf when the
/// full view does not cross.
double crossing_threshold(const RectView& view, const std::vector<double>& uniforms, Direction dir);

struct ClusterInfo {
  std::size_t size = 0;
  Window bbox;
  unsigned sides = 0;
};

struct ClusterLabeling {
  //! Per cell id: cluster index, or -1 for cells that are white or do not meet the rectangle.
  std::vector<std::int64_t> label;
  std::vector<ClusterInfo> clusters;
};

/// Components of black cells meeting `rect` under `graph`; side flags use the graph's mode.
ClusterLabeling black_clusters(const Tessellation& tess, const tess::AdjacencyGraph& graph, const Coloring& coloring,
                               const Window& rect);

//! Thrown when more than 1% of replicates fail to build.
class ReplicateBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kFailureBudget = 0.01;

enum class SourceKind { voronoi, lattice };

/// How one replicate's tessellation is produced.
struct TessellationSource {
  SourceKind kind = SourceKind::voronoi;
  pp::ProcessSpec process = pp::ProcessSpec::poisson(1.0);
  //! Voronoi buffer; <= 0 selects 5 / sqrt(intensity).
  double buffer = 0.0;
  tess::LatticeKind lattice = tess::LatticeKind::square;
  double spacing = 1.0;
  bool random_shift = false;

  double effective_buffer() const;
  Tessellation build(const Window& core, std::uint64_t seed, std::uint64_t replicate) const;
  nlohmann::json to_json() const;
};

struct ExperimentSpec {
  TessellationSource source;
  Adjacency adjacency = Adjacency::face;
  Window window{{-15, -15}, {15, 15}};
  std::uint64_t seed = 1;
  int workers = 1;
};

/// Runs fn(tess, replicate) on freshly built tessellations. Replicates whose build throws
/// EdgeEffectError or ConstructionError yield nullopt; more than 1% of them raise
/// ReplicateBudgetError.
template <class Fn>
auto run_replicates(const ExperimentSpec& spec, std::size_t replicates, Fn&& fn) {
  using R = decltype(fn(std::declval<const Tessellation&>(), std::size_t{0}));
  auto out = replicate_map(replicates, spec.workers, [&](std::size_t rep) -> std::optional<R> {
    std::optional<Tessellation> t;
    try {
      t.emplace(spec.source.build(spec.window, spec.seed, rep));
    } catch (const EdgeEffectError&) {
      return std::nullopt;
    } catch (const ConstructionError&) {
      return std::nullopt;
    }
    return fn(*t, rep);
  });
  std::size_t failed = 0;
  for (const auto& r : out) failed += r ? 0 : 1;
  if (static_cast<double>(failed) > kFailureBudget * static_cast<double>(replicates))
    throw ReplicateBudgetError(std::to_string(failed) + " of " + std::to_string(replicates) +
                               " replicates failed to build (budget 1%)");
  return out;
}

//! Coloring stream of a replicate.
inline Stream coloring_stream(std::uint64_t seed, std::uint64_t replicate) {
  return Stream(seed, replicate, StreamTag::coloring);
}

struct PercResult {
  Proportion hits;
  std::size_t failed = 0;
  std::string spec_hash;

  double estimate() const { return hits.estimate(); }
  Interval ci() const { return hits.ci(); }
  std::uint64_t replicates() const { return hits.trials; }
};

/// Crossing indicators over a p-grid with shared uniforms per replicate.
struct CrossingCurve {
  std::vector<double> p;
  std::vector<PercResult> results;
  //! indicators[rep][k]; empty rows for failed replicates.
  std::vector<std::vector<char>> indicators;
};

CrossingCurve estimate_crossing_curve(const ExperimentSpec& spec, const CrossingQuery& query,
                                      const std::vector<double>& p_grid, std::size_t replicates);
PercResult estimate_crossing_prob(const ExperimentSpec& spec, const CrossingQuery& query, double p,
                                  std::size_t replicates);

/// P[the zero cell's black cluster reaches Euclidean distance r from the origin], per radius.
struct ThetaCurve {
  std::vector<double> radii;
  std::vector<PercResult> results;
  std::vector<std::vector<char>> indicators;
};

ThetaCurve estimate_theta(const ExperimentSpec& spec, double p, const std::vector<double>& radii,
                          std::size_t replicates);
//! Largest distance from the origin reached by the black cluster of the zero cell (0 if white).
double zero_cluster_reach(const Tessellation& tess, const tess::AdjacencyGraph& g, const Coloring& coloring);

struct PcProbe {
  double p = 0.0;
  Proportion crossing;
};

struct PcEstimate {
  double lo = 0.0;
  double hi = 1.0;
  //! Probe budget ran out before the tolerance was reached.
  bool flagged = false;
  std::vector<PcProbe> probes;
  std::size_t failed = 0;
};

/// Bisection of the black horizontal crossing probability of spec.window against 1/2. The
/// replicates' crossing thresholds are computed once; every probe reads their empirical
/// distribution, so probes share replicates.
PcEstimate estimate_pc(const ExperimentSpec& spec, double tolerance, std::size_t replicates_per_probe,
                       std::size_t max_probes = 24);
//! Same bisection over precomputed thresholds.
PcEstimate bisect_thresholds(const std::vector<double>& thresholds, double tolerance, std::size_t max_probes);

/// Histogram of the number of black clusters touching both the left and right side of `rect`.
struct SpanningHistogram {
  std::map<std::size_t, std::uint64_t> counts;
  std::uint64_t replicates = 0;
  std::size_t failed = 0;
  std::vector<std::size_t> per_replicate;
  Proportion at_least(std::size_t k) const;
};

std::size_t spanning_cluster_count(const RectView& view, const Coloring& coloring);
SpanningHistogram count_spanning_clusters(const ExperimentSpec& spec, double p, const Window& rect,
                                          std::size_t replicates);

struct TrifurcationResult {
  std::size_t candidates = 0;
  std::size_t skipped = 0;
  std::size_t count = 0;
  double density = 0.0;
  std::vector<Vec2> points;
};

/// Grid points x in 3 r2 Z^2 inside `window` whose r1-ball around Z_x is black, lies in
/// x + [-r2, r2]^2, and whose whitening leaves >= 3 boundary-touching black clusters on its outer
/// boundary.
TrifurcationResult find_trifurcations(const Tessellation& tess, const Coloring& coloring, std::size_t r1, double r2,
                                      const Window& window, Adjacency adjacency = Adjacency::face);

struct GgrCurves {
  //! Per n = 0..n_max: mean over replicates of the B_n averages.
  std::vector<MeanEstimate> g1;
  std::vector<MeanEstimate> g2;
  std::size_t truncated = 0;
  std::size_t failed = 0;
};

//! L_v: v has neighbors in two distinct black clusters that touch the core-window boundary.
std::vector<char> adjacent_to_two_boundary_clusters(const Tessellation& tess, const tess::AdjacencyGraph& g,
                                                    const Coloring& coloring);
GgrCurves ggr_diagnostics(const ExperimentSpec& spec, double p, std::size_t n_max, std::size_t replicates);

/// Estimates of the rectangle complements in the 9t x 3t crossing chain.
struct RecursionReport {
  double t = 0.0;
  Proportion lhs;                  // H([0,9t]x[0,3t])^c
  Proportion both_strips;          // H(bottom strip)^c and H(top strip)^c
  std::array<Proportion, 2> strip; // H(9t x t strip)^c, bottom and top
  std::array<Proportion, 2> chain_union;
  std::array<std::array<Proportion, 4>, 2> h_rects;  // H(3t x t)^c, four per strip
  std::array<std::array<Proportion, 3>, 2> v_rects;  // V(t x t)^c, three per strip
  Proportion h_3t_by_t;            // H([0,3t]x[0,t])^c
  Proportion v_t_by_t;             // V([0,t]x[0,t])^c
  Proportion v_t_by_3t;            // V([0,t]x[0,3t])^c
  double rhs = 0.0;                // (7 max)^2
  double slack = 0.0;              // 3 * joint CI width
  double margin = 0.0;             // rhs + slack - lhs
  bool holds = false;
  std::size_t failed = 0;
};

RecursionReport verify_crossing_recursion(const ExperimentSpec& spec, double p, double t, std::size_t replicates);

}  // namespace tessperc::perc
