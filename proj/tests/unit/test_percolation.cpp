#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"

#include "tessperc/percolation.hpp"

using namespace tessperc;
using namespace tessperc::perc;
using tess::LatticeKind;

namespace {

ExperimentSpec voronoi_spec(double half, std::uint64_t seed) {
  ExperimentSpec s;
  s.window = Window{{-half, -half}, {half, half}};
  s.seed = seed;
  return s;
}

ExperimentSpec lattice_spec(LatticeKind k, double half, std::uint64_t seed) {
  ExperimentSpec s = voronoi_spec(half, seed);
  s.source.kind = SourceKind::lattice;
  s.source.lattice = k;
  s.source.random_shift = true;
  return s;
}

//! Grid cells centered at integers in [-h, h]^2, indexed like the lattice builder output.
tess::Tessellation unit_grid(int h) {
  const double e = h + 0.5;
  return tess::build_lattice_tessellation(LatticeKind::square, 1.0, {0.5, 0.5}, Window{{-e, -e}, {e, e}});
}

std::uint32_t cell_at(const tess::Tessellation& t, int i, int j) {
  return *tess::locate(t, {static_cast<double>(i), static_cast<double>(j)});
}

std::size_t bfs_components(const tess::AdjacencyGraph& g, const Coloring& c, const RectView& v) {
  std::vector<char> seen(g.size(), 0);
  std::size_t n = 0;
  for (auto start : v.cells) {
    if (seen[start] || !c.black(start)) continue;
    ++n;
    std::vector<std::uint32_t> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
      auto x = stack.back();
      stack.pop_back();
      for (auto w : g.neighbors[x])
        if (!seen[w] && c.black(w) && v.local[w] >= 0) {
          seen[w] = 1;
          stack.push_back(w);
        }
    }
  }
  return n;
}

}  // namespace

TEST_CASE("coloring thresholds and fixed colorings") {
  const auto t = unit_grid(2);
  Stream s(1, 0, StreamTag::coloring);
  const auto c = color(t, 0.3, s);
  REQUIRE(c.uniforms.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(c.black(i) == (c.uniforms[i] < 0.3));
  CHECK(c.at(0.0).black_count() == 0);
  CHECK(c.at(1.0).black_count() == t.size());
  const auto f = fixed_coloring({true, false, true});
  CHECK(f.black(0));
  CHECK_FALSE(f.black(1));
  CHECK(f.black_count() == 2);
}

TEST_CASE("union-find agrees with BFS component counts") {
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    const auto t = voronoi_spec(10, 2).source.build(Window{{-10, -10}, {10, 10}}, 2, rep);
    Stream s = coloring_stream(2, rep);
    const auto c = color(t, 0.5, s);
    for (auto mode : {tess::Adjacency::face, tess::Adjacency::star}) {
      const auto lab = black_clusters(t, t.graph(mode), c, t.core_window);
      const auto view = restrict_to(t, t.core_window, mode);
      CHECK(lab.clusters.size() == bfs_components(t.graph(mode), c, view));
      std::size_t total = 0;
      for (const auto& cl : lab.clusters) total += cl.size;
      std::size_t black = 0;
      for (auto v : view.cells) black += c.black(v) ? 1 : 0;
      CHECK(total == black);
    }
  }
}

TEST_CASE("restriction of the unit grid to a rectangle") {
  const auto t = unit_grid(4);
  const auto v = restrict_to(t, Window{{-1.5, -0.5}, {1.5, 1.5}}, tess::Adjacency::face);
  CHECK(v.cells.size() == 6);
  CHECK(v.edges.size() == 7);
  const auto s = restrict_to(t, Window{{-1.5, -0.5}, {1.5, 1.5}}, tess::Adjacency::star);
  CHECK(s.edges.size() == 11);
  std::size_t left = 0;
  for (auto m : v.sides) left += (m & kLeft) ? 1 : 0;
  CHECK(left == 2);
}

TEST_CASE("dichotomy: exactly one of black face H-crossing and white star V-crossing") {
  for (std::uint64_t rep = 0; rep < 30; ++rep) {
    const auto spec = voronoi_spec(10, 3);
    const auto t = spec.source.build(spec.window, spec.seed, rep);
    Stream s = coloring_stream(spec.seed, rep);
    const auto c = color(t, 0.5, s);
    const bool h = crossing(t, c, {spec.window, Direction::horizontal, Color::black, tess::Adjacency::face});
    const bool v = crossing(t, c, {spec.window, Direction::vertical, Color::white, tess::Adjacency::star});
    CHECK(h != v);
  }
  for (std::uint64_t rep = 0; rep < 30; ++rep) {
    const auto spec = lattice_spec(LatticeKind::square, 8, 4);
    const auto t = spec.source.build(spec.window, spec.seed, rep);
    Stream s = coloring_stream(spec.seed, rep);
    const auto c = color(t, 0.59, s);
    const bool h = crossing(t, c, {spec.window, Direction::horizontal, Color::black, tess::Adjacency::face});
    const bool v = crossing(t, c, {spec.window, Direction::vertical, Color::white, tess::Adjacency::star});
    CHECK(h != v);
  }
}

TEST_CASE("color symmetry: white at p is black at 1 - p with flipped uniforms") {
  const auto spec = voronoi_spec(8, 5);
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const auto t = spec.source.build(spec.window, spec.seed, rep);
    Stream s = coloring_stream(spec.seed, rep);
    const auto c = color(t, 0.45, s);
    Coloring flipped{c.uniforms, 0.55};
    for (auto& u : flipped.uniforms) u = 1.0 - u;
    for (auto dir : {Direction::horizontal, Direction::vertical}) {
      const bool w = crossing(t, c, {spec.window, dir, Color::white, tess::Adjacency::face});
      const bool b = crossing(t, flipped, {spec.window, dir, Color::black, tess::Adjacency::face});
      CHECK(w == b);
    }
  }
}

TEST_CASE("crossing thresholds agree with direct crossings") {
  const auto spec = voronoi_spec(8, 6);
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    const auto t = spec.source.build(spec.window, spec.seed, rep);
    Stream s = coloring_stream(spec.seed, rep);
    const auto c = color(t, 0.0, s);
    const auto view = restrict_to(t, spec.window, tess::Adjacency::face);
    const double th = crossing_threshold(view, c.uniforms, Direction::horizontal);
    for (double p : {0.3, 0.45, 0.5, 0.55, 0.7}) CHECK(crossing(view, c.at(p), Direction::horizontal, Color::black) == (p > th));
  }
}

TEST_CASE("coupled crossing indicators are monotone in p") {
  const auto spec = voronoi_spec(8, 7);
  const auto curve = estimate_crossing_curve(spec, {spec.window, Direction::horizontal, Color::black, tess::Adjacency::face},
                                             {0.2, 0.4, 0.5, 0.6, 0.8}, 60);
  for (const auto& row : curve.indicators)
    for (std::size_t k = 1; k < row.size(); ++k) CHECK(row[k] >= row[k - 1]);
  for (std::size_t k = 1; k < curve.results.size(); ++k)
    CHECK(curve.results[k].hits.successes >= curve.results[k - 1].hits.successes);
  const auto ends = estimate_crossing_curve(spec, {spec.window, Direction::horizontal, Color::black, tess::Adjacency::face},
                                            {0.0, 1.0}, 50);
  CHECK(ends.results[0].estimate() == 0.0);
  CHECK(ends.results[1].estimate() == 1.0);
}

TEST_CASE("FKG: horizontal and vertical black crossings are positively correlated") {
  const auto spec = voronoi_spec(6, 8);
  std::vector<std::pair<bool, bool>> pairs;
  for (std::uint64_t rep = 0; rep < 600; ++rep) {
    const auto t = spec.source.build(spec.window, spec.seed, rep);
    Stream s = coloring_stream(spec.seed, rep);
    const auto c = color(t, 0.5, s);
    pairs.emplace_back(crossing(t, c, {spec.window, Direction::horizontal, Color::black, tess::Adjacency::face}),
                       crossing(t, c, {spec.window, Direction::vertical, Color::black, tess::Adjacency::face}));
  }
  double a = 0, b = 0, ab = 0;
  for (auto [x, y] : pairs) {
    a += x;
    b += y;
    ab += x && y;
  }
  const double n = static_cast<double>(pairs.size());
  const double cov = ab / n - (a / n) * (b / n);
  CHECK(cov > -3.0 * 0.25 / std::sqrt(n));
  CHECK(cov > 0.0);
}

TEST_CASE("replicate failures: an undersized buffer exceeds the failure budget") {
  ExperimentSpec spec = voronoi_spec(6, 9);
  spec.source.buffer = 0.05;
  CHECK_THROWS_AS(run_replicates(spec, 20, [](const tess::Tessellation& t, std::size_t) { return t.size(); }),
                  ReplicateBudgetError);
}

TEST_CASE("theta curve endpoints and decrease") {
  const auto spec = voronoi_spec(12, 10);
  const auto zero = estimate_theta(spec, 0.0, {2, 5}, 20);
  CHECK(zero.results[0].estimate() == 0.0);
  const auto one = estimate_theta(spec, 1.0, {2, 5, 10}, 20);
  for (const auto& r : one.results) CHECK(r.estimate() == 1.0);
  const auto mid = estimate_theta(spec, 0.4, {2, 5, 10}, 100);
  for (const auto& row : mid.indicators)
    for (std::size_t k = 1; k < row.size(); ++k) CHECK(row[k] <= row[k - 1]);
  CHECK_THROWS_AS(estimate_theta(spec, 0.5, {20}, 20), ParameterError);
}

TEST_CASE("bisection over synthetic thresholds") {
  std::vector<double> th(400);
  for (std::size_t i = 0; i < th.size(); ++i) th[i] = 0.3 + 0.1 * (static_cast<double>(i) / 399.0 - 0.5);
  const auto est = bisect_thresholds(th, 0.02, 24);
  CHECK(est.lo <= 0.3);
  CHECK(est.hi >= 0.3);
  CHECK(est.hi - est.lo <= 0.06);
  CHECK_FALSE(est.flagged);
  CHECK_THROWS_AS(bisect_thresholds(th, 0.001, 24), ParameterError);
}

TEST_CASE("spanning cluster counts at the extremes") {
  const auto t = unit_grid(5);
  const auto view = restrict_to(t, t.core_window, tess::Adjacency::face);
  CHECK(spanning_cluster_count(view, fixed_coloring(std::vector<bool>(t.size(), true))) == 1);
  CHECK(spanning_cluster_count(view, fixed_coloring(std::vector<bool>(t.size(), false))) == 0);
  // Two black rows separated by a white row: two spanning clusters.
  std::vector<bool> rows(t.size(), false);
  for (int i = -5; i <= 5; ++i) {
    rows[cell_at(t, i, -2)] = true;
    rows[cell_at(t, i, 2)] = true;
  }
  CHECK(spanning_cluster_count(view, fixed_coloring(rows)) == 2);
  const auto h = count_spanning_clusters(voronoi_spec(8, 11), 1.0, Window{{-8, -8}, {8, 8}}, 100);
  CHECK(h.counts.at(1) == 100);
  CHECK(h.at_least(2).successes == 0);
}

TEST_CASE("trifurcation fixture: a black plus with three arms") {
  const auto t = unit_grid(2);
  std::vector<bool> black(t.size(), false);
  // Index (a, b) in 0..4 maps to center (a - 2, b - 2).
  for (auto [a, b] : {std::pair{2, 2}, {1, 2}, {3, 2}, {2, 1}, {2, 3}, {0, 2}, {4, 2}, {2, 4}})
    black[cell_at(t, a - 2, b - 2)] = true;
  const auto r = find_trifurcations(t, fixed_coloring(black), 1, 1.5, t.core_window);
  CHECK(r.candidates == 1);
  CHECK(r.count == 1);
  CHECK(r.density == doctest::Approx(1.0 / 25.0));
  black[cell_at(t, 0, 2)] = false;
  CHECK(find_trifurcations(t, fixed_coloring(black), 1, 1.5, t.core_window).count == 0);
}

TEST_CASE("ggr diagnostics: no two-cluster sites at p = 0 or 1, mean degree about 6") {
  const auto spec = voronoi_spec(8, 12);
  for (double p : {0.0, 1.0}) {
    const auto g = ggr_diagnostics(spec, p, 4, 10);
    for (const auto& m : g.g1) CHECK(m.mean == 0.0);
    CHECK(g.g2[4].mean == doctest::Approx(6.0).epsilon(0.1));
  }
}

TEST_CASE("crossing recursion is trivial at p = 1") {
  ExperimentSpec spec = voronoi_spec(1, 13);
  spec.window = Window{{0, 0}, {18, 6}};
  const auto r = verify_crossing_recursion(spec, 1.0, 2.0, 20);
  CHECK(r.lhs.successes == 0);
  CHECK(r.rhs == 0.0);
  CHECK(r.holds);
}

TEST_CASE("crossing recursion is consistent with its union bound") {
  ExperimentSpec spec = voronoi_spec(1, 14);
  spec.window = Window{{0, 0}, {27, 9}};
  const auto r = verify_crossing_recursion(spec, 0.6, 3.0, 100);
  // LHS implies both strips fail, each strip failure implies a chain failure.
  CHECK(r.lhs.successes <= r.both_strips.successes);
  for (int s = 0; s < 2; ++s) CHECK(r.strip[s].successes <= r.chain_union[s].successes);
}
