#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"

#include "tessperc/point_process.hpp"
#include "tessperc/tessellation.hpp"

using namespace tessperc;
using namespace tessperc::tess;

namespace {

Tessellation poisson_voronoi(const Window& core, std::uint64_t seed, std::uint64_t rep = 0, double buffer = 5.0) {
  Stream s(seed, rep, StreamTag::points);
  const auto cfg = pp::sample_poisson(1.0, core.expanded(buffer), s);
  return build_voronoi(cfg, core, buffer);
}

std::size_t nearest_generator(const pp::PointConfiguration& cfg, Vec2 x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < cfg.size(); ++i)
    if (dist(cfg.points[i], x) < dist(cfg.points[best], x)) best = i;
  return best;
}

using Coord = std::pair<int, int>;

//! Naive oracle: grow every animal on Z^2 one site at a time and deduplicate as sorted sets.
std::vector<std::uint64_t> naive_z2_animals(int n_max) {
  std::set<std::vector<Coord>> level{{{0, 0}}};
  std::vector<std::uint64_t> out{1};
  for (int n = 2; n <= n_max; ++n) {
    std::set<std::vector<Coord>> next;
    for (const auto& a : level)
      for (const auto& [x, y] : a)
        for (auto [dx, dy] : {Coord{1, 0}, Coord{-1, 0}, Coord{0, 1}, Coord{0, -1}}) {
          const Coord c{x + dx, y + dy};
          if (std::find(a.begin(), a.end(), c) != a.end()) continue;
          auto b = a;
          b.insert(std::lower_bound(b.begin(), b.end(), c), c);
          next.insert(std::move(b));
        }
    out.push_back(next.size());
    level = std::move(next);
  }
  return out;
}

//! Naive oracle on an arbitrary graph: same growth-and-dedupe scheme on vertex ids.
std::vector<std::uint64_t> naive_graph_animals(const AdjacencyGraph& g, std::uint32_t root, int n_max) {
  std::set<std::vector<std::uint32_t>> level{{root}};
  std::vector<std::uint64_t> out{1};
  for (int n = 2; n <= n_max; ++n) {
    std::set<std::vector<std::uint32_t>> next;
    for (const auto& a : level)
      for (auto v : a)
        for (auto w : g.neighbors[v]) {
          if (std::binary_search(a.begin(), a.end(), w)) continue;
          auto b = a;
          b.insert(std::lower_bound(b.begin(), b.end(), w), w);
          next.insert(std::move(b));
        }
    out.push_back(next.size());
    level = std::move(next);
  }
  return out;
}

void check_graph_invariants(const Tessellation& t) {
  for (const auto* g : {&t.face, &t.star})
    for (std::uint32_t v = 0; v < g->size(); ++v)
      for (auto w : g->neighbors[v]) {
        REQUIRE(w != v);
        const auto& back = g->neighbors[w];
        REQUIRE(std::find(back.begin(), back.end(), v) != back.end());
      }
  for (std::uint32_t v = 0; v < t.size(); ++v)
    for (auto w : t.face.neighbors[v]) {
      const auto& s = t.star.neighbors[v];
      REQUIRE(std::find(s.begin(), s.end(), w) != s.end());
    }
}

bool connected(const AdjacencyGraph& g) {
  std::vector<char> seen(g.size(), 0);
  std::vector<std::uint32_t> stack{0};
  seen[0] = 1;
  std::size_t n = 1;
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (auto w : g.neighbors[v])
      if (!seen[w]) {
        seen[w] = 1;
        ++n;
        stack.push_back(w);
      }
  }
  return n == g.size();
}

}  // namespace

TEST_CASE("voronoi cells are convex, contain their centers, and have correct diameters") {
  const auto t = poisson_voronoi(Window{{0, 0}, {20, 20}}, 1);
  for (const auto& c : t.cells) {
    REQUIRE(is_convex_ccw(c.polygon, t.tol));
    REQUIRE(contains_point(c.polygon, c.center, t.tol));
    REQUIRE(c.diameter == doctest::Approx(polygon_diameter(c.polygon)));
    REQUIRE(c.center == t.generators->points[static_cast<std::size_t>(c.generator)]);
  }
  check_graph_invariants(t);
  CHECK(connected(t.face));
}

TEST_CASE("nearest-generator property at random points") {
  const Window core{{0, 0}, {15, 15}};
  Stream s(2, 0, StreamTag::points);
  const auto cfg = pp::sample_poisson(1.0, core.expanded(5), s);
  const auto t = build_voronoi(cfg, core, 5);
  Stream q(2, 0, StreamTag::test);
  for (int k = 0; k < 1000; ++k) {
    const Vec2 x{q.uniform(0, 15), q.uniform(0, 15)};
    const auto c = locate(t, x);
    REQUIRE(c);
    CHECK(static_cast<std::size_t>(t.cells[*c].generator) == nearest_generator(cfg, x));
  }
}

TEST_CASE("coverage and disjointness at random points") {
  const auto t = poisson_voronoi(Window{{-10, -10}, {10, 10}}, 3);
  Stream q(3, 0, StreamTag::test);
  int tested = 0;
  while (tested < 1000) {
    const Vec2 x{q.uniform(-10, 10), q.uniform(-10, 10)};
    int inside = 0;
    bool near_boundary = false;
    for (const auto& c : t.cells) {
      const double d = boundary_signed_distance(c.polygon, x);
      if (std::abs(d) < 1e-9) near_boundary = true;
      if (d < 0) ++inside;
    }
    if (near_boundary) continue;
    REQUIRE(inside == 1);
    ++tested;
  }
}

TEST_CASE("voronoi area covers the core window") {
  const Window core{{0, 0}, {12, 9}};
  const auto t = poisson_voronoi(core, 4);
  double a = 0;
  for (const auto& c : t.cells) a += area(clip_to_window(c.polygon, core));
  CHECK(a == doctest::Approx(core.area()).epsilon(1e-9));
}

TEST_CASE("translation covariance") {
  const Window core{{0, 0}, {10, 10}};
  const Vec2 shift{3.25, -7.5};
  Stream s(5, 0, StreamTag::points);
  const auto cfg = pp::sample_poisson(1.0, core.expanded(5), s);
  pp::PointConfiguration moved{{}, cfg.window.translated(shift)};
  for (auto p : cfg.points) moved.points.push_back(p + shift);
  const auto a = build_voronoi(cfg, core, 5);
  const auto b = build_voronoi(moved, core.translated(shift), 5);
  REQUIRE(a.size() == b.size());
  std::map<std::int64_t, const Cell*> by_gen;
  for (const auto& c : b.cells) by_gen[c.generator] = &c;
  for (const auto& c : a.cells) {
    REQUIRE(by_gen.count(c.generator));
    const auto& d = *by_gen[c.generator];
    REQUIRE(c.polygon.size() == d.polygon.size());
    for (auto v : c.polygon) {
      double best = 1e300;
      for (auto w : d.polygon) best = std::min(best, dist(v + shift, w));
      CHECK(best < 1e-9 * core.diagonal());
    }
  }
}

TEST_CASE("unit grid generators give unit squares") {
  pp::PointConfiguration cfg{{}, Window{{-6, -6}, {6, 6}}};
  for (int i = -5; i <= 5; ++i)
    for (int j = -5; j <= 5; ++j) cfg.points.push_back({static_cast<double>(i), static_cast<double>(j)});
  const auto t = build_voronoi(cfg, Window{{-2, -2}, {2, 2}}, 3);
  for (const auto& c : t.cells) CHECK(area(c.polygon) == doctest::Approx(1.0));
  // Cell at the origin: 4 face neighbors, 8 star neighbors through the corner contacts.
  const auto z = zero_cell(t);
  CHECK(t.cells[z].center == Vec2{0, 0});
  CHECK(t.face.neighbors[z].size() == 4);
  CHECK(t.star.neighbors[z].size() == 8);
}

TEST_CASE("three generators forming a triangle") {
  pp::PointConfiguration cfg{{{-1, -1}, {1, -1}, {0, 1}}, Window{{-3, -3}, {3, 3}}};
  const auto t = build_voronoi(cfg, Window{{-0.5, -0.5}, {0.5, 0.5}}, 2.5, false);
  CHECK(t.size() == 3);
  Stream q(1, 0, StreamTag::test);
  for (int k = 0; k < 500; ++k) {
    const Vec2 x{q.uniform(-0.5, 0.5), q.uniform(-0.5, 0.5)};
    const auto c = locate(t, x);
    REQUIRE(c);
    CHECK(static_cast<std::size_t>(t.cells[*c].generator) == nearest_generator(cfg, x));
  }
  CHECK_THROWS_AS(build_voronoi(cfg, Window{{-0.5, -0.5}, {0.5, 0.5}}, 2.5, true), EdgeEffectError);
}

TEST_CASE("degenerate generator sets are construction errors") {
  pp::PointConfiguration line{{{0, 0}, {1, 1}, {2, 2}, {3, 3}}, Window{{-5, -5}, {5, 5}}};
  CHECK_THROWS_AS(build_voronoi(line, Window{{0, 0}, {1, 1}}, 4, false), ConstructionError);
  pp::PointConfiguration two{{{0, 0}, {1, 0}}, Window{{-5, -5}, {5, 5}}};
  CHECK_THROWS_AS(build_voronoi(two, Window{{0, 0}, {1, 1}}, 4, false), ConstructionError);
}

TEST_CASE("too small a buffer raises an edge-effect error") {
  const Window core{{0, 0}, {10, 10}};
  Stream s(6, 0, StreamTag::points);
  const auto cfg = pp::sample_poisson(0.05, core.expanded(0.2), s);
  CHECK_THROWS_AS(build_voronoi(cfg, core, 0.2), EdgeEffectError);
}

TEST_CASE("poisson-voronoi mean interior face degree is about 6") {
  const Window core{{0, 0}, {30, 30}};
  double sum = 0;
  std::size_t n = 0;
  int extra_star = 0;
  for (std::uint64_t rep = 0; rep < 2; ++rep) {
    const auto t = poisson_voronoi(core, 7, rep);
    for (const auto& c : t.cells) {
      if (c.touches_core_boundary) continue;
      sum += static_cast<double>(t.face.neighbors[c.id].size());
      ++n;
      extra_star += static_cast<int>(t.star.neighbors[c.id].size() - t.face.neighbors[c.id].size());
    }
  }
  CHECK(n >= 1000);
  CHECK(std::abs(sum / static_cast<double>(n) - 6.0) < 0.1);
  // Generic position: face and star graphs coincide.
  CHECK(extra_star == 0);
}

TEST_CASE("square lattice cells, degrees and zero-cell tie rule") {
  const auto t = build_lattice_tessellation(LatticeKind::square, 1.0, {0, 0}, Window{{-5, -5}, {5, 5}});
  CHECK(t.size() == 100);
  for (const auto& c : t.cells) {
    const double x = c.center.x - 0.5, y = c.center.y - 0.5;
    CHECK(x == std::floor(x));
    CHECK(y == std::floor(y));
    CHECK(area(c.polygon) == doctest::Approx(1.0));
  }
  check_graph_invariants(t);
  for (const auto& c : t.cells)
    if (!c.touches_core_boundary) {
      CHECK(t.face.neighbors[c.id].size() == 4);
      CHECK(t.star.neighbors[c.id].size() == 8);
    }
  CHECK(t.cells[zero_cell(t)].center == Vec2{-0.5, -0.5});
}

TEST_CASE("hexagonal interior cells have six face neighbors") {
  const auto t = build_lattice_tessellation(LatticeKind::hexagonal, 1.0, {0.1, 0.2}, Window{{-6, -6}, {6, 6}});
  std::size_t interior = 0;
  for (const auto& c : t.cells)
    if (!c.touches_core_boundary) {
      CHECK(t.face.neighbors[c.id].size() == 6);
      CHECK(t.star.neighbors[c.id].size() == 6);
      CHECK(area(c.polygon) == doctest::Approx(std::sqrt(3.0) / 2.0));
      ++interior;
    }
  CHECK(interior > 50);
  check_graph_invariants(t);
}

TEST_CASE("zero cell: shifted lattice and origin outside the core") {
  const auto t = build_lattice_tessellation(LatticeKind::square, 1.0, {0.3, 0.4}, Window{{-3, -3}, {3, 3}});
  const auto& z = t.cells[zero_cell(t)];
  CHECK(z.center.x == doctest::Approx(-0.2));
  CHECK(z.center.y == doctest::Approx(-0.1));
  const auto far = build_lattice_tessellation(LatticeKind::square, 1.0, {0, 0}, Window{{2, 2}, {5, 5}});
  CHECK_THROWS_AS(zero_cell(far), ParameterError);
}

TEST_CASE("generic voronoi zero cell is the nearest generator's cell") {
  Stream s(8, 0, StreamTag::points);
  const Window core{{-8, -8}, {8, 8}};
  const auto cfg = pp::sample_poisson(1.0, core.expanded(5), s);
  const auto t = build_voronoi(cfg, core, 5);
  CHECK(static_cast<std::size_t>(t.cells[zero_cell(t)].generator) == nearest_generator(cfg, {0, 0}));
}

TEST_CASE("graph balls on the square lattice") {
  const auto t = build_lattice_tessellation(LatticeKind::square, 1.0, {0.5, 0.5}, Window{{-20, -20}, {20, 20}});
  const auto root = zero_cell(t);
  CHECK(graph_ball(t.face, t, root, 0).members == std::vector<std::uint32_t>{root});
  for (std::size_t n = 0; n <= 12; ++n) {
    const auto b = graph_ball(t.face, t, root, n);
    CHECK(b.members.size() == 2 * n * n + 2 * n + 1);
    CHECK_FALSE(b.truncated);
    // The outer boundary of B_n is exactly B_{n+1} \ B_n.
    const auto next = graph_ball(t.face, t, root, n + 1);
    std::set<std::uint32_t> ring(next.members.begin(), next.members.end());
    for (auto v : b.members) ring.erase(v);
    auto ob = outer_boundary(t.face, b.members);
    CHECK(std::set<std::uint32_t>(ob.begin(), ob.end()) == ring);
    const auto ib = inner_boundary(t.face, b.members);
    CHECK(ib.size() == (n == 0 ? 1 : 4 * n));
  }
  CHECK(graph_ball(t.face, t, root, 25).truncated);
}

TEST_CASE("growth exponents") {
  const auto t = build_lattice_tessellation(LatticeKind::square, 1.0, {0.5, 0.5}, Window{{-35, -35}, {35, 35}});
  const auto prof = ball_growth_profile(t.face, t, zero_cell(t), 30);
  CHECK_FALSE(prof.truncated);
  CHECK(std::abs(prof.exponent - 2.0) < 0.1);
  std::vector<std::size_t> path;
  for (std::size_t n = 0; n <= 40; ++n) path.push_back(2 * n + 1);
  CHECK(std::abs(growth_exponent(path) - 1.0) < 0.1);
}

TEST_CASE("poisson-voronoi ball growth exponent") {
  const auto t = poisson_voronoi(Window{{-45, -45}, {45, 45}}, 9);
  const auto prof = ball_growth_profile(t.face, t, t.root(), 25);
  CHECK_FALSE(prof.truncated);
  CHECK(prof.exponent >= 1.8);
  CHECK(prof.exponent <= 2.2);
}

TEST_CASE("animal counts on the square lattice match the naive Z^2 oracle") {
  const auto oracle = naive_z2_animals(8);
  CHECK(std::vector<std::uint64_t>(oracle.begin(), oracle.begin() + 4) == std::vector<std::uint64_t>{1, 4, 18, 76});
  const auto t = build_lattice_tessellation(LatticeKind::square, 1.0, {0.5, 0.5}, Window{{-12, -12}, {12, 12}});
  const auto counts = enumerate_animals(t.face, zero_cell(t), 8);
  CHECK(counts.complete);
  CHECK(counts.counts == oracle);
}

TEST_CASE("animal counts match the naive enumerator on small random graphs") {
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    Stream s(10, rep, StreamTag::test);
    AdjacencyGraph g;
    const std::size_t n = 15 + rep * 2;
    g.neighbors.resize(n);
    auto link = [&](std::uint32_t a, std::uint32_t b) {
      if (a == b) return;
      auto& na = g.neighbors[a];
      if (std::find(na.begin(), na.end(), b) != na.end()) return;
      na.push_back(b);
      g.neighbors[b].push_back(a);
    };
    for (std::uint32_t v = 1; v < n; ++v) link(v, static_cast<std::uint32_t>(s.uniform() * v));
    for (std::size_t k = 0; k < n / 2; ++k)
      link(static_cast<std::uint32_t>(s.uniform() * n), static_cast<std::uint32_t>(s.uniform() * n));
    const auto root = static_cast<std::uint32_t>(rep % n);
    const auto counts = enumerate_animals(g, root, 7);
    CHECK(counts.counts == naive_graph_animals(g, root, 7));
  }
}

TEST_CASE("animal counts on a voronoi face graph match the naive enumerator") {
  const auto t = poisson_voronoi(Window{{-4, -4}, {4, 4}}, 12);
  CHECK(enumerate_animals(t.face, t.root(), 6).counts == naive_graph_animals(t.face, t.root(), 6));
  CHECK(enumerate_animals(t.star, t.root(), 6).counts == naive_graph_animals(t.star, t.root(), 6));
}

TEST_CASE("animal counts are monotone and budget overruns are marked") {
  const auto t = build_lattice_tessellation(LatticeKind::square, 1.0, {0.5, 0.5}, Window{{-12, -12}, {12, 12}});
  const auto counts = enumerate_animals(t.face, zero_cell(t), 10);
  for (std::size_t k = 1; k < counts.counts.size(); ++k) CHECK(counts.counts[k] >= counts.counts[k - 1]);
  const auto partial = enumerate_animals(t.face, zero_cell(t), 10, 1000);
  CHECK_FALSE(partial.complete);
  CHECK(partial.cutoff >= 1);
}

TEST_CASE("tessellation json export") {
  const auto t = build_lattice_tessellation(LatticeKind::square, 1.0, {0, 0}, Window{{0, 0}, {2, 2}});
  const auto j = to_json(t);
  REQUIRE(j["cells"].size() == 4);
  CHECK(j["cells"][0].contains("neighbors_face"));
  CHECK(j["cells"][0].contains("neighbors_star"));
  CHECK(j["cells"][0]["polygon"].size() == 4);
  CHECK(j["core_window"]["hi"][0] == 2.0);
}
