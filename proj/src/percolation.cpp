#include "tessperc/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tessperc::perc {

std::size_t Coloring::black_count() const {
  return static_cast<std::size_t>(std::count_if(uniforms.begin(), uniforms.end(), [&](double u) { return u < p; }));
}

Coloring color(const Tessellation& tess, double p, Stream& stream) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("p must lie in [0, 1]");
  Coloring c;
  c.p = p;
  c.uniforms.resize(tess.size());
  for (auto& u : c.uniforms) u = stream.uniform();
  return c;
}

Coloring fixed_coloring(const std::vector<bool>& black) {
  Coloring c;
  c.p = 0.5;
  for (bool b : black) c.uniforms.push_back(b ? 0.0 : 1.0);
  return c;
}

namespace {

void require_inside_core(const Tessellation& tess, const Window& rect) {
  const Window slack = tess.core_window.expanded(tess.tol);
  if (!slack.contains(rect))
    throw ParameterError("rectangle " + to_string(rect.lo) + " .. " + to_string(rect.hi) +
                         " is not inside the core window");
}

unsigned rect_sides(const Polygon& poly, const Window& rect, Adjacency mode, double tol) {
  unsigned mask = 0;
  for (Side s : {kLeft, kRight, kBottom, kTop}) {
    auto seg = clip_segment(side_segment(rect, s), poly, tol);
    if (!seg) continue;
    if (mode == Adjacency::star || seg->length() > tol) mask |= s;
  }
  return mask;
}

bool in_color(const Coloring& c, std::size_t cell, Color color) {
  return color == Color::black ? c.black(cell) : !c.black(cell);
}

}  // namespace

RectView restrict_to(const Tessellation& tess, const Window& rect, Adjacency mode) {
  require_inside_core(tess, rect);
  RectView v;
  v.rect = rect;
  v.mode = mode;
  v.local.assign(tess.size(), -1);
  const double tol = tess.tol;
  std::vector<std::uint32_t> near;
  tess.index.for_each_near(rect.lo, rect.hi, [&](std::uint32_t c) { near.push_back(c); });
  std::sort(near.begin(), near.end());
  near.erase(std::unique(near.begin(), near.end()), near.end());
  for (auto c : near) {
    const auto& poly = tess.cells[c].polygon;
    if (!bounding_box(poly).overlaps(rect)) continue;
    if (!(area(clip_to_window(poly, rect)) > tol * rect.diagonal())) continue;
    v.local[c] = static_cast<std::int32_t>(v.cells.size());
    v.cells.push_back(c);
    v.sides.push_back(rect_sides(poly, rect, mode, tol));
  }
  for (auto c : v.cells) {
    for (auto k : tess.contact_index[c]) {
      const auto& ct = tess.contacts[k];
      if (ct.a != c) continue;
      if (v.local[ct.b] < 0) continue;
      if (mode == Adjacency::face && !(ct.length > tol)) continue;
      auto seg = clip_segment(Segment{ct.p, ct.q}, rect, tol);
      if (!seg) continue;
      if (mode == Adjacency::face && !(seg->length() > tol)) continue;
      v.edges.emplace_back(static_cast<std::uint32_t>(v.local[ct.a]), static_cast<std::uint32_t>(v.local[ct.b]));
    }
  }
  return v;
}

bool crossing(const RectView& view, const Coloring& coloring, Direction dir, Color color) {
  const std::size_t n = view.cells.size();
  UnionFind uf(n);
  for (auto [a, b] : view.edges)
    if (in_color(coloring, view.cells[a], color) && in_color(coloring, view.cells[b], color)) uf.unite(a, b);
  std::vector<unsigned> mask(n, 0);
  const unsigned want = start_side(dir) | end_side(dir);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!in_color(coloring, view.cells[i], color)) continue;
    auto r = uf.find(i);
    mask[r] |= view.sides[i] & want;
    if (mask[r] == want) return true;
  }
  return false;
}

bool crossing(const Tessellation& tess, const Coloring& coloring, const CrossingQuery& query) {
  const RectView view = restrict_to(tess, query.rect, query.adjacency);
  return crossing(view, coloring, query.direction, query.color);
}

double crossing_threshold(const RectView& view, const std::vector<double>& uniforms, Direction dir) {
  const std::size_t n = view.cells.size();
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (auto [a, b] : view.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const double ua = uniforms[view.cells[a]], ub = uniforms[view.cells[b]];
    return ua < ub || (ua == ub && a < b);
  });
  UnionFind uf(n);
  std::vector<char> added(n, 0);
  std::vector<unsigned> mask(n, 0);
  const unsigned want = start_side(dir) | end_side(dir);
  for (auto i : order) {
    added[i] = 1;
    unsigned m = view.sides[i] & want;
    for (auto j : adj[i])
      if (added[j]) m |= mask[uf.find(j)];
    for (auto j : adj[i])
      if (added[j]) uf.unite(i, j);
    const auto r = uf.find(i);
    mask[r] = m;
    if (m == want) return uniforms[view.cells[i]];
  }
  return std::numeric_limits<double>::infinity();
}

ClusterLabeling black_clusters(const Tessellation& tess, const tess::AdjacencyGraph& graph, const Coloring& coloring,
                               const Window& rect) {
  const std::size_t n = tess.size();
  std::vector<char> member(n, 0);
  std::vector<unsigned> sides(n, 0);
  for (std::size_t c = 0; c < n; ++c) {
    if (!coloring.black(c)) continue;
    const auto& poly = tess.cells[c].polygon;
    if (!bounding_box(poly).overlaps(rect)) continue;
    if (!(area(clip_to_window(poly, rect)) > tess.tol * rect.diagonal())) continue;
    member[c] = 1;
    sides[c] = rect_sides(poly, rect, graph.mode, tess.tol);
  }
  UnionFind uf(n);
  for (std::size_t c = 0; c < n; ++c) {
    if (!member[c]) continue;
    for (auto w : graph.neighbors[c])
      if (member[w]) uf.unite(static_cast<std::uint32_t>(c), w);
  }
  ClusterLabeling out;
  out.label.assign(n, -1);
  std::vector<std::int64_t> root_label(n, -1);
  for (std::size_t c = 0; c < n; ++c) {
    if (!member[c]) continue;
    const auto r = uf.find(static_cast<std::uint32_t>(c));
    if (root_label[r] < 0) {
      root_label[r] = static_cast<std::int64_t>(out.clusters.size());
      ClusterInfo info;
      info.bbox = bounding_box(tess.cells[c].polygon);
      out.clusters.push_back(info);
    }
    const auto l = root_label[r];
    out.label[c] = l;
    auto& info = out.clusters[static_cast<std::size_t>(l)];
    ++info.size;
    info.sides |= sides[c];
    const Window b = bounding_box(tess.cells[c].polygon);
    info.bbox.lo = {std::min(info.bbox.lo.x, b.lo.x), std::min(info.bbox.lo.y, b.lo.y)};
    info.bbox.hi = {std::max(info.bbox.hi.x, b.hi.x), std::max(info.bbox.hi.y, b.hi.y)};
  }
  return out;
}

double TessellationSource::effective_buffer() const {
  if (buffer > 0.0) return buffer;
  return 5.0 / std::sqrt(process.intensity());
}

Tessellation TessellationSource::build(const Window& core, std::uint64_t seed, std::uint64_t replicate) const {
  if (kind == SourceKind::lattice) {
    Vec2 shift{0, 0};
    if (random_shift) {
      Stream s(seed, replicate, StreamTag::lattice_shift);
      const double u = s.uniform(), v = s.uniform();
      if (lattice == tess::LatticeKind::square) shift = {u * spacing, v * spacing};
      else shift = Vec2{spacing, 0} * u + Vec2{spacing / 2.0, spacing * std::sqrt(3.0) / 2.0} * v;
    }
    return tess::build_lattice_tessellation(lattice, spacing, shift, core);
  }
  const double b = effective_buffer();
  Stream s(seed, replicate, StreamTag::points);
  const auto cfg = pp::sample_process(process, core.expanded(b), s);
  return tess::build_voronoi(cfg, core, b);
}

nlohmann::json TessellationSource::to_json() const {
  if (kind == SourceKind::lattice)
    return {{"type", "lattice"}, {"kind", tess::lattice_name(lattice)}, {"spacing", spacing},
            {"random_shift", random_shift}};
  return {{"type", "voronoi"}, {"process", pp::to_json(process)}, {"buffer", effective_buffer()}};
}

namespace {

template <class T>
std::size_t count_failed(const std::vector<std::optional<T>>& v) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](const auto& r) { return !r; }));
}

void check_p(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("p must lie in [0, 1]");
}

}  // namespace

CrossingCurve estimate_crossing_curve(const ExperimentSpec& spec, const CrossingQuery& query,
                                      const std::vector<double>& p_grid, std::size_t replicates) {
  if (replicates < 50) throw ParameterError("estimate_crossing_prob needs >= 50 replicates");
  if (p_grid.empty()) throw ParameterError("empty p grid");
  for (double p : p_grid) check_p(p);
  if (!Window(spec.window).expanded(1e-9 * spec.window.diagonal()).contains(query.rect))
    throw ParameterError("query rectangle is not inside the core window");
  auto rows = run_replicates(spec, replicates, [&](const Tessellation& t, std::size_t rep) {
    Stream s = coloring_stream(spec.seed, rep);
    Coloring c = color(t, 0.0, s);
    const RectView view = restrict_to(t, query.rect, query.adjacency);
    std::vector<char> hit;
    for (double p : p_grid) hit.push_back(crossing(view, c.at(p), query.direction, query.color) ? 1 : 0);
    return hit;
  });
  CrossingCurve out;
  out.p = p_grid;
  out.results.resize(p_grid.size());
  const std::size_t failed = count_failed(rows);
  for (const auto& r : rows) {
    out.indicators.push_back(r ? *r : std::vector<char>{});
    if (!r) continue;
    for (std::size_t k = 0; k < p_grid.size(); ++k) {
      ++out.results[k].hits.trials;
      out.results[k].hits.successes += (*r)[k];
    }
  }
  for (auto& res : out.results) res.failed = failed;
  return out;
}

PercResult estimate_crossing_prob(const ExperimentSpec& spec, const CrossingQuery& query, double p,
                                  std::size_t replicates) {
  return estimate_crossing_curve(spec, query, {p}, replicates).results.front();
}

double zero_cluster_reach(const Tessellation& tess, const tess::AdjacencyGraph& g, const Coloring& coloring) {
  const auto root = tess::zero_cell(tess);
  if (!coloring.black(root)) return 0.0;
  std::vector<char> seen(tess.size(), 0);
  std::vector<std::uint32_t> stack{root};
  seen[root] = 1;
  double reach = 0.0;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (auto x : tess.cells[v].polygon) reach = std::max(reach, norm(x));
    for (auto w : g.neighbors[v])
      if (!seen[w] && coloring.black(w)) {
        seen[w] = 1;
        stack.push_back(w);
      }
  }
  return reach;
}

ThetaCurve estimate_theta(const ExperimentSpec& spec, double p, const std::vector<double>& radii,
                          std::size_t replicates) {
  check_p(p);
  if (radii.empty()) throw ParameterError("empty radius list");
  const double half = std::min(spec.window.width(), spec.window.height()) / 2.0;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > 0.0) || (k > 0 && !(radii[k] > radii[k - 1])))
      throw ParameterError("radii must be positive and increasing");
  }
  if (radii.back() > half) throw ParameterError("largest radius exceeds the core half-width");
  auto rows = run_replicates(spec, replicates, [&](const Tessellation& t, std::size_t rep) {
    Stream s = coloring_stream(spec.seed, rep);
    const Coloring c = color(t, p, s);
    const double reach = zero_cluster_reach(t, t.graph(spec.adjacency), c);
    std::vector<char> hit;
    for (double r : radii) hit.push_back(reach >= r ? 1 : 0);
    return hit;
  });
  ThetaCurve out;
  out.radii = radii;
  out.results.resize(radii.size());
  const std::size_t failed = count_failed(rows);
  for (const auto& r : rows) {
    out.indicators.push_back(r ? *r : std::vector<char>{});
    if (!r) continue;
    for (std::size_t k = 0; k < radii.size(); ++k) {
      ++out.results[k].hits.trials;
      out.results[k].hits.successes += (*r)[k];
    }
  }
  for (auto& res : out.results) res.failed = failed;
  return out;
}

PcEstimate bisect_thresholds(const std::vector<double>& thresholds, double tolerance, std::size_t max_probes) {
  if (!(tolerance >= 0.01)) throw ParameterError("estimate_pc tolerance must be >= 0.01");
  PcEstimate out;
  auto probe = [&](double p) {
    Proportion pr;
    pr.trials = thresholds.size();
    for (double th : thresholds) pr.successes += th < p ? 1 : 0;
    out.probes.push_back({p, pr});
    const Interval ci = pr.ci();
    return ci.hi < 0.5 ? -1 : (ci.lo > 0.5 ? 1 : 0);
  };
  // [a, b] is the ambiguous band: probes whose interval contains 1/2.
  double lo = 0.0, hi = 1.0;
  std::optional<double> a, b;
  std::size_t used = 0;
  while (used < max_probes) {
    const double lower_gap = (a ? *a : hi) - lo;
    const double upper_gap = hi - (b ? *b : lo);
    if (hi - lo <= tolerance) break;
    if (a && lower_gap <= tolerance / 2.0 && upper_gap <= tolerance / 2.0) break;
    double p;
    if (!a) p = 0.5 * (lo + hi);
    else if (lower_gap >= upper_gap) p = 0.5 * (lo + *a);
    else p = 0.5 * (*b + hi);
    ++used;
    const int s = probe(p);
    if (s < 0) lo = p;
    else if (s > 0) hi = p;
    else {
      a = a ? std::min(*a, p) : p;
      b = b ? std::max(*b, p) : p;
    }
  }
  out.lo = lo;
  out.hi = hi;
  const double lower_gap = (a ? *a : hi) - lo;
  const double upper_gap = hi - (b ? *b : lo);
  const bool converged = hi - lo <= tolerance || (a && lower_gap <= tolerance / 2.0 && upper_gap <= tolerance / 2.0);
  out.flagged = !converged;
  std::sort(out.probes.begin(), out.probes.end(), [](const PcProbe& x, const PcProbe& y) { return x.p < y.p; });
  return out;
}

PcEstimate estimate_pc(const ExperimentSpec& spec, double tolerance, std::size_t replicates_per_probe,
                       std::size_t max_probes) {
  if (!(tolerance >= 0.01)) throw ParameterError("estimate_pc tolerance must be >= 0.01");
  if (replicates_per_probe < 50) throw ParameterError("estimate_pc needs >= 50 replicates per probe");
  auto rows = run_replicates(spec, replicates_per_probe, [&](const Tessellation& t, std::size_t rep) {
    Stream s = coloring_stream(spec.seed, rep);
    const Coloring c = color(t, 0.0, s);
    const RectView view = restrict_to(t, spec.window, spec.adjacency);
    return crossing_threshold(view, c.uniforms, Direction::horizontal);
  });
  std::vector<double> th;
  for (const auto& r : rows)
    if (r) th.push_back(*r);
  PcEstimate out = bisect_thresholds(th, tolerance, max_probes);
  out.failed = count_failed(rows);
  return out;
}

Proportion SpanningHistogram::at_least(std::size_t k) const {
  Proportion p;
  p.trials = replicates;
  for (const auto& [n, c] : counts)
    if (n >= k) p.successes += c;
  return p;
}

std::size_t spanning_cluster_count(const RectView& view, const Coloring& coloring) {
  const std::size_t n = view.cells.size();
  UnionFind uf(n);
  for (auto [a, b] : view.edges)
    if (coloring.black(view.cells[a]) && coloring.black(view.cells[b])) uf.unite(a, b);
  std::vector<unsigned> mask(n, 0);
  for (std::uint32_t i = 0; i < n; ++i)
    if (coloring.black(view.cells[i])) mask[uf.find(i)] |= view.sides[i];
  std::size_t count = 0;
  for (std::uint32_t i = 0; i < n; ++i)
    if (coloring.black(view.cells[i]) && uf.find(i) == i && (mask[i] & (kLeft | kRight)) == (kLeft | kRight))
      ++count;
  return count;
}

SpanningHistogram count_spanning_clusters(const ExperimentSpec& spec, double p, const Window& rect,
                                          std::size_t replicates) {
  check_p(p);
  if (replicates < 100) throw ParameterError("count_spanning_clusters needs >= 100 replicates");
  auto rows = run_replicates(spec, replicates, [&](const Tessellation& t, std::size_t rep) {
    Stream s = coloring_stream(spec.seed, rep);
    const Coloring c = color(t, p, s);
    return spanning_cluster_count(restrict_to(t, rect, spec.adjacency), c);
  });
  SpanningHistogram out;
  for (const auto& r : rows) {
    if (!r) {
      ++out.failed;
      continue;
    }
    ++out.counts[*r];
    ++out.replicates;
    out.per_replicate.push_back(*r);
  }
  return out;
}

TrifurcationResult find_trifurcations(const Tessellation& tess, const Coloring& coloring, std::size_t r1, double r2,
                                      const Window& window, Adjacency adjacency) {
  if (r1 < 1) throw ParameterError("r1 must be >= 1");
  if (!(r2 > 0.0)) throw ParameterError("r2 must be positive");
  require_inside_core(tess, window);
  const auto& g = tess.graph(adjacency);
  const RectView view = restrict_to(tess, window, adjacency);
  const double step = 3.0 * r2;
  TrifurcationResult out;
  const auto i0 = static_cast<std::int64_t>(std::ceil(window.lo.x / step));
  const auto i1 = static_cast<std::int64_t>(std::floor(window.hi.x / step));
  const auto j0 = static_cast<std::int64_t>(std::ceil(window.lo.y / step));
  const auto j1 = static_cast<std::int64_t>(std::floor(window.hi.y / step));
  std::vector<char> whitened(tess.size(), 0);
  for (auto j = j0; j <= j1; ++j) {
    for (auto i = i0; i <= i1; ++i) {
      const Vec2 x{static_cast<double>(i) * step, static_cast<double>(j) * step};
      ++out.candidates;
      const auto zx = tess::locate(tess, x);
      if (!zx) {
        ++out.skipped;
        continue;
      }
      const tess::Ball ball = tess::graph_ball(g, tess, *zx, r1);
      bool inside = true, all_black = true, boxed = true;
      const Window box{x - Vec2{r2, r2}, x + Vec2{r2, r2}};
      for (auto v : ball.members) {
        const Window bb = bounding_box(tess.cells[v].polygon);
        if (view.local[v] < 0 || !window.contains(bb)) inside = false;
        if (!coloring.black(v)) all_black = false;
        if (!box.expanded(tess.tol).contains(bb)) boxed = false;
      }
      if (!inside) {
        ++out.skipped;
        continue;
      }
      if (!all_black || !boxed) continue;
      for (auto v : ball.members) whitened[v] = 1;
      const std::size_t n = view.cells.size();
      UnionFind uf(n);
      auto live = [&](std::uint32_t local) {
        const auto c = view.cells[local];
        return coloring.black(c) && !whitened[c];
      };
      for (auto [a, b] : view.edges)
        if (live(a) && live(b)) uf.unite(a, b);
      std::vector<unsigned> mask(n, 0);
      for (std::uint32_t k = 0; k < n; ++k)
        if (live(k)) mask[uf.find(k)] |= view.sides[k];
      std::vector<std::uint32_t> roots;
      for (auto w : tess::outer_boundary(g, ball.members)) {
        const auto lw = view.local[w];
        if (lw < 0 || !live(static_cast<std::uint32_t>(lw))) continue;
        const auto r = uf.find(static_cast<std::uint32_t>(lw));
        if (mask[r]) roots.push_back(r);
      }
      std::sort(roots.begin(), roots.end());
      roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
      for (auto v : ball.members) whitened[v] = 0;
      if (roots.size() >= 3) {
        ++out.count;
        out.points.push_back(x);
      }
    }
  }
  out.density = static_cast<double>(out.count) / window.area();
  return out;
}

std::vector<char> adjacent_to_two_boundary_clusters(const Tessellation& tess, const tess::AdjacencyGraph& g,
                                                    const Coloring& coloring) {
  const ClusterLabeling lab = black_clusters(tess, g, coloring, tess.core_window);
  std::vector<char> out(tess.size(), 0);
  for (std::size_t v = 0; v < tess.size(); ++v) {
    std::int64_t first = -1;
    for (auto w : g.neighbors[v]) {
      const auto l = lab.label[w];
      if (l < 0 || !lab.clusters[static_cast<std::size_t>(l)].sides) continue;
      if (first < 0) first = l;
      else if (l != first) {
        out[v] = 1;
        break;
      }
    }
  }
  return out;
}

GgrCurves ggr_diagnostics(const ExperimentSpec& spec, double p, std::size_t n_max, std::size_t replicates) {
  check_p(p);
  struct Row {
    std::vector<double> g1, g2;
    bool truncated = false;
  };
  auto rows = run_replicates(spec, replicates, [&](const Tessellation& t, std::size_t rep) {
    Stream s = coloring_stream(spec.seed, rep);
    const Coloring c = color(t, p, s);
    const auto& g = t.graph(spec.adjacency);
    const auto l = adjacent_to_two_boundary_clusters(t, g, c);
    const tess::Ball ball = tess::graph_ball(g, t, t.root(), n_max);
    Row row;
    row.truncated = ball.truncated;
    double s1 = 0.0, s2 = 0.0;
    std::size_t k = 0;
    for (std::size_t n = 0; n < ball.layer_end.size(); ++n) {
      for (; k < ball.layer_end[n]; ++k) {
        s1 += l[ball.members[k]];
        s2 += static_cast<double>(g.neighbors[ball.members[k]].size());
      }
      row.g1.push_back(s1 / static_cast<double>(k));
      row.g2.push_back(s2 / static_cast<double>(k));
    }
    return row;
  });
  GgrCurves out;
  out.g1.resize(n_max + 1);
  out.g2.resize(n_max + 1);
  std::vector<std::vector<double>> g1(n_max + 1), g2(n_max + 1);
  for (const auto& r : rows) {
    if (!r) {
      ++out.failed;
      continue;
    }
    out.truncated += r->truncated ? 1 : 0;
    for (std::size_t n = 0; n < r->g1.size(); ++n) {
      g1[n].push_back(r->g1[n]);
      g2[n].push_back(r->g2[n]);
    }
  }
  for (std::size_t n = 0; n <= n_max; ++n) {
    out.g1[n] = mean_estimate(g1[n]);
    out.g2[n] = mean_estimate(g2[n]);
  }
  return out;
}

RecursionReport verify_crossing_recursion(const ExperimentSpec& spec, double p, double t, std::size_t replicates) {
  check_p(p);
  if (!(t > 0.0)) throw ParameterError("t must be positive");
  const Vec2 o = spec.window.lo;
  auto rect = [&](double x0, double y0, double x1, double y1) {
    return Window{o + Vec2{x0 * t, y0 * t}, o + Vec2{x1 * t, y1 * t}};
  };
  if (!spec.window.expanded(1e-9 * spec.window.diagonal()).contains(rect(0, 0, 9, 3)))
    throw ParameterError("the 9t x 3t rectangle does not fit in the core window");

  // Per replicate bit layout of complement indicators.
  enum : std::size_t { kLhs, kBoth, kStrip0, kStrip1, kUnion0, kUnion1, kH3, kV1, kV3, kH0 = 9, kV0 = 17, kBits = 23 };
  auto rows = run_replicates(spec, replicates, [&](const Tessellation& tess, std::size_t rep) {
    Stream s = coloring_stream(spec.seed, rep);
    const Coloring c = color(tess, p, s);
    auto miss = [&](const Window& r, Direction d) {
      return !crossing(restrict_to(tess, r, spec.adjacency), c, d, Color::black);
    };
    std::array<char, kBits> bits{};
    bits[kLhs] = miss(rect(0, 0, 9, 3), Direction::horizontal);
    for (int strip = 0; strip < 2; ++strip) {
      const double y = 2.0 * strip;
      bits[kStrip0 + strip] = miss(rect(0, y, 9, y + 1), Direction::horizontal);
      bool any = false;
      for (int k = 0; k < 4; ++k) {
        const char m = miss(rect(2.0 * k, y, 2.0 * k + 3, y + 1), Direction::horizontal);
        bits[kH0 + 4 * strip + k] = m;
        any = any || m;
      }
      for (int k = 0; k < 3; ++k) {
        const char m = miss(rect(2.0 * k + 2, y, 2.0 * k + 3, y + 1), Direction::vertical);
        bits[kV0 + 3 * strip + k] = m;
        any = any || m;
      }
      bits[kUnion0 + strip] = any;
    }
    bits[kBoth] = bits[kStrip0] && bits[kStrip1];
    bits[kH3] = miss(rect(0, 0, 3, 1), Direction::horizontal);
    bits[kV1] = miss(rect(0, 0, 1, 1), Direction::vertical);
    bits[kV3] = miss(rect(0, 0, 1, 3), Direction::vertical);
    return bits;
  });
  std::array<Proportion, kBits> acc{};
  RecursionReport out;
  out.t = t;
  for (const auto& r : rows) {
    if (!r) {
      ++out.failed;
      continue;
    }
    for (std::size_t k = 0; k < kBits; ++k) {
      ++acc[k].trials;
      acc[k].successes += (*r)[k];
    }
  }
  out.lhs = acc[kLhs];
  out.both_strips = acc[kBoth];
  for (int s = 0; s < 2; ++s) {
    out.strip[s] = acc[kStrip0 + s];
    out.chain_union[s] = acc[kUnion0 + s];
    for (int k = 0; k < 4; ++k) out.h_rects[s][k] = acc[kH0 + 4 * s + k];
    for (int k = 0; k < 3; ++k) out.v_rects[s][k] = acc[kV0 + 3 * s + k];
  }
  out.h_3t_by_t = acc[kH3];
  out.v_t_by_t = acc[kV1];
  out.v_t_by_3t = acc[kV3];
  const double m = std::max(out.h_3t_by_t.estimate(), out.v_t_by_3t.estimate());
  const double m_lo = std::max(out.h_3t_by_t.ci().lo, out.v_t_by_3t.ci().lo);
  const double m_hi = std::max(out.h_3t_by_t.ci().hi, out.v_t_by_3t.ci().hi);
  out.rhs = 49.0 * m * m;
  const double joint_width = out.lhs.ci().width() + 49.0 * (m_hi * m_hi - m_lo * m_lo);
  out.slack = 3.0 * joint_width;
  out.margin = out.rhs + out.slack - out.lhs.estimate();
  out.holds = out.margin >= 0.0;
  return out;
}

}  // namespace tessperc::perc
