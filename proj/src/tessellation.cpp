#include "tessperc/tessellation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "tessperc/spatial_grid.hpp"
#include "tessperc/stats.hpp"

namespace tessperc::tess {

std::string adjacency_name(Adjacency a) { return a == Adjacency::face ? "face" : "star"; }

Adjacency adjacency_from_name(const std::string& name) {
  if (name == "face") return Adjacency::face;
  if (name == "star") return Adjacency::star;
  throw ParameterError("adjacency must be 'face' or 'star', got '" + name + "'");
}

std::string lattice_name(LatticeKind k) { return k == LatticeKind::square ? "square" : "hexagonal"; }

LatticeKind lattice_from_name(const std::string& name) {
  if (name == "square") return LatticeKind::square;
  if (name == "hexagonal") return LatticeKind::hexagonal;
  throw ParameterError("lattice kind must be 'square' or 'hexagonal', got '" + name + "'");
}

std::size_t AdjacencyGraph::edge_count() const {
  std::size_t s = 0;
  for (const auto& n : neighbors) s += n.size();
  return s / 2;
}

CellIndex::CellIndex(const std::vector<Cell>& cells, const Window& extent, double bucket)
    : extent_(extent), bucket_(bucket) {
  nx_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(extent.width() / bucket)));
  ny_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(extent.height() / bucket)));
  nx_ = std::min<std::int64_t>(nx_, 4096);
  ny_ = std::min<std::int64_t>(ny_, 4096);
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(nx_ * ny_) + 1, 0);
  std::vector<Window> boxes;
  boxes.reserve(cells.size());
  for (const auto& c : cells) {
    boxes.push_back(bounding_box(c.polygon));
    const auto& b = boxes.back();
    for (auto iy = by(b.lo.y); iy <= by(b.hi.y); ++iy)
      for (auto ix = bx(b.lo.x); ix <= bx(b.hi.x); ++ix) ++counts[static_cast<std::size_t>(iy * nx_ + ix) + 1];
  }
  for (std::size_t k = 1; k < counts.size(); ++k) counts[k] += counts[k - 1];
  start_ = counts;
  items_.resize(start_.back());
  std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& b = boxes[c];
    for (auto iy = by(b.lo.y); iy <= by(b.hi.y); ++iy)
      for (auto ix = bx(b.lo.x); ix <= bx(b.hi.x); ++ix)
        items_[fill[static_cast<std::size_t>(iy * nx_ + ix)]++] = static_cast<std::uint32_t>(c);
  }
}

std::int64_t CellIndex::bx(double x) const {
  if (!std::isfinite(x)) return x > 0 ? nx_ - 1 : 0;
  return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((x - extent_.lo.x) / bucket_)), 0, nx_ - 1);
}

std::int64_t CellIndex::by(double y) const {
  if (!std::isfinite(y)) return y > 0 ? ny_ - 1 : 0;
  return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((y - extent_.lo.y) / bucket_)), 0, ny_ - 1);
}

namespace {

// Convex polygon whose edge i (v[i] -> v[i+1]) carries a label: neighbor generator or -1.
struct LabeledPolygon {
  std::vector<Vec2> v;
  std::vector<std::int64_t> label;
};

void push_dedup(LabeledPolygon& out, Vec2 p, std::int64_t lab, double tol2) {
  if (!out.v.empty()) {
    const Vec2 d = out.v.back() - p;
    if (dot(d, d) <= tol2) {
      out.v.back() = p;
      out.label.back() = lab;
      return;
    }
  }
  out.v.push_back(p);
  out.label.push_back(lab);
}

// Writes into `out` the part of `poly` in {y : dot(y - origin, normal) <= 0}; the new edge on the
// clip line gets `lab`.
void clip_labeled(const LabeledPolygon& poly, Vec2 origin, Vec2 normal, std::int64_t lab, double tol,
                  LabeledPolygon& out) {
  out.v.clear();
  out.label.clear();
  const double tol2 = tol * tol;
  const std::size_t n = poly.v.size();
  const double inv = 1.0 / norm(normal);
  auto side = [&](Vec2 y) { return dot(y - origin, normal) * inv; };
  double sa = side(poly.v[0]);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly.v[i], b = poly.v[(i + 1) % n];
    const double sb = side(b);
    if (sa <= tol) {
      if (sb <= tol) {
        push_dedup(out, a, poly.label[i], tol2);
      } else if (sa < -tol) {
        push_dedup(out, a, poly.label[i], tol2);
        push_dedup(out, a + (b - a) * (sa / (sa - sb)), lab, tol2);
      } else {
        push_dedup(out, a, lab, tol2);
      }
    } else if (sb < -tol) {
      push_dedup(out, a + (b - a) * (sa / (sa - sb)), poly.label[i], tol2);
    }
    sa = sb;
  }
  while (out.v.size() > 1) {
    const Vec2 d = out.v.front() - out.v.back();
    if (dot(d, d) > tol2) break;
    out.v.front() = out.v.back();
    out.v.pop_back();
    out.label.pop_back();
  }
}

double max_radius2(const LabeledPolygon& p, Vec2 c) {
  double r = 0.0;
  for (auto v : p.v) r = std::max(r, dot(v - c, v - c));
  return r;
}

unsigned side_mask(const Polygon& poly, const Window& core, double tol) {
  unsigned mask = 0;
  for (Side s : {kLeft, kRight, kBottom, kTop})
    if (clip_segment(side_segment(core, s), poly, tol)) mask |= s;
  return mask;
}

bool meets_with_area(const Polygon& poly, const Window& w, double tol) {
  const Window bb = bounding_box(poly);
  if (!bb.overlaps(w)) return false;
  return area(clip_to_window(poly, w, 0.0)) > tol * w.diagonal();
}

Cell make_cell(Polygon poly, Vec2 center, const Window& core, double tol) {
  Cell c;
  c.center = center;
  c.diameter = polygon_diameter(poly);
  c.touches_core_boundary = side_mask(poly, core, tol);
  c.polygon = std::move(poly);
  return c;
}

void check_not_collinear(const std::vector<Vec2>& pts, double tol) {
  if (pts.size() < 3) throw ConstructionError("Voronoi construction needs at least 3 generators");
  const Vec2 a = pts[0];
  std::size_t far = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (dist(pts[i], a) > dist(pts[far], a)) far = i;
  const Vec2 d = pts[far] - a;
  const double len = norm(d);
  if (len <= tol) throw ConstructionError("all generators coincide");
  for (const auto& p : pts)
    if (std::abs(cross(d, p - a)) / len > tol) return;
  throw ConstructionError("all generators are collinear");
}

}  // namespace

Tessellation build_voronoi(const pp::PointConfiguration& points, const Window& core_window, double buffer_width,
                           bool validate) {
  const Window& sw = points.window;
  if (!sw.contains(core_window)) throw ParameterError("core window must lie inside the sampling window");
  const double tol = tolerance_for(core_window);
  const auto& pts = points.points;
  check_not_collinear(pts, tol);

  const double h = std::max(std::sqrt(sw.area() / static_cast<double>(pts.size())), sw.diagonal() * 1e-6);
  SpatialGrid grid(sw, h, pts);
  const std::int64_t kmax = std::max(grid.nx(), grid.ny());

  Tessellation tess;
  tess.core_window = core_window;
  tess.buffer_width = buffer_width;
  tess.tol = tol;
  tess.generators = std::make_shared<const pp::PointConfiguration>(points);

  LabeledPolygon start;
  start.v = rectangle(sw);
  start.label.assign(4, -1);

  LabeledPolygon cell, scratch;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec2 xi = pts[i];
    cell = start;
    // Generators farther than twice the cell's circumradius about xi cannot clip it.
    double reach2 = 4.0 * max_radius2(cell, xi);
    const auto cx = grid.bx(xi.x), cy = grid.by(xi.y);
    for (std::int64_t k = 0; k <= kmax; ++k) {
      auto visit = [&](std::int64_t ix, std::int64_t iy) {
        for (auto j : grid.bucket(ix, iy)) {
          if (j == i) continue;
          const Vec2 d = pts[j] - xi;
          const double dd = dot(d, d);
          if (dd <= tol * tol) throw ConstructionError("coincident generators at " + to_string(xi));
          if (dd >= reach2) continue;
          clip_labeled(cell, (xi + pts[j]) * 0.5, d, static_cast<std::int64_t>(j), tol, scratch);
          std::swap(cell, scratch);
          if (cell.v.empty()) return;
          reach2 = 4.0 * max_radius2(cell, xi);
        }
      };
      if (k == 0) {
        visit(cx, cy);
      } else {
        for (std::int64_t ix = cx - k; ix <= cx + k; ++ix) {
          visit(ix, cy - k);
          visit(ix, cy + k);
        }
        for (std::int64_t iy = cy - k + 1; iy <= cy + k - 1; ++iy) {
          visit(cx - k, iy);
          visit(cx + k, iy);
        }
      }
      const double ring = static_cast<double>(k) * h;
      if (cell.v.empty() || ring * ring >= reach2) break;
    }
    if (cell.v.size() < 3) continue;
    Polygon poly = cell.v;
    if (!meets_with_area(poly, core_window, tol)) continue;
    if (validate && std::find(cell.label.begin(), cell.label.end(), -1) != cell.label.end()) {
      throw EdgeEffectError("cell of generator " + to_string(xi) +
                            " meets the core window but reaches the sampling-window boundary; increase the buffer (" +
                            std::to_string(buffer_width) + ")");
    }
    Cell c = make_cell(std::move(poly), xi, core_window, tol);
    c.generator = static_cast<std::int64_t>(i);
    c.id = static_cast<std::uint32_t>(tess.cells.size());
    tess.cells.push_back(std::move(c));
  }
  if (tess.cells.empty()) throw ConstructionError("no Voronoi cell meets the core window");
  finalize(tess);
  return tess;
}

Tessellation build_lattice_tessellation(LatticeKind kind, double spacing, Vec2 shift, const Window& core_window) {
  if (!(spacing > 0.0)) throw ParameterError("lattice spacing must be positive");
  const double tol = tolerance_for(core_window);
  std::vector<Cell> cells;
  auto add = [&](Polygon poly) {
    if (!meets_with_area(poly, core_window, tol)) return;
    Vec2 c = centroid(poly);
    cells.push_back(make_cell(std::move(poly), c, core_window, tol));
  };
  const Window& w = core_window;
  if (kind == LatticeKind::square) {
    const auto i0 = static_cast<std::int64_t>(std::floor((w.lo.x - shift.x) / spacing)) - 1;
    const auto i1 = static_cast<std::int64_t>(std::ceil((w.hi.x - shift.x) / spacing)) + 1;
    const auto j0 = static_cast<std::int64_t>(std::floor((w.lo.y - shift.y) / spacing)) - 1;
    const auto j1 = static_cast<std::int64_t>(std::ceil((w.hi.y - shift.y) / spacing)) + 1;
    for (auto j = j0; j <= j1; ++j)
      for (auto i = i0; i <= i1; ++i) {
        const Vec2 lo{shift.x + static_cast<double>(i) * spacing, shift.y + static_cast<double>(j) * spacing};
        add(rectangle({lo, lo + Vec2{spacing, spacing}}));
      }
  } else {
    const double r = spacing / std::sqrt(3.0);
    const double row = spacing * std::sqrt(3.0) / 2.0;
    std::array<Vec2, 6> corner;
    for (int k = 0; k < 6; ++k) {
      const double a = std::numbers::pi / 6.0 + k * std::numbers::pi / 3.0;
      corner[static_cast<std::size_t>(k)] = {r * std::cos(a), r * std::sin(a)};
    }
    const auto j0 = static_cast<std::int64_t>(std::floor((w.lo.y - shift.y) / row)) - 2;
    const auto j1 = static_cast<std::int64_t>(std::ceil((w.hi.y - shift.y) / row)) + 2;
    for (auto j = j0; j <= j1; ++j) {
      const double off = shift.x + 0.5 * spacing * static_cast<double>(j);
      const auto i0 = static_cast<std::int64_t>(std::floor((w.lo.x - off) / spacing)) - 2;
      const auto i1 = static_cast<std::int64_t>(std::ceil((w.hi.x - off) / spacing)) + 2;
      for (auto i = i0; i <= i1; ++i) {
        const Vec2 c{off + static_cast<double>(i) * spacing, shift.y + static_cast<double>(j) * row};
        Polygon poly;
        for (auto v : corner) poly.push_back(c + v);
        add(std::move(poly));
      }
    }
  }
  return from_cells(std::move(cells), core_window, 0.0);
}

Tessellation from_cells(std::vector<Cell> cells, const Window& core_window, double buffer_width) {
  Tessellation tess;
  tess.core_window = core_window;
  tess.buffer_width = buffer_width;
  tess.tol = tolerance_for(core_window);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    cells[k].id = static_cast<std::uint32_t>(k);
    cells[k].diameter = polygon_diameter(cells[k].polygon);
    cells[k].touches_core_boundary = side_mask(cells[k].polygon, core_window, tess.tol);
  }
  tess.cells = std::move(cells);
  if (tess.cells.empty()) throw ConstructionError("empty tessellation");
  finalize(tess);
  return tess;
}

namespace {

std::optional<Contact> contact_between(const Cell& a, const Cell& b, double tol) {
  std::vector<Vec2> shared;
  for (auto v : a.polygon)
    if (contains_point(b.polygon, v, tol)) shared.push_back(v);
  for (auto v : b.polygon)
    if (contains_point(a.polygon, v, tol)) shared.push_back(v);
  if (shared.empty()) return std::nullopt;
  Vec2 p = shared.front();
  Vec2 q = p;
  for (auto v : shared)
    if (dist(v, p) > dist(q, p)) q = v;
  p = q;
  for (auto v : shared)
    if (dist(v, q) > dist(p, q)) p = v;
  Contact c;
  c.a = std::min(a.id, b.id);
  c.b = std::max(a.id, b.id);
  c.p = p;
  c.q = q;
  c.length = dist(p, q);
  return c;
}

}  // namespace

void finalize(Tessellation& tess) {
  const auto n = tess.cells.size();
  Window extent = bounding_box(tess.cells.front().polygon);
  double mean_side = 0.0;
  for (const auto& c : tess.cells) {
    const Window b = bounding_box(c.polygon);
    extent = {{std::min(extent.lo.x, b.lo.x), std::min(extent.lo.y, b.lo.y)},
              {std::max(extent.hi.x, b.hi.x), std::max(extent.hi.y, b.hi.y)}};
    mean_side += std::max(b.width(), b.height());
  }
  mean_side /= static_cast<double>(n);
  tess.index = CellIndex(tess.cells, extent, std::max(mean_side, extent.diagonal() * 1e-6));

  tess.contacts.clear();
  tess.contact_index.assign(n, {});
  std::vector<std::uint32_t> stamp(n, std::numeric_limits<std::uint32_t>::max());
  for (std::uint32_t a = 0; a < n; ++a) {
    const Window box = bounding_box(tess.cells[a].polygon).expanded(tess.tol);
    tess.index.for_each_near(box.lo, box.hi, [&](std::uint32_t b) {
      if (b <= a || stamp[b] == a) return;
      stamp[b] = a;
      if (!bounding_box(tess.cells[b].polygon).intersects(box)) return;
      if (auto c = contact_between(tess.cells[a], tess.cells[b], tess.tol)) {
        const auto k = static_cast<std::uint32_t>(tess.contacts.size());
        tess.contacts.push_back(*c);
        tess.contact_index[a].push_back(k);
        tess.contact_index[b].push_back(k);
      }
    });
  }
  tess.face = build_adjacency(tess, Adjacency::face);
  tess.star = build_adjacency(tess, Adjacency::star);
}

AdjacencyGraph build_adjacency(const Tessellation& tess, Adjacency mode) {
  AdjacencyGraph g;
  g.mode = mode;
  g.neighbors.assign(tess.cells.size(), {});
  for (const auto& c : tess.contacts) {
    if (mode == Adjacency::face && !(c.length > tess.tol)) continue;
    g.neighbors[c.a].push_back(c.b);
    g.neighbors[c.b].push_back(c.a);
  }
  for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
  // The root is the zero cell when the origin lies in the core window, else the cell at its center.
  const Vec2 anchor = tess.core_window.contains(Vec2{0, 0}) ? Vec2{0, 0} : tess.core_window.center();
  g.root = locate(tess, anchor).value_or(0);
  return g;
}

std::optional<std::uint32_t> locate(const Tessellation& tess, Vec2 x) {
  std::optional<std::uint32_t> best;
  tess.index.for_each_near(x, x, [&](std::uint32_t c) {
    const auto& cell = tess.cells[c];
    if (!contains_point(cell.polygon, x, tess.tol)) return;
    if (!best || lex_less(cell.center, tess.cells[*best].center) ||
        (cell.center == tess.cells[*best].center && c < *best))
      best = c;
  });
  return best;
}

std::uint32_t zero_cell(const Tessellation& tess) {
  if (!tess.core_window.contains(Vec2{0, 0}))
    throw ParameterError("the origin lies outside the core window; the zero cell is undefined");
  auto c = locate(tess, {0, 0});
  if (!c) throw ConstructionError("no cell contains the origin");
  return *c;
}

Ball graph_ball(const AdjacencyGraph& g, const Tessellation& tess, std::uint32_t root, std::size_t n) {
  Ball ball;
  std::vector<std::int64_t> depth(g.size(), -1);
  depth[root] = 0;
  ball.members.push_back(root);
  std::size_t head = 0;
  for (std::size_t layer = 0; layer <= n; ++layer) {
    const std::size_t end = ball.members.size();
    ball.layer_end.push_back(end);
    if (layer == n) break;
    std::vector<std::uint32_t> next;
    for (; head < end; ++head)
      for (auto w : g.neighbors[ball.members[head]])
        if (depth[w] < 0) {
          depth[w] = static_cast<std::int64_t>(layer + 1);
          next.push_back(w);
        }
    std::sort(next.begin(), next.end());
    ball.members.insert(ball.members.end(), next.begin(), next.end());
  }
  for (auto v : ball.members)
    if (tess.cells[v].touches_core_boundary) ball.truncated = true;
  return ball;
}

std::vector<std::uint32_t> outer_boundary(const AdjacencyGraph& g, const std::vector<std::uint32_t>& set) {
  std::vector<char> in(g.size(), 0);
  for (auto v : set) in[v] = 1;
  std::vector<std::uint32_t> out;
  for (auto v : set)
    for (auto w : g.neighbors[v])
      if (!in[w]) {
        in[w] = 2;
        out.push_back(w);
      }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint32_t> inner_boundary(const AdjacencyGraph& g, const std::vector<std::uint32_t>& set) {
  std::vector<char> in(g.size(), 0);
  for (auto v : set) in[v] = 1;
  std::vector<std::uint32_t> out;
  for (auto v : set)
    for (auto w : g.neighbors[v])
      if (!in[w]) {
        out.push_back(v);
        break;
      }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

AnimalCounts enumerate_animals(const AdjacencyGraph& g, std::uint32_t root, std::size_t n_max,
                               std::uint64_t node_budget) {
  AnimalCounts out;
  out.counts.assign(n_max, 0);
  if (n_max == 0) return out;
  std::vector<char> blocked(g.size(), 0);
  auto nbrs = [&](std::uint32_t v, auto&& fn) {
    for (auto w : g.neighbors[v]) fn(w);
  };
  out.complete = visit_animals(nbrs, root, n_max, blocked, node_budget, [&](const std::vector<std::uint32_t>& a) {
    ++out.counts[a.size() - 1];
    ++out.nodes;
  });
  // Depth-first order: once the budget is hit every size above 1 may be partial.
  if (!out.complete) out.cutoff = 2;
  return out;
}

double growth_exponent(const std::vector<std::size_t>& sizes) {
  if (sizes.size() < 3) return 0.0;
  const std::size_t n_max = sizes.size() - 1;
  const std::size_t from = std::max<std::size_t>(1, (n_max + 1) / 2);
  std::vector<double> x, y;
  for (std::size_t n = from; n <= n_max; ++n) {
    x.push_back(std::log(static_cast<double>(n)));
    y.push_back(std::log(static_cast<double>(sizes[n])));
  }
  if (x.size() < 2) return 0.0;
  return least_squares(x, y).slope;
}

GrowthProfile ball_growth_profile(const AdjacencyGraph& g, const Tessellation& tess, std::uint32_t root,
                                  std::size_t n_max) {
  const Ball b = graph_ball(g, tess, root, n_max);
  GrowthProfile out;
  out.sizes.assign(b.layer_end.begin(), b.layer_end.end());
  out.truncated = b.truncated;
  out.exponent = growth_exponent(out.sizes);
  return out;
}

nlohmann::json to_json(const Tessellation& tess) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : tess.cells) {
    nlohmann::json poly = nlohmann::json::array();
    for (auto v : c.polygon) poly.push_back({v.x, v.y});
    cells.push_back({{"id", c.id},
                     {"center", {c.center.x, c.center.y}},
                     {"polygon", poly},
                     {"neighbors_face", tess.face.neighbors[c.id]},
                     {"neighbors_star", tess.star.neighbors[c.id]}});
  }
  return {{"cells", cells},
          {"core_window",
           {{"lo", {tess.core_window.lo.x, tess.core_window.lo.y}},
            {"hi", {tess.core_window.hi.x, tess.core_window.hi.y}}}}};
}

}  // namespace tessperc::tess
