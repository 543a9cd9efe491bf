#include "tessperc/geometry.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace tessperc {

Window::Window(Vec2 lo_, Vec2 hi_) : lo(lo_), hi(hi_) {
  if (!(lo.x < hi.x && lo.y < hi.y) || !std::isfinite(lo.x) || !std::isfinite(lo.y) ||
      !std::isfinite(hi.x) || !std::isfinite(hi.y)) {
    throw ParameterError("degenerate window " + to_string(lo) + " .. " + to_string(hi));
  }
}

bool Window::intersects(const Window& w) const {
  return lo.x <= w.hi.x && w.lo.x <= hi.x && lo.y <= w.hi.y && w.lo.y <= hi.y;
}

bool Window::overlaps(const Window& w) const {
  return lo.x < w.hi.x && w.lo.x < hi.x && lo.y < w.hi.y && w.lo.y < hi.y;
}

Window Window::expanded(double by) const { return {lo - Vec2{by, by}, hi + Vec2{by, by}}; }

Window Window::scaled(double t) const {
  if (!(t > 0.0)) throw ParameterError("window scale factor must be positive");
  Vec2 a = lo * t;
  Vec2 b = hi * t;
  return {{std::min(a.x, b.x), std::min(a.y, b.y)}, {std::max(a.x, b.x), std::max(a.y, b.y)}};
}

Window Window::scaled_about_corner(double t) const {
  if (!(t > 0.0)) throw ParameterError("window scale factor must be positive");
  return {lo, lo + (hi - lo) * t};
}

Segment side_segment(const Window& w, Side s) {
  switch (s) {
    case kLeft: return {w.lo, {w.lo.x, w.hi.y}};
    case kRight: return {{w.hi.x, w.lo.y}, w.hi};
    case kBottom: return {w.lo, {w.hi.x, w.lo.y}};
    case kTop: return {{w.lo.x, w.hi.y}, w.hi};
  }
  throw ParameterError("bad side");
}

double signed_area(std::span<const Vec2> poly) {
  double s = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) s += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * s;
}

double area(std::span<const Vec2> poly) { return std::abs(signed_area(poly)); }

Vec2 centroid(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n == 0) return {};
  // Shift to the first vertex for conditioning.
  const Vec2 o = poly[0];
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 p = poly[i] - o;
    Vec2 q = poly[(i + 1) % n] - o;
    double c = cross(p, q);
    a += c;
    cx += (p.x + q.x) * c;
    cy += (p.y + q.y) * c;
  }
  if (a == 0.0) {
    Vec2 m{};
    for (auto v : poly) m = m + v;
    return m * (1.0 / static_cast<double>(n));
  }
  return o + Vec2{cx / (3.0 * a), cy / (3.0 * a)};
}

Window bounding_box(std::span<const Vec2> poly) {
  Window w;
  w.lo = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  w.hi = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (auto v : poly) {
    w.lo.x = std::min(w.lo.x, v.x);
    w.lo.y = std::min(w.lo.y, v.y);
    w.hi.x = std::max(w.hi.x, v.x);
    w.hi.y = std::max(w.hi.y, v.y);
  }
  return w;
}

double polygon_diameter(std::span<const Vec2> poly) {
  double d = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i)
    for (std::size_t j = i + 1; j < poly.size(); ++j) d = std::max(d, dist(poly[i], poly[j]));
  return d;
}

bool is_convex_ccw(std::span<const Vec2> poly, double tol) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 a = poly[i], b = poly[(i + 1) % n], c = poly[(i + 2) % n];
    Vec2 e = b - a;
    double len = norm(e);
    if (len == 0.0) return false;
    // Distance of c to the left of edge ab.
    if (cross(e, c - a) / len < -tol) return false;
  }
  return signed_area(poly) > 0.0;
}

double boundary_signed_distance(std::span<const Vec2> poly, Vec2 p) {
  const std::size_t n = poly.size();
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 a = poly[i], b = poly[(i + 1) % n];
    Vec2 e = b - a;
    double len = norm(e);
    if (len == 0.0) continue;
    // Positive when p is to the right of (outside) the edge.
    worst = std::max(worst, -cross(e, p - a) / len);
  }
  return worst;
}

bool contains_point(std::span<const Vec2> poly, Vec2 p, double tol) {
  return boundary_signed_distance(poly, p) <= tol;
}

Polygon clip_halfplane(std::span<const Vec2> poly, Vec2 origin, Vec2 normal, double tol) {
  Polygon out;
  const std::size_t n = poly.size();
  if (n == 0) return out;
  const double nn = norm(normal);
  out.reserve(n + 1);
  auto side = [&](Vec2 v) { return dot(v - origin, normal) / nn; };
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 a = poly[i], b = poly[(i + 1) % n];
    double sa = side(a), sb = side(b);
    if (sa <= tol) out.push_back(a);
    if ((sa < -tol && sb > tol) || (sa > tol && sb < -tol)) {
      double s = sa / (sa - sb);
      out.push_back(a + (b - a) * s);
    }
  }
  // Collapse duplicates produced by on-line vertices.
  Polygon dedup;
  dedup.reserve(out.size());
  for (auto v : out) {
    if (dedup.empty() || dist(dedup.back(), v) > tol) dedup.push_back(v);
  }
  while (dedup.size() > 1 && dist(dedup.front(), dedup.back()) <= tol) dedup.pop_back();
  return dedup;
}

Polygon rectangle(const Window& w) { return {w.lo, {w.hi.x, w.lo.y}, w.hi, {w.lo.x, w.hi.y}}; }

Polygon clip_to_window(std::span<const Vec2> poly, const Window& w, double tol) {
  Polygon p(poly.begin(), poly.end());
  p = clip_halfplane(p, w.lo, {-1, 0}, tol);
  p = clip_halfplane(p, w.hi, {1, 0}, tol);
  p = clip_halfplane(p, w.lo, {0, -1}, tol);
  p = clip_halfplane(p, w.hi, {0, 1}, tol);
  return p;
}

std::optional<Segment> clip_segment(const Segment& s, std::span<const Vec2> poly, double tol) {
  // Cyrus-Beck against each edge of a CCW convex polygon.
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = s.b - s.a;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 a = poly[i], b = poly[(i + 1) % n];
    Vec2 e = b - a;
    double len = norm(e);
    if (len == 0.0) continue;
    // Inside iff cross(e, x - a) / len >= -tol.
    double num = cross(e, s.a - a) / len + tol;
    double den = cross(e, d) / len;
    if (den == 0.0) {
      if (num < 0.0) return std::nullopt;
      continue;
    }
    double t = -num / den;
    if (den > 0.0) t0 = std::max(t0, t);
    else t1 = std::min(t1, t);
    if (t0 > t1) return std::nullopt;
  }
  return Segment{s.a + d * t0, s.a + d * t1};
}

std::optional<Segment> clip_segment(const Segment& s, const Window& w, double tol) {
  return clip_segment(s, rectangle(w), tol);
}

double point_segment_distance(Vec2 p, const Segment& s) {
  Vec2 d = s.b - s.a;
  double l2 = dot(d, d);
  if (l2 == 0.0) return dist(p, s.a);
  double t = std::clamp(dot(p - s.a, d) / l2, 0.0, 1.0);
  return dist(p, s.a + d * t);
}

double segment_distance(const Segment& s, const Segment& t) {
  auto orient = [](Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); };
  double o1 = orient(s.a, s.b, t.a), o2 = orient(s.a, s.b, t.b);
  double o3 = orient(t.a, t.b, s.a), o4 = orient(t.a, t.b, s.b);
  if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0)))
    return 0.0;
  return std::min({point_segment_distance(s.a, t), point_segment_distance(s.b, t),
                   point_segment_distance(t.a, s), point_segment_distance(t.b, s)});
}

std::string to_string(Vec2 v) {
  std::ostringstream os;
  os << "(" << v.x << ", " << v.y << ")";
  return os.str();
}

}  // namespace tessperc
