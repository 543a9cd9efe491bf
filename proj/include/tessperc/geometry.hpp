#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tessperc/errors.hpp"

namespace tessperc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }
constexpr double linf(Vec2 a) { return std::max(a.x < 0 ? -a.x : a.x, a.y < 0 ? -a.y : a.y); }
//! Lexicographic (x, then y) ordering.
constexpr bool lex_less(Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }

/// Axis-aligned closed rectangle [lo, hi].
struct Window {
  Vec2 lo;
  Vec2 hi;

  Window() = default;
  Window(Vec2 lo_, Vec2 hi_);

  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  double area() const { return width() * height(); }
  double diagonal() const { return std::hypot(width(), height()); }
  Vec2 center() const { return (lo + hi) * 0.5; }

  bool contains(Vec2 p) const { return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y; }
  //! Half-open membership [lo, hi).
  bool contains_half_open(Vec2 p) const { return p.x >= lo.x && p.x < hi.x && p.y >= lo.y && p.y < hi.y; }
  bool contains(const Window& w) const { return contains(w.lo) && contains(w.hi); }
  bool intersects(const Window& w) const;
  //! Interiors overlap.
  bool overlaps(const Window& w) const;

  Window expanded(double by) const;
  Window translated(Vec2 s) const { return {lo + s, hi + s}; }
  //! {t x : x in this}; scaling about the global origin.
  Window scaled(double t) const;
  //! Scaling about the lower-left corner, so windows nest in t.
  Window scaled_about_corner(double t) const;

  bool operator==(const Window&) const = default;
};

/// Side of a rectangle. Bit values are combined into masks.
enum Side : unsigned { kLeft = 1, kRight = 2, kBottom = 4, kTop = 8 };

struct Segment {
  Vec2 a;
  Vec2 b;
  double length() const { return dist(a, b); }
};

Segment side_segment(const Window& w, Side s);

using Polygon = std::vector<Vec2>;

double signed_area(std::span<const Vec2> poly);
double area(std::span<const Vec2> poly);
Vec2 centroid(std::span<const Vec2> poly);
Window bounding_box(std::span<const Vec2> poly);
double polygon_diameter(std::span<const Vec2> poly);
bool is_convex_ccw(std::span<const Vec2> poly, double tol);

//! Point in closed convex CCW polygon, with boundary slack `tol`.
bool contains_point(std::span<const Vec2> poly, Vec2 p, double tol = 0.0);
//! Signed distance of p from the boundary of a convex CCW polygon (negative inside).
double boundary_signed_distance(std::span<const Vec2> poly, Vec2 p);

/// Clip a convex polygon against the half-plane {y : dot(y - origin, normal) <= 0}.
/// Vertices within `tol` of the line count as inside.
Polygon clip_halfplane(std::span<const Vec2> poly, Vec2 origin, Vec2 normal, double tol);
Polygon clip_to_window(std::span<const Vec2> poly, const Window& w, double tol = 0.0);

//! Part of segment s inside closed convex polygon; nullopt when disjoint.
std::optional<Segment> clip_segment(const Segment& s, std::span<const Vec2> poly, double tol);
std::optional<Segment> clip_segment(const Segment& s, const Window& w, double tol);

double point_segment_distance(Vec2 p, const Segment& s);
double segment_distance(const Segment& s, const Segment& t);

Polygon rectangle(const Window& w);

std::string to_string(Vec2 v);

}  // namespace tessperc
