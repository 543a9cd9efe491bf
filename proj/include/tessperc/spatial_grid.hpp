#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tessperc/geometry.hpp"

namespace tessperc {

/// Uniform bucket grid over a window holding point indices.
class SpatialGrid {
 public:
  SpatialGrid(const Window& w, double cell, std::span<const Vec2> pts) : window_(w), cell_(cell) {
    nx_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(w.width() / cell)));
    ny_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(w.height() / cell)));
    start_.assign(static_cast<std::size_t>(nx_ * ny_ + 1), 0);
    std::vector<std::int64_t> bucket(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      bucket[i] = index(bx(pts[i].x), by(pts[i].y));
      ++start_[static_cast<std::size_t>(bucket[i]) + 1];
    }
    for (std::size_t b = 1; b < start_.size(); ++b) start_[b] += start_[b - 1];
    items_.resize(pts.size());
    std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i)
      items_[fill[static_cast<std::size_t>(bucket[i])]++] = static_cast<std::uint32_t>(i);
  }

  std::int64_t bx(double x) const {
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((x - window_.lo.x) / cell_)), 0, nx_ - 1);
  }
  std::int64_t by(double y) const {
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((y - window_.lo.y) / cell_)), 0, ny_ - 1);
  }
  std::int64_t nx() const { return nx_; }
  std::int64_t ny() const { return ny_; }
  double cell() const { return cell_; }

  std::span<const std::uint32_t> bucket(std::int64_t ix, std::int64_t iy) const {
    if (ix < 0 || iy < 0 || ix >= nx_ || iy >= ny_) return {};
    auto b = static_cast<std::size_t>(index(ix, iy));
    return {items_.data() + start_[b], items_.data() + start_[b + 1]};
  }

  //! Calls fn(index) for every point in buckets meeting the closed box [lo, hi].
  template <class Fn>
  void for_each_in_box(Vec2 lo, Vec2 hi, Fn&& fn) const {
    for (std::int64_t iy = by(lo.y); iy <= by(hi.y); ++iy)
      for (std::int64_t ix = bx(lo.x); ix <= bx(hi.x); ++ix)
        for (auto i : bucket(ix, iy)) fn(i);
  }

 private:
  std::int64_t index(std::int64_t ix, std::int64_t iy) const { return iy * nx_ + ix; }

  Window window_;
  double cell_;
  std::int64_t nx_ = 1;
  std::int64_t ny_ = 1;
  std::vector<std::uint32_t> start_;
  std::vector<std::uint32_t> items_;
};

}  // namespace tessperc
