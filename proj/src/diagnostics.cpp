#include "tessperc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>

namespace tessperc::diag {

Window GridField::box(BoxIndex v) const {
  return {{delta * (static_cast<double>(v.i) - 0.5), delta * (static_cast<double>(v.j) - 0.5)},
          {delta * (static_cast<double>(v.i) + 0.5), delta * (static_cast<double>(v.j) + 0.5)}};
}

double GridField::total() const {
  KahanSum s;
  for (double v : values) s.add(v);
  return s.value();
}

GridField make_field(double delta, const Window& region) {
  if (!(delta > 0.0)) throw ParameterError("grid width delta must be positive");
  const double eps = 1e-9;
  GridField f;
  f.delta = delta;
  f.i0 = static_cast<std::int64_t>(std::ceil(region.lo.x / delta + 0.5 - eps));
  f.j0 = static_cast<std::int64_t>(std::ceil(region.lo.y / delta + 0.5 - eps));
  const auto i1 = static_cast<std::int64_t>(std::floor(region.hi.x / delta - 0.5 + eps));
  const auto j1 = static_cast<std::int64_t>(std::floor(region.hi.y / delta - 0.5 + eps));
  f.nx = i1 - f.i0 + 1;
  f.ny = j1 - f.j0 + 1;
  if (f.nx <= 0 || f.ny <= 0) throw ParameterError("region holds no complete grid box");
  f.values.assign(static_cast<std::size_t>(f.nx * f.ny), 0.0);
  return f;
}

GridField compute_Y_field(const Tessellation& tess, double delta, const Window& region) {
  GridField f = make_field(delta, region);
  for (const auto& c : tess.cells) {
    const BoxIndex v{static_cast<std::int64_t>(std::floor(c.center.x / delta + 0.5)),
                     static_cast<std::int64_t>(std::floor(c.center.y / delta + 0.5))};
    if (f.contains(v)) f.values[f.flat(v)] += 1.0;
  }
  return f;
}

namespace {

double linf_reach(const Polygon& poly, Vec2 c) {
  double r = 0.0;
  for (auto x : poly) r = std::max(r, linf(x - c));
  return r;
}

bool interiors_meet(const Polygon& poly, const Window& box, double tol) {
  if (!bounding_box(poly).overlaps(box)) return false;
  return area(clip_to_window(poly, box)) > tol * box.diagonal();
}

}  // namespace

GridField compute_U_field(const Tessellation& tess, double delta, const Window& region) {
  GridField f = make_field(delta, region);
  const double tol = tess.tol;
  for (const auto& c : tess.cells) {
    const Window bb = bounding_box(c.polygon);
    const auto i0 = std::max(f.i0, static_cast<std::int64_t>(std::floor(bb.lo.x / delta + 0.5)));
    const auto i1 = std::min(f.i0 + f.nx - 1, static_cast<std::int64_t>(std::floor(bb.hi.x / delta + 0.5)));
    const auto j0 = std::max(f.j0, static_cast<std::int64_t>(std::floor(bb.lo.y / delta + 0.5)));
    const auto j1 = std::min(f.j0 + f.ny - 1, static_cast<std::int64_t>(std::floor(bb.hi.y / delta + 0.5)));
    for (auto j = j0; j <= j1; ++j)
      for (auto i = i0; i <= i1; ++i) {
        const BoxIndex v{i, j};
        auto& u = f.values[f.flat(v)];
        if (u > 0.0) continue;
        const Vec2 mid{delta * static_cast<double>(i), delta * static_cast<double>(j)};
        if (linf_reach(c.polygon, mid) <= 1.5 * delta + tol) continue;
        if (interiors_meet(c.polygon, f.box(v), tol)) u = 1.0;
      }
  }
  return f;
}

bool u_recheck(const Tessellation& tess, double delta, BoxIndex v) {
  const Vec2 mid{delta * static_cast<double>(v.i), delta * static_cast<double>(v.j)};
  const Window box{mid - Vec2{delta / 2, delta / 2}, mid + Vec2{delta / 2, delta / 2}};
  const Window block{mid - Vec2{1.5 * delta, 1.5 * delta}, mid + Vec2{1.5 * delta, 1.5 * delta}};
  const double tol = tess.tol;
  bool hit = false;
  tess.index.for_each_near(box.lo, box.hi, [&](std::uint32_t c) {
    if (hit) return;
    const auto& poly = tess.cells[c].polygon;
    if (!(area(clip_to_window(poly, box)) > tol * box.diagonal())) return;
    // The part of the cell outside the 3x3 block has positive area.
    const double outside = area(poly) - area(clip_to_window(poly, block));
    if (outside > tol * block.diagonal()) hit = true;
  });
  return hit;
}

std::string method_name(SearchMethod m) { return m == SearchMethod::exact ? "exact" : "local_search"; }

namespace {

struct Animal {
  std::vector<std::uint32_t> boxes;
  double sum = 0.0;
};

// Articulation points of the subgraph induced by `members` in the grid.
std::vector<char> articulation(const GridField& f, const std::vector<std::uint32_t>& members,
                               std::vector<std::int32_t>& pos) {
  const std::size_t n = members.size();
  for (std::size_t k = 0; k < n; ++k) pos[members[k]] = static_cast<std::int32_t>(k);
  std::vector<std::int32_t> disc(n, -1), low(n, 0), parent(n, -1);
  std::vector<char> cut(n, 0);
  std::int32_t timer = 0;
  std::function<void(std::size_t)> dfs = [&](std::size_t u) {
    disc[u] = low[u] = timer++;
    int children = 0;
    f.for_each_neighbor(members[u], [&](std::uint32_t w) {
      const auto pw = pos[w];
      if (pw < 0) return;
      const auto v = static_cast<std::size_t>(pw);
      if (disc[v] < 0) {
        parent[v] = static_cast<std::int32_t>(u);
        ++children;
        dfs(v);
        low[u] = std::min(low[u], low[v]);
        if (parent[u] >= 0 && low[v] >= disc[u]) cut[u] = 1;
      } else if (static_cast<std::int32_t>(v) != parent[u]) {
        low[u] = std::min(low[u], disc[v]);
      }
    });
    if (parent[u] < 0 && children > 1) cut[u] = 1;
  };
  if (n) dfs(0);
  for (auto m : members) pos[m] = -1;
  return cut;
}

class LocalSearch {
 public:
  LocalSearch(const GridField& f, std::size_t n, std::optional<std::uint32_t> anchor, Stream stream,
              std::size_t patience)
      : f_(f), n_(n), anchor_(anchor), rng_(stream), patience_(patience), in_(f.size(), 0), pos_(f.size(), -1),
        nb_count_(f.size(), 0) {}

  //! Growth from `seed` (greedy, or half-random when `randomized`), hill climbing over swaps, then
  //! iterated kicks until `patience` consecutive kicks fail to improve.
  Animal run(std::uint32_t seed, bool randomized) {
    reset();
    add(seed);
    while (members_.size() < n_) {
      const auto b = boundary();
      if (b.empty()) break;
      if (randomized && rng_.uniform() < 0.5) {
        add(b[pick(b.size())]);
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      std::vector<std::uint32_t> ties;
      for (auto x : b) {
        const double v = f_.values[x];
        if (v > best) {
          best = v;
          ties.assign(1, x);
        } else if (v == best) {
          ties.push_back(x);
        }
      }
      add(ties[pick(ties.size())]);
    }
    if (members_.size() < n_) return {members_, sum_};
    climb();
    Animal best{members_, sum_};
    std::size_t idle = 0;
    while (idle < patience_) {
      const std::size_t kicks = 1 + pick(3);
      for (std::size_t k = 0; k < kicks; ++k) random_swap();
      climb();
      if (sum_ > best.sum + 1e-12) {
        best = {members_, sum_};
        idle = 0;
        continue;
      }
      ++idle;
      // Equal value: keep drifting from here; worse: return to the best set.
      if (sum_ < best.sum - 1e-12) restore(best.boxes);
    }
    return best;
  }

 private:
  std::vector<std::uint32_t> removable() {
    const auto cut = articulation(f_, members_, pos_);
    std::vector<std::uint32_t> out;
    for (std::size_t k = 0; k < members_.size(); ++k)
      if (!cut[k] && (!anchor_ || members_[k] != *anchor_)) out.push_back(members_[k]);
    return out;
  }
  void climb() {
    for (std::size_t step = 0; step < 50 * n_ + 50; ++step) {
      const auto rem = removable();
      std::vector<std::uint32_t> b = boundary();
      if (rem.empty() || b.empty()) return;
      std::sort(b.begin(), b.end(), [&](std::uint32_t x, std::uint32_t y) {
        return f_.values[x] > f_.values[y] || (f_.values[x] == f_.values[y] && x < y);
      });
      double best_gain = 1e-12;
      std::pair<std::uint32_t, std::uint32_t> move{0, 0};
      bool found = false;
      for (auto r : rem)
        for (auto x : b) {
          if (!valid(x, r)) continue;
          const double g = f_.values[x] - f_.values[r];
          if (g > best_gain) {
            best_gain = g;
            move = {r, x};
            found = true;
          }
          break;
        }
      if (!found) return;
      swap(move.first, move.second);
    }
  }
  void random_swap() {
    const auto rem = removable();
    const auto b = boundary();
    if (rem.empty() || b.empty()) return;
    for (int attempt = 0; attempt < 16; ++attempt) {
      const auto r = rem[pick(rem.size())];
      const auto x = b[pick(b.size())];
      if (valid(x, r)) {
        swap(r, x);
        return;
      }
    }
  }
  void restore(const std::vector<std::uint32_t>& boxes) {
    reset();
    for (auto x : boxes) add(x);
  }
  void reset() {
    for (auto m : members_) {
      in_[m] = 0;
      f_.for_each_neighbor(m, [&](std::uint32_t w) { --nb_count_[w]; });
    }
    members_.clear();
    sum_ = 0.0;
  }
  void add(std::uint32_t x) {
    in_[x] = 1;
    members_.push_back(x);
    sum_ += f_.values[x];
    f_.for_each_neighbor(x, [&](std::uint32_t w) { ++nb_count_[w]; });
  }
  void remove(std::uint32_t x) {
    in_[x] = 0;
    members_.erase(std::find(members_.begin(), members_.end(), x));
    sum_ -= f_.values[x];
    f_.for_each_neighbor(x, [&](std::uint32_t w) { --nb_count_[w]; });
  }
  void swap(std::uint32_t r, std::uint32_t x) {
    remove(r);
    add(x);
  }
  bool adjacent(std::uint32_t a, std::uint32_t b) const {
    bool adj = false;
    f_.for_each_neighbor(a, [&](std::uint32_t w) { adj = adj || w == b; });
    return adj;
  }
  bool valid(std::uint32_t x, std::uint32_t r) const {
    return x != r && nb_count_[x] - (adjacent(x, r) ? 1 : 0) > 0;
  }
  std::vector<std::uint32_t> boundary() const {
    std::vector<std::uint32_t> b;
    for (auto m : members_)
      f_.for_each_neighbor(m, [&](std::uint32_t w) {
        if (!in_[w]) b.push_back(w);
      });
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }
  std::size_t pick(std::size_t k) { return static_cast<std::size_t>(rng_.uniform() * static_cast<double>(k)) % k; }

  const GridField& f_;
  std::size_t n_;
  std::optional<std::uint32_t> anchor_;
  Stream rng_;
  std::size_t patience_;
  std::vector<char> in_;
  std::vector<std::int32_t> pos_;
  std::vector<int> nb_count_;
  std::vector<std::uint32_t> members_;
  double sum_ = 0.0;
};

AnimalSearchResult to_result(const GridField& f, std::size_t n, const Animal& a, SearchMethod m, bool exact,
                             bool anchored) {
  AnimalSearchResult r;
  r.n = n;
  r.best_value = a.sum / static_cast<double>(n);
  for (auto k : a.boxes) r.best_animal.push_back(f.index(k));
  r.method = m;
  r.exact_flag = exact;
  r.anchored = anchored;
  return r;
}

}  // namespace

AnimalSearchResult greedy_animal_max(const GridField& field, std::size_t n, SearchMethod method,
                                     const AnimalSearchOptions& options) {
  if (n == 0) throw ParameterError("animal size must be >= 1");
  if (n > field.size()) throw ParameterError("field has fewer boxes than the animal size");
  std::optional<std::uint32_t> anchor;
  if (options.anchor) {
    if (!field.contains(*options.anchor)) throw ParameterError("anchor box lies outside the field");
    anchor = static_cast<std::uint32_t>(field.flat(*options.anchor));
  }
  const bool anchored = anchor.has_value();

  if (method == SearchMethod::exact) {
    Animal best{{}, -std::numeric_limits<double>::infinity()};
    std::vector<char> blocked(field.size(), 0);
    std::uint64_t remaining = options.budget;
    bool ok = true;
    auto search_from = [&](std::uint32_t root, bool min_root) {
      std::uint64_t used = 0;
      auto nbrs = [&](std::uint32_t v, auto&& fn) {
        field.for_each_neighbor(v, [&](std::uint32_t w) {
          if (!min_root || w > root) fn(w);
        });
      };
      const bool done = tess::visit_animals(nbrs, root, n, blocked, remaining, [&](const std::vector<std::uint32_t>& a) {
        ++used;
        if (a.size() != n) return;
        double s = 0.0;
        for (auto k : a) s += field.values[k];
        if (s > best.sum) best = {a, s};
      });
      remaining = used >= remaining ? 0 : remaining - used;
      return done;
    };
    if (anchored) ok = search_from(*anchor, false);
    else
      for (std::uint32_t r = 0; r < field.size() && ok; ++r) ok = search_from(r, true);
    if (ok && !best.boxes.empty()) return to_result(field, n, best, SearchMethod::exact, true, anchored);
  }

  const Stream base(options.seed, 0, StreamTag::search, static_cast<std::uint16_t>(n & 0xffff));
  LocalSearch ls(field, n, anchor, base, options.patience);
  std::vector<std::uint32_t> starts;
  if (anchored) {
    starts.assign(options.starts, *anchor);
  } else {
    std::vector<std::uint32_t> order(field.size());
    std::iota(order.begin(), order.end(), 0u);
    const std::size_t k = std::min(options.starts, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                        return field.values[a] > field.values[b] || (field.values[a] == field.values[b] && a < b);
                      });
    starts.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  }
  Animal best{{}, -std::numeric_limits<double>::infinity()};
  for (std::size_t k = 0; k < starts.size(); ++k) {
    Animal a = ls.run(starts[k], k > 0);
    if (a.boxes.size() == n && a.sum > best.sum) best = std::move(a);
  }
  if (best.boxes.empty()) throw ParameterError("no connected animal of the requested size fits in the field");
  return to_result(field, n, best, SearchMethod::local_search, false, anchored);
}

double packing_bound(double delta, double hardcore_radius) {
  const double s = delta * std::sqrt(2.0) / hardcore_radius + 1.0;
  return std::ceil(s * s);
}

TamenessReport tameness_report(const ExperimentSpec& spec, double delta, const std::vector<std::size_t>& n_schedule,
                               std::size_t replicates) {
  if (n_schedule.empty()) throw ParameterError("empty n schedule");
  for (std::size_t k = 1; k < n_schedule.size(); ++k)
    if (!(n_schedule[k] > n_schedule[k - 1])) throw ParameterError("n schedule must be increasing");
  const GridField probe = make_field(delta, spec.window);
  if (!probe.contains({0, 0})) throw ParameterError("the origin box must lie inside the window");
  if (probe.size() < n_schedule.back()) throw ParameterError("window too small for the largest animal");

  struct Row {
    std::vector<double> ya, yf, ua, uf;
    std::vector<char> exact;
  };
  auto rows = perc::run_replicates(spec, replicates, [&](const Tessellation& t, std::size_t rep) {
    const GridField y = compute_Y_field(t, delta, spec.window);
    const GridField u = compute_U_field(t, delta, spec.window);
    Row row;
    for (auto n : n_schedule) {
      const SearchMethod m = n <= 8 ? SearchMethod::exact : SearchMethod::local_search;
      AnimalSearchOptions anchored;
      anchored.anchor = BoxIndex{0, 0};
      anchored.starts = 12;
      anchored.patience = 100;
      anchored.seed = spec.seed ^ (static_cast<std::uint64_t>(rep) << 20);
      AnimalSearchOptions free_opts = anchored;
      free_opts.anchor.reset();
      free_opts.seed = anchored.seed + 1;
      const auto ya = greedy_animal_max(y, n, m, anchored);
      const auto yf = greedy_animal_max(y, n, m, free_opts);
      const auto ua = greedy_animal_max(u, n, m, anchored);
      const auto uf = greedy_animal_max(u, n, m, free_opts);
      row.ya.push_back(ya.best_value);
      row.yf.push_back(yf.best_value);
      row.ua.push_back(ua.best_value);
      row.uf.push_back(uf.best_value);
      row.exact.push_back(ya.exact_flag && yf.exact_flag && ua.exact_flag && uf.exact_flag);
    }
    return row;
  });
  TamenessReport out;
  out.delta = delta;
  const std::size_t k_max = n_schedule.size();
  std::vector<std::vector<double>> ya(k_max), yf(k_max), ua(k_max), uf(k_max);
  std::vector<char> exact(k_max, 1);
  for (const auto& r : rows) {
    if (!r) {
      ++out.failed;
      continue;
    }
    for (std::size_t k = 0; k < k_max; ++k) {
      ya[k].push_back(r->ya[k]);
      yf[k].push_back(r->yf[k]);
      ua[k].push_back(r->ua[k]);
      uf[k].push_back(r->uf[k]);
      exact[k] = exact[k] && r->exact[k];
    }
  }
  for (std::size_t k = 0; k < k_max; ++k) {
    out.y_curve.push_back({n_schedule[k], mean_estimate(ya[k]), mean_estimate(yf[k]), exact[k] != 0});
    out.u_curve.push_back({n_schedule[k], mean_estimate(ua[k]), mean_estimate(uf[k]), exact[k] != 0});
  }
  const std::size_t top = k_max / 2;
  double u_max = 0.0, u_max_anchored = 0.0;
  for (std::size_t k = 0; k < k_max; ++k) {
    u_max = std::max(u_max, out.u_curve[k].free.mean);
    u_max_anchored = std::max(u_max_anchored, out.u_curve[k].anchored.mean);
    if (k >= top) {
      out.y_limsup = std::max(out.y_limsup, out.y_curve[k].free.mean);
      out.u_limsup = std::max(out.u_limsup, out.u_curve[k].free.mean);
      out.u_limsup_anchored = std::max(out.u_limsup_anchored, out.u_curve[k].anchored.mean);
    }
  }
  // Flat or decreasing over the upper half, up to three standard errors.
  const auto& first = out.y_curve[top].free;
  out.t1_bounded = true;
  for (std::size_t k = top; k < k_max; ++k) {
    const auto& c = out.y_curve[k].free;
    const double se = std::hypot(first.stderr_(), c.stderr_());
    if (c.mean > first.mean + 3.0 * se) out.t1_bounded = false;
  }
  out.t2_margin = 1.0 - u_max;
  out.t2_margin_anchored = 1.0 - u_max_anchored;
  return out;
}

std::string family_name(EventFamily f) {
  switch (f) {
    case EventFamily::crossing: return "crossing";
    case EventFamily::void_region: return "void";
    case EventFamily::coin: return "coin";
  }
  return "?";
}

EventFamily family_from_name(const std::string& name) {
  if (name == "crossing") return EventFamily::crossing;
  if (name == "void") return EventFamily::void_region;
  if (name == "coin") return EventFamily::coin;
  throw ParameterError("event family must be crossing, void or coin; got '" + name + "'");
}

GapPoint gap_from_pairs(double t, const std::vector<std::pair<bool, bool>>& pairs) {
  GapPoint g;
  g.t = t;
  std::uint64_t n11 = 0, n10 = 0, n01 = 0;
  for (auto [a, b] : pairs) {
    if (a && b) ++n11;
    else if (a) ++n10;
    else if (b) ++n01;
  }
  const auto n = static_cast<std::uint64_t>(pairs.size());
  g.joint = {n11, n};
  g.e = {n11 + n10, n};
  g.e_prime = {n11 + n01, n};
  g.product = g.e.estimate() * g.e_prime.estimate();
  const double d = g.joint.estimate() - g.product;
  g.gap = std::abs(d);
  if (n == 0) return g;
  const double nn = static_cast<double>(n);
  const double p11 = static_cast<double>(n11) / nn, p10 = static_cast<double>(n10) / nn,
               p01 = static_cast<double>(n01) / nn;
  const double p1 = g.e.estimate(), p2 = g.e_prime.estimate();
  // Delta method on the multinomial (p11, p10, p01, p00).
  const double g11 = 1.0 - p1 - p2, g10 = -p2, g01 = -p1;
  const double m1 = p11 * g11 + p10 * g10 + p01 * g01;
  const double m2 = p11 * g11 * g11 + p10 * g10 * g10 + p01 * g01 * g01;
  g.stderr_ = std::sqrt(std::max(0.0, m2 - m1 * m1) / nn);
  const double lo = d - kZ95 * g.stderr_, hi = d + kZ95 * g.stderr_;
  if (lo <= 0.0 && hi >= 0.0) g.ci = {0.0, std::max(-lo, hi)};
  else g.ci = {std::min(std::abs(lo), std::abs(hi)), std::max(std::abs(lo), std::abs(hi))};
  return g;
}

namespace {

SmpGapCurve collect(const std::vector<double>& ts, const std::vector<std::optional<std::vector<std::uint8_t>>>& rows) {
  SmpGapCurve out;
  std::vector<std::vector<std::pair<bool, bool>>> pairs(ts.size());
  for (const auto& r : rows) {
    if (!r) {
      ++out.failed;
      out.indicators.emplace_back();
      continue;
    }
    out.indicators.push_back(*r);
    for (std::size_t k = 0; k < ts.size(); ++k) pairs[k].emplace_back(((*r)[k] & 1) != 0, ((*r)[k] & 2) != 0);
  }
  for (std::size_t k = 0; k < ts.size(); ++k) out.points.push_back(gap_from_pairs(ts[k], pairs[k]));
  return out;
}

}  // namespace

SmpGapCurve smp_gap(const ExperimentSpec& spec, EventFamily family, const Window& q, const Window& q_prime,
                    const std::vector<double>& t_schedule, std::size_t replicates, const SmpOptions& options) {
  if (q.intersects(q_prime)) throw ParameterError("Q and Q' must be disjoint");
  if (t_schedule.empty()) throw ParameterError("empty t schedule");
  std::vector<std::pair<Window, Window>> regions;
  const Window slack = spec.window.expanded(1e-9 * spec.window.diagonal());
  for (double t : t_schedule) {
    const Window a = q.scaled(t), b = q_prime.scaled(t);
    if (family != EventFamily::coin && (!slack.contains(a) || !slack.contains(b)))
      throw ParameterError("tQ or tQ' leaves the core window at t = " + std::to_string(t));
    regions.emplace_back(a, b);
  }
  const std::size_t nt = t_schedule.size();
  if (family == EventFamily::crossing) {
    auto rows = perc::run_replicates(spec, replicates, [&](const Tessellation& tess, std::size_t rep) {
      Stream s = perc::coloring_stream(spec.seed, rep);
      const perc::Coloring c = perc::color(tess, options.p, s);
      std::vector<std::uint8_t> bits(nt, 0);
      for (std::size_t k = 0; k < nt; ++k) {
        const bool e = perc::crossing(perc::restrict_to(tess, regions[k].first, spec.adjacency), c,
                                      perc::Direction::horizontal, perc::Color::black);
        const bool f = perc::crossing(perc::restrict_to(tess, regions[k].second, spec.adjacency), c,
                                      perc::Direction::horizontal, perc::Color::black);
        bits[k] = static_cast<std::uint8_t>((e ? 1 : 0) | (f ? 2 : 0));
      }
      return bits;
    });
    return collect(t_schedule, rows);
  }
  auto rows = replicate_map(replicates, spec.workers, [&](std::size_t rep) -> std::optional<std::vector<std::uint8_t>> {
    std::vector<std::uint8_t> bits(nt, 0);
    if (family == EventFamily::coin) {
      for (std::size_t k = 0; k < nt; ++k) {
        Stream a(spec.seed, rep, StreamTag::coin, static_cast<std::uint16_t>(2 * k));
        Stream b(spec.seed, rep, StreamTag::coin, static_cast<std::uint16_t>(2 * k + 1));
        bits[k] = static_cast<std::uint8_t>((a.uniform() < options.coin ? 1 : 0) | (b.uniform() < options.coin ? 2 : 0));
      }
      return bits;
    }
    Stream s(spec.seed, rep, StreamTag::points);
    const auto cfg = pp::sample_process(spec.source.process, spec.window, s);
    for (std::size_t k = 0; k < nt; ++k) {
      const bool e = cfg.count_in(regions[k].first) == 0;
      const bool f = cfg.count_in(regions[k].second) == 0;
      bits[k] = static_cast<std::uint8_t>((e ? 1 : 0) | (f ? 2 : 0));
    }
    return bits;
  });
  return collect(t_schedule, rows);
}

bool line_crosses_horizontally(const pp::Line& line, const Window& rect) {
  const double s = std::sin(line.theta), c = std::cos(line.theta);
  if (std::abs(s) < 1e-15) return false;
  const double y0 = (line.r - rect.lo.x * c) / s;
  const double y1 = (line.r - rect.hi.x * c) / s;
  return y0 >= rect.lo.y && y0 <= rect.hi.y && y1 >= rect.lo.y && y1 <= rect.hi.y;
}

SmpGapCurve line_process_smp_failure(double line_intensity, const std::vector<double>& t_schedule,
                                     std::size_t replicates, double angle_tol, std::uint64_t seed, int workers) {
  if (t_schedule.empty()) throw ParameterError("empty t schedule");
  if (!(angle_tol > 0.0)) throw ParameterError("angle_tol must be positive");
  const Window q1{{0, 0}, {1, 1}}, q2{{1.5, 0}, {2.5, 1}};
  double t_max = 0.0;
  for (double t : t_schedule) {
    if (!(t > 0.0)) throw ParameterError("t values must be positive");
    t_max = std::max(t_max, t);
  }
  // Lines meeting t_max * ([0, 2.5] x [0, 1]) all hit this disc.
  const double radius = t_max * std::hypot(2.5, 1.0) * (1.0 + 1e-9);
  const std::size_t nt = t_schedule.size();
  auto rows = replicate_map(replicates, workers, [&](std::size_t rep) -> std::optional<std::vector<std::uint8_t>> {
    Stream s(seed, rep, StreamTag::lines);
    const auto lines = pp::sample_poisson_lines(line_intensity, radius, s);
    std::vector<std::uint8_t> bits(nt, 0);
    for (const auto& l : lines) {
      if (!(std::abs(l.theta - std::numbers::pi / 2.0) < angle_tol)) continue;
      for (std::size_t k = 0; k < nt; ++k) {
        const double t = t_schedule[k];
        if (line_crosses_horizontally(l, q1.scaled(t))) bits[k] |= 1;
        if (line_crosses_horizontally(l, q2.scaled(t))) bits[k] |= 2;
      }
    }
    return bits;
  });
  return collect(t_schedule, rows);
}

MixtureReport mixture_nonergodic_demo(double p, const Window& window, std::size_t replicates_per_component,
                                      std::uint64_t seed, int workers) {
  if (!(p > 0.0 && p < 1.0) && p != 0.0 && p != 1.0) throw ParameterError("p must lie in [0, 1]");
  ExperimentSpec sq;
  sq.source.kind = perc::SourceKind::lattice;
  sq.source.lattice = tess::LatticeKind::square;
  sq.source.spacing = 1.0;
  sq.source.random_shift = true;
  sq.window = window;
  sq.seed = seed;
  sq.workers = workers;
  ExperimentSpec hx = sq;
  hx.source.lattice = tess::LatticeKind::hexagonal;
  // Unit cell area: (sqrt(3) / 2) * spacing^2 = 1.
  hx.source.spacing = std::sqrt(2.0 / std::sqrt(3.0));
  hx.seed = seed ^ 0x9e3779b97f4a7c15ULL;
  const perc::CrossingQuery query{window, perc::Direction::horizontal, perc::Color::black, tess::Adjacency::face};
  MixtureReport out;
  out.p = p;
  out.square = perc::estimate_crossing_prob(sq, query, p, replicates_per_component);
  out.hexagonal = perc::estimate_crossing_prob(hx, query, p, replicates_per_component);
  out.separation = std::abs(out.square.estimate() - out.hexagonal.estimate());
  out.pooled = 0.5 * (out.square.estimate() + out.hexagonal.estimate());
  return out;
}

std::vector<BoxIndex> square_cycle(std::size_t length) {
  if (length < 8 || length % 8 != 0) throw ParameterError("cycle length must be a positive multiple of 8");
  const auto k = static_cast<std::int64_t>(length / 8);
  std::vector<BoxIndex> out;
  for (std::int64_t i = -k; i < k; ++i) out.push_back({i, -k});
  for (std::int64_t j = -k; j < k; ++j) out.push_back({k, j});
  for (std::int64_t i = k; i > -k; --i) out.push_back({i, k});
  for (std::int64_t j = k; j > -k; --j) out.push_back({-k, j});
  return out;
}

double peierls_bound(double p, double c3, double c4, std::size_t length) {
  const double a = 81.0 * c4 / (1.0 - c3);
  return std::pow(1.0 - std::pow(p, a), (1.0 - c3) * static_cast<double>(length) / 9.0);
}

PeierlsReport peierls_probe(const ExperimentSpec& spec, double p, double delta, double c3, double c4,
                            std::size_t replicates, const std::vector<std::size_t>& lengths) {
  PeierlsReport out;
  if (!(c3 < 1.0)) {
    out.declined = true;
    out.reason = "empirical c3 = " + std::to_string(c3) + " >= 1: the boundary bound gives no decay";
    return out;
  }
  if (!(c4 >= 0.0)) throw ParameterError("c4 must be >= 0");
  if (!(delta > 0.0)) throw ParameterError("delta must be positive");
  std::vector<std::vector<BoxIndex>> cycles;
  for (auto len : lengths) {
    cycles.push_back(square_cycle(len));
    const double reach = (static_cast<double>(len / 8) + 0.5) * delta;
    if (!spec.window.contains(Window{{-reach, -reach}, {reach, reach}}))
      throw ParameterError("cycle of length " + std::to_string(len) + " leaves the window");
  }
  auto rows = perc::run_replicates(spec, replicates, [&](const Tessellation& tess, std::size_t rep) {
    Stream s = perc::coloring_stream(spec.seed, rep);
    const perc::Coloring c = perc::color(tess, p, s);
    std::vector<char> hit;
    for (const auto& cyc : cycles) {
      bool all = true;
      for (auto v : cyc) {
        const Vec2 mid{delta * static_cast<double>(v.i), delta * static_cast<double>(v.j)};
        const Window box{mid - Vec2{delta / 2, delta / 2}, mid + Vec2{delta / 2, delta / 2}};
        bool white = false;
        tess.index.for_each_near(box.lo, box.hi, [&](std::uint32_t cell) {
          if (white || c.black(cell)) return;
          if (interiors_meet(tess.cells[cell].polygon, box, tess.tol)) white = true;
        });
        if (!white) {
          all = false;
          break;
        }
      }
      hit.push_back(all ? 1 : 0);
    }
    return hit;
  });
  out.points.resize(lengths.size());
  for (std::size_t k = 0; k < lengths.size(); ++k) {
    out.points[k].length = lengths[k];
    out.points[k].bound = peierls_bound(p, c3, c4, lengths[k]);
  }
  for (const auto& r : rows) {
    if (!r) {
      ++out.failed;
      continue;
    }
    for (std::size_t k = 0; k < lengths.size(); ++k) {
      ++out.points[k].all_white_hit.trials;
      out.points[k].all_white_hit.successes += (*r)[k];
    }
  }
  for (auto& pt : out.points) pt.margin = pt.bound - pt.all_white_hit.ci().lo;
  return out;
}

}  // namespace tessperc::diag
