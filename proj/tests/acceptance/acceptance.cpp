#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tessperc/diagnostics.hpp"
#include "tessperc/harness.hpp"

using namespace tessperc;

namespace {

// Tolerances.
constexpr double kSigmas = 3.0;
constexpr double kPvPcLo = 0.47, kPvPcHi = 0.53;
constexpr double kSquarePc = 0.5927;
constexpr double kSquareSlack = 0.01;
constexpr double kThetaFinal = 0.05;
constexpr double kSpanningMin = 0.5;
constexpr double kUniquenessMax = 0.05;
constexpr double kMixtureSeparation = 0.2;
constexpr double kLineFloor = 0.1464;
constexpr double kAnimalPlateau = 0.15;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

perc::ExperimentSpec pv(double lo, double hi, std::uint64_t seed) {
  perc::ExperimentSpec s;
  s.window = Window{{lo, lo}, {hi, hi}};
  s.seed = seed;
  s.workers = resolve_workers(0);
  return s;
}

Outcome void_probability() {
  const auto est = pp::estimate_void_probability(pp::ProcessSpec::poisson(1.0), Window{{0, 0}, {1, 1}}, {1, 2, 3},
                                                 10000, 101, resolve_workers(0));
  Outcome o{true, ""};
  for (const auto& e : est) {
    const double truth = std::exp(-e.t * e.t);
    const bool ok = e.empty.ci(kSigmas).contains(truth);
    o.pass = o.pass && ok;
    o.detail += fmt("t=%g est=%.4f truth=%.4f; ", e.t, e.estimate(), truth);
  }
  return o;
}

Outcome laplace_functional() {
  const int w = resolve_workers(0);
  const auto poi = pp::estimate_laplace_functional(pp::ProcessSpec::poisson(1.0), 0.5, {Window{{0, 0}, {2, 2}}}, 10000,
                                                   102, w);
  const double truth = std::exp(4.0 * (std::exp(0.5) - 1.0));
  const bool poi_ok = !poi.failed && poi.value.ci(kSigmas).contains(truth);
  const pp::ProcessSpec cl{pp::MaternClusterParams{0.5, 2.0, 0.2, false}};
  const auto clu = pp::estimate_laplace_functional(cl, 0.5, {Window{{0, 0}, {2, 2}}}, 10000, 103, w);
  const bool clu_ok = !clu.failed && clu.value.ci().lo <= clu.analytic_bound;
  return {poi_ok && clu_ok, fmt("poisson %.4f vs %.4f; cluster %.4f (ci lo %.4f) <= bound %.4f", poi.value.mean, truth,
                                clu.value.mean, clu.value.ci().lo, clu.analytic_bound)};
}

Outcome dichotomy() {
  const auto spec = pv(-15, 15, 104);
  const auto out = perc::run_replicates(spec, 200, [&](const tess::Tessellation& t, std::size_t rep) {
    Stream s = perc::coloring_stream(spec.seed, rep);
    const auto c = perc::color(t, 0.5, s);
    const bool h = perc::crossing(t, c, {spec.window, perc::Direction::horizontal, perc::Color::black, tess::Adjacency::face});
    const bool v = perc::crossing(t, c, {spec.window, perc::Direction::vertical, perc::Color::white, tess::Adjacency::star});
    return h != v;
  });
  std::size_t good = 0, built = 0;
  for (const auto& r : out)
    if (r) ++built, good += *r;
  return {built == 200 && good == built, fmt("%zu of %zu instances satisfy the exclusive or", good, built)};
}

//! Crossing threshold of an L x L square-lattice site configuration: the smallest p at which a
//! black left-right path exists, by adding sites in increasing uniform order into a union-find.
double square_threshold(int L, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> val(static_cast<std::size_t>(L * L));
  for (auto& v : val) v = u(rng);
  std::vector<int> order(val.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return val[a] < val[b]; });
  const int left = L * L, right = L * L + 1;
  std::vector<int> parent(static_cast<std::size_t>(L * L + 2));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  std::vector<char> open(val.size(), 0);
  for (int k : order) {
    open[k] = 1;
    const int x = k % L, y = k / L;
    auto join = [&](int a, int b) { parent[find(a)] = find(b); };
    if (x == 0) join(k, left);
    if (x == L - 1) join(k, right);
    if (x > 0 && open[k - 1]) join(k, k - 1);
    if (x < L - 1 && open[k + 1]) join(k, k + 1);
    if (y > 0 && open[k - L]) join(k, k - L);
    if (y < L - 1 && open[k + L]) join(k, k + L);
    if (find(left) == find(right)) return val[k];
  }
  return 1.0;
}

Outcome estimate_pc() {
  const auto pvspec = pv(-20, 20, 105);
  const auto pve = perc::estimate_pc(pvspec, 0.02, 400);
  const bool pv_ok = pve.lo <= kPvPcHi && pve.hi >= kPvPcLo;

  auto sq = pv(0, 40, 106);
  sq.source.kind = perc::SourceKind::lattice;
  sq.source.lattice = tess::LatticeKind::square;
  sq.source.random_shift = false;
  const auto sqe = perc::estimate_pc(sq, 0.02, 400);

  std::mt19937_64 rng(107);
  std::vector<double> th(2000);
  for (auto& v : th) v = square_threshold(40, rng);
  std::sort(th.begin(), th.end());
  const double oracle = 0.5 * (th[999] + th[1000]);
  auto near = [&](double v) { return v >= sqe.lo - kSquareSlack && v <= sqe.hi + kSquareSlack; };
  const bool sq_ok = near(kSquarePc) && near(oracle) && std::abs(oracle - kSquarePc) <= kSquareSlack;
  return {pv_ok && sq_ok, fmt("voronoi [%.4f, %.4f]; square [%.4f, %.4f], array oracle median %.4f", pve.lo, pve.hi,
                              sqe.lo, sqe.hi, oracle)};
}

Outcome theta_and_spanning() {
  const auto th = perc::estimate_theta(pv(-25, 25, 108), 0.45, {5, 10, 20}, 400);
  const double a = th.results[0].estimate(), b = th.results[1].estimate(), c = th.results[2].estimate();
  const bool th_ok = a > b && b > c && c <= kThetaFinal;
  const auto spec = pv(-20, 20, 109);
  const auto sp = perc::estimate_crossing_prob(
      spec, {spec.window, perc::Direction::horizontal, perc::Color::black, tess::Adjacency::face}, 0.55, 400);
  const bool sp_ok = sp.estimate() > kSpanningMin;
  return {th_ok && sp_ok, fmt("theta %.4f > %.4f > %.4f; spanning at 0.55 %.4f", a, b, c, sp.estimate())};
}

Outcome uniqueness() {
  const auto spec = pv(-20, 20, 110);
  const auto h = perc::count_spanning_clusters(spec, 0.8, spec.window, 200);
  const double f = h.at_least(2).estimate();
  return {f <= kUniquenessMax, fmt("P[count >= 2] = %.4f over %llu", f, static_cast<unsigned long long>(h.replicates))};
}

Outcome mixture() {
  const auto r = diag::mixture_nonergodic_demo(0.62, Window{{-25, -25}, {25, 25}}, 200, 111, resolve_workers(0));
  return {r.separation >= kMixtureSeparation, fmt("square %.4f hexagonal %.4f separation %.4f", r.square.estimate(),
                                                  r.hexagonal.estimate(), r.separation)};
}

Outcome recursion() {
  auto spec = pv(0, 90, 112);
  spec.window = Window{{0, 0}, {90, 30}};
  const auto r = perc::verify_crossing_recursion(spec, 0.7, 10, 400);
  return {r.holds, fmt("lhs %.4f rhs %.4f slack %.4f margin %.4f", r.lhs.estimate(), r.rhs, r.slack, r.margin)};
}

Outcome smp_trend() {
  const auto curve = diag::smp_gap(pv(-5, 5, 113), diag::EventFamily::crossing,
                                   Window{{-0.2505, -0.125}, {-0.0005, 0.125}}, Window{{0.0005, -0.125}, {0.2505, 0.125}},
                                   {1, 2, 4, 8}, 1000);
  bool dec = true;
  std::string d = "gaps";
  for (std::size_t k = 0; k < curve.points.size(); ++k) {
    d += fmt(" %.4f", curve.points[k].gap);
    if (k && !(curve.points[k].gap < curve.points[k - 1].gap)) dec = false;
  }
  const auto line = diag::line_process_smp_failure(1.0, {8}, 4000, 0.1, 114, resolve_workers(0));
  const auto& g = line.points[0];
  const bool line_ok = g.ci.lo > 0.0 && g.gap >= kLineFloor - kSigmas * g.stderr_;
  return {dec && line_ok, d + fmt("; line gap %.4f (ci lo %.4f, floor %.4f)", g.gap, g.ci.lo, kLineFloor)};
}

Outcome tameness() {
  const auto r = diag::tameness_report(pv(-40, 40, 115), 2.0, {4, 8, 16, 32, 64}, 200);
  auto hc = pv(-40, 40, 116);
  const double radius = 0.4;
  hc.source.process = pp::ProcessSpec{pp::MaternHardcoreParams{3.0, radius}};
  const auto h = diag::tameness_report(hc, 2.0, {4, 8, 16, 32, 64}, 10);
  const double bound = diag::packing_bound(2.0, radius);
  bool packed = true;
  for (const auto& pt : h.y_curve) packed = packed && pt.free.mean <= bound;
  return {r.t2_margin > 0.0 && packed, fmt("t2 margin %.4f (anchored %.4f); hard-core Y limsup %.3f <= %.0f",
                                           r.t2_margin, r.t2_margin_anchored, h.y_limsup, bound)};
}

//! Rooted Z^2 animals by growing every set one site at a time and deduplicating sorted sets.
std::vector<std::uint64_t> naive_z2_animals(int n_max) {
  using Set = std::vector<std::pair<int, int>>;
  std::vector<std::uint64_t> out;
  std::set<Set> level{{{0, 0}}};
  for (int n = 1; n <= n_max; ++n) {
    out.push_back(level.size());
    std::set<Set> next;
    for (const auto& a : level)
      for (auto [x, y] : a)
        for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
          const std::pair<int, int> c{x + dx, y + dy};
          if (std::find(a.begin(), a.end(), c) != a.end()) continue;
          Set b = a;
          b.insert(std::lower_bound(b.begin(), b.end(), c), c);
          next.insert(std::move(b));
        }
    level = std::move(next);
  }
  return out;
}

std::vector<double> log_ratio(const tess::AnimalCounts& a) {
  std::vector<double> r;
  for (std::size_t k = 0; k < a.counts.size(); ++k)
    r.push_back(std::log(static_cast<double>(a.counts[k])) / static_cast<double>(k + 1));
  return r;
}

Outcome animals() {
  const auto sq = tess::build_lattice_tessellation(tess::LatticeKind::square, 1.0, {0, 0}, Window{{-12, -12}, {12, 12}});
  const auto z = tess::enumerate_animals(sq.face, sq.face.root, 10);
  const auto oracle = naive_z2_animals(4);
  const bool z_ok = z.complete && z.counts.size() == 10 && std::equal(oracle.begin(), oracle.end(), z.counts.begin()) &&
                    oracle == std::vector<std::uint64_t>{1, 4, 18, 76};
  const auto r = log_ratio(z);
  bool below = z_ok;
  for (double v : r) below = below && v < std::log(7.0);
  const bool plateau = below && std::abs(r[9] - r[7]) <= kAnimalPlateau;

  const auto spec = pv(-15, 15, 117);
  const auto t = spec.source.build(spec.window, spec.seed, 0);
  const auto a = tess::enumerate_animals(t.face, t.face.root, 10, 200'000'000);
  std::string d = fmt("Z^2 %llu %llu %llu %llu; log|A_n|/n", static_cast<unsigned long long>(z.counts[0]),
                      static_cast<unsigned long long>(z.counts[1]), static_cast<unsigned long long>(z.counts[2]),
                      static_cast<unsigned long long>(z.counts[3]));
  for (double v : r) d += fmt(" %.3f", v);
  d += "; voronoi";
  for (double v : log_ratio(a)) d += fmt(" %.3f", v);
  return {z_ok && below && plateau, d};
}

Outcome determinism() {
  const char* text = R"({"op": "crossing", "window": {"lo": [-8, -8], "hi": [8, 8]},
    "p": [0.3, 0.45, 0.5, 0.55, 0.7], "replicates": 200, "seed": 118})";
  auto c = harness::parse_config(text);
  const auto root = std::filesystem::temp_directory_path() / "tessperc_acceptance_determinism";
  std::filesystem::remove_all(root);
  std::vector<std::string> bytes;
  for (int w : {1, 4}) {
    c.spec.workers = w;
    const auto r = harness::sweep(c, root / std::to_string(w));
    std::string all;
    for (const auto& f : r.files) {
      std::ifstream in(f, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      all += ss.str();
    }
    bytes.push_back(all);
  }
  std::filesystem::remove_all(root);
  return {!bytes[0].empty() && bytes[0] == bytes[1], fmt("%zu bytes, workers 1 vs 4", bytes[0].size())};
}

struct Criterion {
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {"void probability of poisson", void_probability},
    {"laplace functional", laplace_functional},
    {"crossing dichotomy", dichotomy},
    {"critical probability estimate", estimate_pc},
    {"subcritical decay and supercritical spanning", theta_and_spanning},
    {"uniqueness of the spanning cluster", uniqueness},
    {"two-lattice mixture separation", mixture},
    {"crossing recursion", recursion},
    {"mixing gap trend and line-process gap", smp_trend},
    {"tameness margin and packing bound", tameness},
    {"animal counts", animals},
    {"determinism across workers", determinism},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-12)")->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);
  int failures = 0;
  for (int k = 1; k <= 12; ++k) {
    if (only && k != only) continue;
    Outcome o;
    try {
      o = kCriteria[k - 1].run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("[%s] criterion %d: %s | %s\n", o.pass ? "PASS" : "FAIL", k, kCriteria[k - 1].name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures ? 1 : 0;
}
