#include "tessperc/point_process.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "tessperc/json_util.hpp"
#include "tessperc/parallel.hpp"
#include "tessperc/spatial_grid.hpp"

namespace tessperc::pp {

namespace {

std::uint64_t poisson_count(double mean, Stream& stream) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<std::uint64_t> d(mean);
  return d(stream);
}

Vec2 uniform_in(const Window& w, Stream& s) { return {s.uniform(w.lo.x, w.hi.x), s.uniform(w.lo.y, w.hi.y)}; }

Vec2 uniform_in_disc(double radius, Stream& s) {
  double r = radius * std::sqrt(s.uniform());
  double a = 2.0 * std::numbers::pi * s.uniform();
  return {r * std::cos(a), r * std::sin(a)};
}

// Box-Muller pair, rejected beyond the truncation radius.
Vec2 truncated_gaussian(double sigma, Stream& s) {
  const double cut = kThomasTruncation * sigma;
  for (;;) {
    double u1 = 1.0 - s.uniform();
    double u2 = s.uniform();
    double rad = sigma * std::sqrt(-2.0 * std::log(u1));
    if (rad > cut) continue;
    double a = 2.0 * std::numbers::pi * u2;
    return {rad * std::cos(a), rad * std::sin(a)};
  }
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ParameterError(std::string(what) + " must be strictly positive and finite");
}

}  // namespace

std::size_t PointConfiguration::count_in(const Window& w) const {
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [&](Vec2 p) { return w.contains(p); }));
}

PointConfiguration PointConfiguration::restricted(const Window& w) const {
  PointConfiguration out{{}, w};
  for (auto p : points)
    if (w.contains(p)) out.points.push_back(p);
  return out;
}

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::poisson: return "poisson";
    case Kind::matern_cluster: return "matern_cluster";
    case Kind::thomas_cluster: return "thomas_cluster";
    case Kind::matern_hardcore_II: return "matern_hardcore_II";
    case Kind::perturbed_lattice: return "perturbed_lattice";
    case Kind::poisson_line: return "poisson_line";
  }
  return "?";
}

Kind kind_from_name(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(Kind::poisson_line); ++k)
    if (kind_name(static_cast<Kind>(k)) == name) return static_cast<Kind>(k);
  throw ConfigKeyError({"kind"}, "unknown process kind '" + name + "'");
}

void ProcessSpec::validate() const {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PoissonParams>) {
          require_positive(p.intensity, "intensity");
        } else if constexpr (std::is_same_v<T, MaternClusterParams>) {
          require_positive(p.parent_intensity, "parent_intensity");
          if (!(p.mean_offspring >= 0.0)) throw ParameterError("mean_offspring must be >= 0");
          require_positive(p.radius, "radius");
        } else if constexpr (std::is_same_v<T, ThomasClusterParams>) {
          require_positive(p.parent_intensity, "parent_intensity");
          if (!(p.mean_offspring >= 0.0)) throw ParameterError("mean_offspring must be >= 0");
          require_positive(p.sigma, "sigma");
        } else if constexpr (std::is_same_v<T, MaternHardcoreParams>) {
          require_positive(p.proposal_intensity, "proposal_intensity");
          require_positive(p.radius, "radius");
        } else if constexpr (std::is_same_v<T, PerturbedLatticeParams>) {
          require_positive(p.spacing, "spacing");
          if (!(p.perturbation >= 0.0)) throw ParameterError("perturbation must be >= 0");
        } else {
          if (!(p.intensity >= 0.0)) throw ParameterError("line intensity must be >= 0");
        }
      },
      params);
}

double ProcessSpec::intensity() const {
  return std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PoissonParams>) return p.intensity;
        else if constexpr (std::is_same_v<T, MaternClusterParams> || std::is_same_v<T, ThomasClusterParams>)
          return p.parent_intensity * (p.mean_offspring + (p.include_parents ? 1.0 : 0.0));
        else if constexpr (std::is_same_v<T, MaternHardcoreParams>)
          return matern_hardcore_intensity(p.proposal_intensity, p.radius);
        else if constexpr (std::is_same_v<T, PerturbedLatticeParams>) return 1.0 / (p.spacing * p.spacing);
        else throw ParameterError("a line process has no point intensity");
      },
      params);
}

double ProcessSpec::required_buffer() const {
  return std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, MaternClusterParams>) return p.radius;
        else if constexpr (std::is_same_v<T, ThomasClusterParams>) return kThomasTruncation * p.sigma;
        else if constexpr (std::is_same_v<T, MaternHardcoreParams>) return p.radius;
        else if constexpr (std::is_same_v<T, PerturbedLatticeParams>) return p.perturbation / 2.0;
        else return 0.0;
      },
      params);
}

nlohmann::json to_json(const ProcessSpec& spec) {
  nlohmann::json params = std::visit(
      [](const auto& p) -> nlohmann::json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PoissonParams>) return {{"intensity", p.intensity}};
        else if constexpr (std::is_same_v<T, MaternClusterParams>)
          return {{"parent_intensity", p.parent_intensity}, {"mean_offspring", p.mean_offspring},
                  {"radius", p.radius}, {"include_parents", p.include_parents}};
        else if constexpr (std::is_same_v<T, ThomasClusterParams>)
          return {{"parent_intensity", p.parent_intensity}, {"mean_offspring", p.mean_offspring},
                  {"sigma", p.sigma}, {"include_parents", p.include_parents},
                  {"truncation_sigmas", kThomasTruncation}};
        else if constexpr (std::is_same_v<T, MaternHardcoreParams>)
          return {{"proposal_intensity", p.proposal_intensity}, {"radius", p.radius}};
        else if constexpr (std::is_same_v<T, PerturbedLatticeParams>)
          return {{"spacing", p.spacing}, {"perturbation", p.perturbation}};
        else return {{"intensity", p.intensity}};
      },
      spec.params);
  return {{"kind", kind_name(spec.kind())}, {"params", params}};
}

ProcessSpec process_from_json(const nlohmann::json& j) {
  StrictObject obj(j);
  Kind kind = kind_from_name(obj.string("kind"));
  const auto& pj = obj.at("params");
  obj.finish();
  ProcessSpec spec = nested("params", [&]() -> ProcessSpec {
    StrictObject p(pj);
    ProcessSpec s;
    switch (kind) {
      case Kind::poisson: s.params = PoissonParams{p.positive("intensity")}; break;
      case Kind::matern_cluster:
        s.params = MaternClusterParams{p.positive("parent_intensity"), p.number("mean_offspring"),
                                       p.positive("radius"), p.boolean_or("include_parents", false)};
        break;
      case Kind::thomas_cluster: {
        ThomasClusterParams t{p.positive("parent_intensity"), p.number("mean_offspring"), p.positive("sigma"),
                              p.boolean_or("include_parents", false)};
        // Accepted for round-trips; the truncation is fixed.
        if (p.has("truncation_sigmas") && p.number("truncation_sigmas") != kThomasTruncation)
          throw ConfigKeyError({"truncation_sigmas"}, "truncation_sigmas is fixed at 6");
        s.params = t;
        break;
      }
      case Kind::matern_hardcore_II:
        s.params = MaternHardcoreParams{p.positive("proposal_intensity"), p.positive("radius")};
        break;
      case Kind::perturbed_lattice:
        s.params = PerturbedLatticeParams{p.positive("spacing"), p.number_or("perturbation", 0.0)};
        break;
      case Kind::poisson_line: s.params = PoissonLineParams{p.number("intensity")}; break;
    }
    p.finish();
    return s;
  });
  try {
    spec.validate();
  } catch (const ConfigKeyError&) {
    throw;
  } catch (const ParameterError& e) {
    throw ConfigKeyError({"params"}, e.what());
  }
  return spec;
}

PointConfiguration sample_poisson(double gamma, const Window& window, Stream& stream) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("Poisson intensity must be positive");
  if (!(window.area() > 0.0)) throw ParameterError("degenerate sampling window");
  PointConfiguration cfg{{}, window};
  const auto n = poisson_count(gamma * window.area(), stream);
  cfg.points.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) cfg.points.push_back(uniform_in(window, stream));
  return cfg;
}

std::vector<ClusterRealization> sample_clusters(const ProcessSpec& spec, const Window& window, double buffer,
                                                Stream& stream) {
  spec.validate();
  double gamma0 = 0.0, mu = 0.0, reach = 0.0;
  bool gaussian = false;
  double scale = 0.0;
  if (const auto* m = std::get_if<MaternClusterParams>(&spec.params)) {
    gamma0 = m->parent_intensity;
    mu = m->mean_offspring;
    reach = m->radius;
    scale = m->radius;
  } else if (const auto* t = std::get_if<ThomasClusterParams>(&spec.params)) {
    gamma0 = t->parent_intensity;
    mu = t->mean_offspring;
    reach = kThomasTruncation * t->sigma;
    scale = t->sigma;
    gaussian = true;
  } else {
    throw ParameterError("sample_cluster_process needs a matern_cluster or thomas_cluster spec");
  }
  if (buffer < reach)
    throw ParameterError("cluster buffer " + std::to_string(buffer) + " is smaller than the cluster reach " +
                         std::to_string(reach));
  const Window seeded = window.expanded(buffer);
  std::vector<ClusterRealization> clusters;
  const auto n_parents = poisson_count(gamma0 * seeded.area(), stream);
  clusters.reserve(n_parents);
  for (std::uint64_t i = 0; i < n_parents; ++i) {
    ClusterRealization c;
    c.parent = uniform_in(seeded, stream);
    const auto k = poisson_count(mu, stream);
    c.offspring.reserve(k);
    for (std::uint64_t j = 0; j < k; ++j)
      c.offspring.push_back(c.parent + (gaussian ? truncated_gaussian(scale, stream) : uniform_in_disc(scale, stream)));
    clusters.push_back(std::move(c));
  }
  return clusters;
}

PointConfiguration sample_cluster_process(const ProcessSpec& spec, const Window& window, double buffer,
                                          Stream& stream) {
  bool parents = false;
  if (const auto* m = std::get_if<MaternClusterParams>(&spec.params)) parents = m->include_parents;
  if (const auto* t = std::get_if<ThomasClusterParams>(&spec.params)) parents = t->include_parents;
  PointConfiguration cfg{{}, window};
  for (const auto& c : sample_clusters(spec, window, buffer, stream)) {
    if (parents && window.contains(c.parent)) cfg.points.push_back(c.parent);
    for (auto p : c.offspring)
      if (window.contains(p)) cfg.points.push_back(p);
  }
  return cfg;
}

double matern_hardcore_intensity(double gamma_proposal, double hardcore_radius) {
  const double a = std::numbers::pi * hardcore_radius * hardcore_radius;
  return (1.0 - std::exp(-gamma_proposal * a)) / a;
}

PointConfiguration sample_matern_hardcore(double gamma_proposal, double hardcore_radius, const Window& window,
                                          Stream& stream) {
  if (!(hardcore_radius > 0.0)) throw ParameterError("hard-core radius must be positive");
  // Proposals within r of the window compete with points inside it.
  const Window outer = window.expanded(hardcore_radius);
  PointConfiguration proposals = sample_poisson(gamma_proposal, outer, stream);
  std::vector<double> marks(proposals.size());
  for (auto& m : marks) m = stream.uniform();
  SpatialGrid grid(outer, hardcore_radius, proposals.points);
  const double r2 = hardcore_radius * hardcore_radius;
  PointConfiguration out{{}, window};
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    const Vec2 p = proposals.points[i];
    if (!window.contains(p)) continue;
    bool survives = true;
    grid.for_each_in_box(p - Vec2{hardcore_radius, hardcore_radius}, p + Vec2{hardcore_radius, hardcore_radius},
                         [&](std::uint32_t j) {
                           if (j == i || !survives) return;
                           Vec2 d = proposals.points[j] - p;
                           if (dot(d, d) < r2 && marks[j] < marks[i]) survives = false;
                         });
    if (survives) out.points.push_back(p);
  }
  return out;
}

// Sites sit at spacing * (Z^2 + 1/2) so an aligned window of side L holds (L / spacing)^2 of them.
PointConfiguration sample_perturbed_lattice(double spacing, double perturbation, const Window& window,
                                            Stream& stream) {
  if (!(spacing > 0.0)) throw ParameterError("lattice spacing must be positive");
  if (!(perturbation >= 0.0)) throw ParameterError("perturbation must be >= 0");
  const double half = perturbation / 2.0;
  const auto i0 = static_cast<std::int64_t>(std::floor((window.lo.x - half) / spacing - 0.5)) - 1;
  const auto i1 = static_cast<std::int64_t>(std::ceil((window.hi.x + half) / spacing - 0.5)) + 1;
  const auto j0 = static_cast<std::int64_t>(std::floor((window.lo.y - half) / spacing - 0.5)) - 1;
  const auto j1 = static_cast<std::int64_t>(std::ceil((window.hi.y + half) / spacing - 0.5)) + 1;
  PointConfiguration out{{}, window};
  for (auto j = j0; j <= j1; ++j) {
    for (auto i = i0; i <= i1; ++i) {
      Vec2 site{(static_cast<double>(i) + 0.5) * spacing, (static_cast<double>(j) + 0.5) * spacing};
      if (perturbation > 0.0) site = site + Vec2{stream.uniform(-half, half), stream.uniform(-half, half)};
      if (window.contains_half_open(site)) out.points.push_back(site);
    }
  }
  return out;
}

std::vector<Line> sample_poisson_lines(double line_intensity, double disc_radius, Stream& stream) {
  if (!(disc_radius > 0.0)) throw ParameterError("disc radius must be positive");
  if (!(line_intensity >= 0.0)) throw ParameterError("line intensity must be >= 0");
  std::vector<Line> lines;
  const auto n = poisson_count(line_intensity * std::numbers::pi * 2.0 * disc_radius, stream);
  lines.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    double theta = std::numbers::pi * stream.uniform();
    double r = stream.uniform(-disc_radius, disc_radius);
    lines.push_back({theta, r});
  }
  return lines;
}

PointConfiguration sample_process(const ProcessSpec& spec, const Window& window, Stream& stream) {
  spec.validate();
  switch (spec.kind()) {
    case Kind::poisson: return sample_poisson(std::get<PoissonParams>(spec.params).intensity, window, stream);
    case Kind::matern_cluster:
    case Kind::thomas_cluster: return sample_cluster_process(spec, window, spec.required_buffer(), stream);
    case Kind::matern_hardcore_II: {
      const auto& h = std::get<MaternHardcoreParams>(spec.params);
      return sample_matern_hardcore(h.proposal_intensity, h.radius, window, stream);
    }
    case Kind::perturbed_lattice: {
      const auto& l = std::get<PerturbedLatticeParams>(spec.params);
      return sample_perturbed_lattice(l.spacing, l.perturbation, window, stream);
    }
    case Kind::poisson_line: break;
  }
  throw ParameterError("poisson_line is a line process; it has no point configuration");
}

std::vector<VoidEstimate> estimate_void_probability(const ProcessSpec& spec, const Window& q,
                                                    const std::vector<double>& t_values, std::size_t replicates,
                                                    std::uint64_t seed, int workers) {
  if (replicates < 100) throw ParameterError("estimate_void_probability needs >= 100 replicates");
  double t_max = 0.0;
  for (double t : t_values) {
    if (!(t >= 0.0)) throw ParameterError("t values must be >= 0");
    t_max = std::max(t_max, t);
  }
  std::vector<Window> regions;
  for (double t : t_values) regions.push_back(t > 0.0 ? q.scaled_about_corner(t) : q);
  // Per replicate: bitmask over t of "tQ empty" is expressed as the number of points in each region.
  auto per_rep = replicate_map(replicates, workers, [&](std::size_t rep) {
    std::vector<char> empty(t_values.size(), 1);
    if (t_max <= 0.0) return empty;
    Stream s(seed, rep, StreamTag::points);
    const auto cfg = sample_process(spec, q.scaled_about_corner(t_max), s);
    for (std::size_t k = 0; k < t_values.size(); ++k)
      if (t_values[k] > 0.0) empty[k] = cfg.count_in(regions[k]) == 0;
    return empty;
  });
  std::vector<VoidEstimate> out;
  for (std::size_t k = 0; k < t_values.size(); ++k) {
    VoidEstimate e;
    e.t = t_values[k];
    e.empty.trials = replicates;
    for (const auto& r : per_rep) e.empty.successes += r[k] ? 1 : 0;
    out.push_back(e);
  }
  return out;
}

double cluster_laplace_bound(const ProcessSpec& spec, double t, double region_area) {
  double gamma0 = 0.0, mu = 0.0;
  bool parents = false;
  if (const auto* m = std::get_if<MaternClusterParams>(&spec.params)) {
    gamma0 = m->parent_intensity;
    mu = m->mean_offspring;
    parents = m->include_parents;
  } else if (const auto* th = std::get_if<ThomasClusterParams>(&spec.params)) {
    gamma0 = th->parent_intensity;
    mu = th->mean_offspring;
    parents = th->include_parents;
  } else {
    throw ParameterError("cluster_laplace_bound needs a cluster process");
  }
  // Cluster size N = Poisson(mu) offspring (+1 parent): E[e^{tN}] = e^{t*parents} exp(mu (e^t - 1)).
  const double mgf = std::exp((parents ? t : 0.0) + mu * std::expm1(t));
  return std::exp(gamma0 * region_area * (mgf - 1.0));
}

LaplaceEstimate estimate_laplace_functional(const ProcessSpec& spec, double t, const std::vector<Window>& region,
                                            std::size_t replicates, std::uint64_t seed, int workers) {
  if (replicates < 1000) throw ParameterError("estimate_laplace_functional needs >= 1000 replicates");
  if (region.empty()) throw ParameterError("empty region");
  if (!(t >= 0.0)) throw ParameterError("t must be >= 0");
  Window hull = region.front();
  double region_area = 0.0;
  for (const auto& w : region) {
    hull = {{std::min(hull.lo.x, w.lo.x), std::min(hull.lo.y, w.lo.y)},
            {std::max(hull.hi.x, w.hi.x), std::max(hull.hi.y, w.hi.y)}};
    region_area += w.area();
  }
  LaplaceEstimate out;
  if (spec.kind() == Kind::poisson) {
    out.analytic_bound = std::exp(std::get<PoissonParams>(spec.params).intensity * std::expm1(t) * region_area);
    out.bound_note = "exact Poisson Laplace functional";
  } else if (spec.kind() == Kind::matern_cluster || spec.kind() == Kind::thomas_cluster) {
    out.analytic_bound = cluster_laplace_bound(spec, t, region_area);
    out.bound_note =
        "cluster bound evaluated with the full region area (n boxes of side delta give n * delta^2)";
  }
  if (t == 0.0) {
    out.value = {1.0, 0.0, replicates};
    return out;
  }
  auto values = replicate_map(replicates, workers, [&](std::size_t rep) {
    Stream s(seed, rep, StreamTag::points);
    const auto cfg = sample_process(spec, hull, s);
    std::size_t n = 0;
    for (auto p : cfg.points)
      for (const auto& w : region)
        if (w.contains_half_open(p)) {
          ++n;
          break;
        }
    return std::exp(t * static_cast<double>(n));
  });
  for (double v : values) {
    if (!std::isfinite(v)) {
      out.failed = true;
      out.failure = "exp(t * count) overflowed";
      return out;
    }
  }
  out.value = mean_estimate(values);
  if (!std::isfinite(out.value.mean) || !std::isfinite(out.value.stddev)) {
    out.failed = true;
    out.failure = "accumulated mean overflowed";
  }
  return out;
}

}  // namespace tessperc::pp
