#pragma once

#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "tessperc/geometry.hpp"
#include "tessperc/rng.hpp"
#include "tessperc/stats.hpp"

namespace tessperc::pp {

/// A finite point set sampled in `window`.
struct PointConfiguration {
  std::vector<Vec2> points;
  Window window;

  std::size_t size() const { return points.size(); }
  //! Number of points in the closed window w.
  std::size_t count_in(const Window& w) const;
  PointConfiguration restricted(const Window& w) const;
};

struct PoissonParams {
  double intensity = 1.0;
};

struct MaternClusterParams {
  double parent_intensity = 1.0;
  double mean_offspring = 1.0;
  double radius = 0.1;
  bool include_parents = false;
};

/// Gaussian offsets are truncated at kThomasTruncation * sigma.
struct ThomasClusterParams {
  double parent_intensity = 1.0;
  double mean_offspring = 1.0;
  double sigma = 0.1;
  bool include_parents = false;
};

struct MaternHardcoreParams {
  double proposal_intensity = 1.0;
  double radius = 0.1;
};

struct PerturbedLatticeParams {
  double spacing = 1.0;
  double perturbation = 0.0;
};

struct PoissonLineParams {
  double intensity = 1.0;
};

inline constexpr double kThomasTruncation = 6.0;

enum class Kind { poisson, matern_cluster, thomas_cluster, matern_hardcore_II, perturbed_lattice, poisson_line };

std::string kind_name(Kind k);
Kind kind_from_name(const std::string& name);

/// Declarative point-process description; serializes as {"kind": ..., "params": {...}}.
struct ProcessSpec {
  std::variant<PoissonParams, MaternClusterParams, ThomasClusterParams, MaternHardcoreParams,
               PerturbedLatticeParams, PoissonLineParams>
      params;

  Kind kind() const { return static_cast<Kind>(params.index()); }
  //! Throws ParameterError unless all rates and scales are strictly positive.
  void validate() const;
  //! Mean number of points per unit area.
  double intensity() const;
  //! Reach of a point's influence: clusters seeded further than this outside a window cannot
  //! put points inside it.
  double required_buffer() const;

  static ProcessSpec poisson(double gamma) { return {PoissonParams{gamma}}; }
};

nlohmann::json to_json(const ProcessSpec& spec);
//! Strict parse: unknown keys and missing required keys are ParameterErrors.
ProcessSpec process_from_json(const nlohmann::json& j);

struct ClusterRealization {
  Vec2 parent;
  std::vector<Vec2> offspring;
};

PointConfiguration sample_poisson(double gamma, const Window& window, Stream& stream);

//! Parents Poisson(parent_intensity) on window+buffer; offspring restricted to window.
PointConfiguration sample_cluster_process(const ProcessSpec& spec, const Window& window, double buffer,
                                          Stream& stream);
//! Every cluster seeded in window+buffer, unrestricted.
std::vector<ClusterRealization> sample_clusters(const ProcessSpec& spec, const Window& window, double buffer,
                                                Stream& stream);

PointConfiguration sample_matern_hardcore(double gamma_proposal, double hardcore_radius, const Window& window,
                                          Stream& stream);
//! Retained intensity of the stationary Matern type-II process.
double matern_hardcore_intensity(double gamma_proposal, double hardcore_radius);

//! Sites spacing*(Z^2 + 1/2) with i.i.d. offsets uniform in [-perturbation/2, perturbation/2]^2.
PointConfiguration sample_perturbed_lattice(double spacing, double perturbation, const Window& window,
                                            Stream& stream);

/// Line {x : x . (cos theta, sin theta) = r}.
struct Line {
  double theta = 0.0;
  double r = 0.0;
};

/// Poisson line process hitting the disc of radius `disc_radius` about the origin, with line
/// measure intensity * dtheta * dr on [0, pi) x [-R, R]. Mean count = intensity * pi * 2R; a fixed
/// segment of length L is hit by 2 * intensity * L lines on average.
std::vector<Line> sample_poisson_lines(double line_intensity, double disc_radius, Stream& stream);

//! Dispatch on kind; applies the kind's own buffer so the result is edge-effect free.
PointConfiguration sample_process(const ProcessSpec& spec, const Window& window, Stream& stream);

struct VoidEstimate {
  double t = 0.0;
  Proportion empty;
  double estimate() const { return empty.estimate(); }
  Interval ci() const { return empty.ci(); }
};

/// P[no point in tQ] for each t, tQ scaled about Q's lower-left corner so regions nest.
std::vector<VoidEstimate> estimate_void_probability(const ProcessSpec& spec, const Window& q,
                                                    const std::vector<double>& t_values, std::size_t replicates,
                                                    std::uint64_t seed, int workers = 1);

struct LaplaceEstimate {
  MeanEstimate value;
  bool failed = false;
  std::string failure;
  //! exp(gamma (e^t - 1) area) for Poisson, the cluster bound for cluster processes; -1 otherwise.
  double analytic_bound = -1.0;
  std::string bound_note;
};

/// Monte Carlo E[exp(t * Phi(region))] for a union of disjoint boxes.
LaplaceEstimate estimate_laplace_functional(const ProcessSpec& spec, double t, const std::vector<Window>& region,
                                            std::size_t replicates, std::uint64_t seed, int workers = 1);

//! Cluster-process Laplace bound exp(gamma_0 * area * (E[e^{t N}] - 1)) with N ~ Poisson(mean_offspring).
double cluster_laplace_bound(const ProcessSpec& spec, double t, double region_area);

}  // namespace tessperc::pp
