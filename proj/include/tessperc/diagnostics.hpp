#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tessperc/percolation.hpp"

namespace tessperc::diag {

using perc::ExperimentSpec;
using tess::Tessellation;

/// Integer box index v; its box is delta * (v + [-1/2, 1/2]^2).
struct BoxIndex {
  std::int64_t i = 0;
  std::int64_t j = 0;
  bool operator==(const BoxIndex&) const = default;
};

/// Per-box values on the boxes of a rectangle of indices [i0, i0 + nx) x [j0, j0 + ny).
struct GridField {
  double delta = 1.0;
  std::int64_t i0 = 0;
  std::int64_t j0 = 0;
  std::int64_t nx = 0;
  std::int64_t ny = 0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  std::size_t flat(BoxIndex v) const { return static_cast<std::size_t>((v.j - j0) * nx + (v.i - i0)); }
  BoxIndex index(std::size_t k) const {
    return {i0 + static_cast<std::int64_t>(k) % nx, j0 + static_cast<std::int64_t>(k) / nx};
  }
  bool contains(BoxIndex v) const { return v.i >= i0 && v.i < i0 + nx && v.j >= j0 && v.j < j0 + ny; }
  double at(BoxIndex v) const { return values[flat(v)]; }
  Window box(BoxIndex v) const;
  double total() const;
  //! Calls fn(k) for each 4-neighbor of flat index k inside the field.
  template <class Fn>
  void for_each_neighbor(std::size_t k, Fn&& fn) const {
    const auto i = static_cast<std::int64_t>(k) % nx, j = static_cast<std::int64_t>(k) / nx;
    if (i > 0) fn(static_cast<std::uint32_t>(k - 1));
    if (i + 1 < nx) fn(static_cast<std::uint32_t>(k + 1));
    if (j > 0) fn(static_cast<std::uint32_t>(k - static_cast<std::size_t>(nx)));
    if (j + 1 < ny) fn(static_cast<std::uint32_t>(k + static_cast<std::size_t>(nx)));
  }
};

//! Empty field over the boxes contained in `region`.
GridField make_field(double delta, const Window& region);

/// Y_v: number of cell centers in the half-open box delta * (v + [-1/2, 1/2)^2).
GridField compute_Y_field(const Tessellation& tess, double delta, const Window& region);

/// U_v = 1 iff one cell's interior meets the interior of v's box and the interior of the union of
/// boxes at l-infinity index distance >= 2 from v.
GridField compute_U_field(const Tessellation& tess, double delta, const Window& region);
//! Direct recheck of U_v for one box by clipping every nearby cell.
bool u_recheck(const Tessellation& tess, double delta, BoxIndex v);

enum class SearchMethod { exact, local_search };
std::string method_name(SearchMethod m);

struct AnimalSearchResult {
  std::size_t n = 0;
  double best_value = 0.0;
  std::vector<BoxIndex> best_animal;
  SearchMethod method = SearchMethod::exact;
  bool exact_flag = false;
  bool anchored = false;
};

struct AnimalSearchOptions {
  //! Restrict to animals containing this box; nullopt searches the whole field.
  std::optional<BoxIndex> anchor;
  //! Animals visited by exact enumeration before falling back to local search.
  std::uint64_t budget = 20'000'000;
  std::size_t starts = 32;
  std::size_t patience = 200;
  std::uint64_t seed = 0;
};

/// Maximum over connected n-box animals of the field average.
AnimalSearchResult greedy_animal_max(const GridField& field, std::size_t n, SearchMethod method,
                                     const AnimalSearchOptions& options = {});

struct CurvePoint {
  std::size_t n = 0;
  MeanEstimate anchored;
  MeanEstimate free;
  bool exact = true;
};

struct TamenessReport {
  double delta = 0.0;
  std::vector<CurvePoint> y_curve;
  std::vector<CurvePoint> u_curve;
  //! Running maxima over the upper half of the schedule.
  double y_limsup = 0.0;
  double u_limsup = 0.0;
  double u_limsup_anchored = 0.0;
  //! Free Y-curve flat or decreasing over the upper half of the schedule.
  bool t1_bounded = false;
  //! 1 - largest free U-curve value.
  double t2_margin = 0.0;
  //! 1 - largest anchored U-curve value.
  double t2_margin_anchored = 0.0;
  std::size_t failed = 0;
};

TamenessReport tameness_report(const ExperimentSpec& spec, double delta, const std::vector<std::size_t>& n_schedule,
                               std::size_t replicates);

//! ceil((delta sqrt(2) / r + 1)^2): the most points with pairwise distance >= r in a delta-box.
double packing_bound(double delta, double hardcore_radius);

enum class EventFamily { crossing, void_region, coin };
std::string family_name(EventFamily f);
EventFamily family_from_name(const std::string& name);

struct GapPoint {
  double t = 0.0;
  Proportion joint;
  Proportion e;
  Proportion e_prime;
  double product = 0.0;
  double gap = 0.0;
  //! Delta-method interval for |P[E n E'] - P[E] P[E']|.
  Interval ci;
  double stderr_ = 0.0;
};

struct SmpGapCurve {
  std::vector<GapPoint> points;
  std::size_t failed = 0;
  //! Per replicate and t: bit 0 = E, bit 1 = E'.
  std::vector<std::vector<std::uint8_t>> indicators;
};

//! Gap statistics from paired indicators.
GapPoint gap_from_pairs(double t, const std::vector<std::pair<bool, bool>>& pairs);

struct SmpOptions {
  double p = 0.5;
  //! Success probability of the injected coin events.
  double coin = 0.5;
};

/// Events determined by tQ and tQ' (scaled about the origin) for each t, one tessellation per
/// replicate shared across t.
SmpGapCurve smp_gap(const ExperimentSpec& spec, EventFamily family, const Window& q, const Window& q_prime,
                    const std::vector<double>& t_schedule, std::size_t replicates, const SmpOptions& options = {});

/// Near-horizontal Poisson lines: E_t = a line with |theta - pi/2| < angle_tol meets both vertical
/// sides of t[0,1]^2; E'_t the same for t([1.5, 2.5] x [0, 1]).
SmpGapCurve line_process_smp_failure(double line_intensity, const std::vector<double>& t_schedule,
                                     std::size_t replicates, double angle_tol, std::uint64_t seed, int workers = 1);

//! Whether the line crosses rect from its left side to its right side.
bool line_crosses_horizontally(const pp::Line& line, const Window& rect);

struct MixtureReport {
  double p = 0.0;
  perc::PercResult square;
  perc::PercResult hexagonal;
  double separation = 0.0;
  //! Two-point mixture: pooled spanning frequency with equal component weights.
  double pooled = 0.0;
};

/// Left-right black spanning of `window` on a randomly shifted unit-area square lattice and a
/// randomly shifted unit-area hexagonal lattice.
MixtureReport mixture_nonergodic_demo(double p, const Window& window, std::size_t replicates_per_component,
                                      std::uint64_t seed, int workers = 1);

struct PeierlsPoint {
  std::size_t length = 0;
  Proportion all_white_hit;
  double bound = 0.0;
  double margin = 0.0;
};

struct PeierlsReport {
  bool declined = false;
  std::string reason;
  std::vector<PeierlsPoint> points;
  std::size_t failed = 0;
};

//! Square ring of boxes at l-infinity index distance k = length / 8 around the origin box.
std::vector<BoxIndex> square_cycle(std::size_t length);
double peierls_bound(double p, double c3, double c4, std::size_t length);

/// Probability that every box of the cycle is met by a white cell, against the bound.
PeierlsReport peierls_probe(const ExperimentSpec& spec, double p, double delta, double c3, double c4,
                            std::size_t replicates, const std::vector<std::size_t>& lengths = {8, 16, 32});

}  // namespace tessperc::diag
