#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tessperc {

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  double width() const { return hi - lo; }
};

//! Wilson score interval for k successes in n trials at normal quantile z.
Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z = kZ95);

/// Binomial proportion with its Wilson interval.
struct Proportion {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;

  double estimate() const { return trials ? static_cast<double>(successes) / trials : 0.0; }
  Interval ci(double z = kZ95) const { return wilson_interval(successes, trials, z); }
  //! Binomial standard error at the point estimate.
  double stderr_() const;
};

/// Neumaier-compensated accumulator. Merge is associative up to the compensation term and
/// exact for the integer-valued sums used in aggregation.
class KahanSum {
 public:
  void add(double v);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Sample mean with a normal-approximation confidence interval.
struct MeanEstimate {
  double mean = 0.0;
  double stddev = 0.0;
  std::uint64_t n = 0;

  double stderr_() const;
  Interval ci(double z = kZ95) const;
};

//! Mean of values taken in index order, so results do not depend on evaluation order.
MeanEstimate mean_estimate(std::span<const double> values);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace tessperc
