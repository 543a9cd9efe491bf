#include "tessperc/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace tessperc {

Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // Exact endpoints at k = 0 and k = n.
  double lo = k == 0 ? 0.0 : std::max(0.0, center - half);
  double hi = k == n ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

double Proportion::stderr_() const {
  if (trials == 0) return 0.0;
  double p = estimate();
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

void KahanSum::add(double v) {
  double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v)) comp_ += (sum_ - t) + v;
  else comp_ += (v - t) + sum_;
  sum_ = t;
}

double MeanEstimate::stderr_() const {
  return n > 1 ? stddev / std::sqrt(static_cast<double>(n)) : 0.0;
}

Interval MeanEstimate::ci(double z) const {
  double h = z * stderr_();
  return {mean - h, mean + h};
}

MeanEstimate mean_estimate(std::span<const double> values) {
  MeanEstimate m;
  m.n = values.size();
  if (values.empty()) return m;
  KahanSum s;
  for (double v : values) s.add(v);
  m.mean = s.value() / static_cast<double>(m.n);
  if (m.n > 1) {
    KahanSum ss;
    for (double v : values) ss.add((v - m.mean) * (v - m.mean));
    m.stddev = std::sqrt(ss.value() / static_cast<double>(m.n - 1));
  }
  return m;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares: need >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("least_squares: constant abscissa");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

}  // namespace tessperc
