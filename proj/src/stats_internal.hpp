#pragma once

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace dynperc::detail {

// Welford accumulator with an order-preserving merge.
class RunningMoments {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const RunningMoments& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / total;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / total;
    n_ += o.n_;
  }

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

inline double normal_quantile(double q) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), q);
}

inline double chi_squared_survival(double stat, double dof) {
  if (dof <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(dof), stat));
}

// Wilson score interval for k successes in n trials at two-sided level 1 - a.
inline std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double a = 0.05) {
  if (n == 0) return {0.0, 1.0};
  const double z = normal_quantile(1.0 - a / 2.0);
  const double nn = static_cast<double>(n);
  const double ph = static_cast<double>(k) / nn;
  const double denom = 1.0 + z * z / nn;
  const double centre = (ph + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

// Ljung-Box statistic over lags 1..h and its chi-square(h) p-value.
inline std::pair<double, double> ljung_box(std::span<const double> x, std::size_t h) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  double q = 0.0;
  for (std::size_t k = 1; k <= h && k < n; ++k) {
    double ck = 0.0;
    for (std::size_t t = k; t < n; ++t) ck += (x[t] - mean) * (x[t - k] - mean);
    const double r = ck / c0;
    q += r * r / static_cast<double>(n - k);
  }
  q *= static_cast<double>(n) * static_cast<double>(n + 2);
  return {q, chi_squared_survival(q, static_cast<double>(h))};
}

// Pearson chi-square of observed counts against expected probabilities;
// bins whose expected count is below min_expected are pooled from the tail.
struct ChiSquareResult {
  double statistic;
  double dof;
  double p_value;
  std::size_t bins;
};

inline ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> expected_prob,
                                       double min_expected = 5.0) {
  double total = 0.0;
  for (double o : observed) total += o;
  std::vector<double> obs;
  std::vector<double> exp;
  double pooled_o = 0.0;
  double pooled_e = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    pooled_o += observed[i];
    pooled_e += expected_prob[i] * total;
    if (pooled_e >= min_expected) {
      obs.push_back(pooled_o);
      exp.push_back(pooled_e);
      pooled_o = 0.0;
      pooled_e = 0.0;
    }
  }
  // Remaining mass (including everything beyond the listed bins) joins the last bin.
  double listed = 0.0;
  for (double e : exp) listed += e;
  pooled_e = total - listed;
  if (!exp.empty()) {
    obs.back() += pooled_o;
    exp.back() += pooled_e;
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) stat += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
  const double dof = static_cast<double>(obs.size()) - 1.0;
  return {stat, dof, chi_squared_survival(stat, dof), obs.size()};
}

}  // namespace dynperc::detail
