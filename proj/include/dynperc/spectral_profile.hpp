#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dynperc/analysis.hpp"
#include "dynperc/chain.hpp"

namespace dynperc {

/// One row of a spectral-profile table. Infinite values mean no nonempty set
/// of mass <= eps exists.
struct ProfilePoint {
  double eps;
  double lambda;   // Lambda(eps): variance normalization
  double lambda0;  // Lambda_0(eps): L2 normalization
};

struct SpectralProfileTable {
  std::vector<ProfilePoint> points;  // ascending eps
  bool exact = false;
};

struct ProfileOptions {
  std::size_t exact_subset_limit = 20;
  bool require_exact = false;
  std::size_t workers = 1;
  std::uint64_t seed = 1;
  std::size_t sampler_steps = 2000;
};

/// Lambda and Lambda_0 as step functions of eps, built from per-subset values.
///
/// Exact mode evaluates lambda(A) and the variance-normalized minimum for all
/// 2^N - 2 proper subsets. Sampled mode runs a Metropolis search over subsets
/// per grid point and only yields upper bounds.
class SubsetProfile {
 public:
  struct Step {
    double mass;     // breakpoint: smallest eps at which this step applies
    double lambda;   // prefix minimum over sets of mass <= this breakpoint
    double lambda0;
  };

  static SubsetProfile enumerate(const ChainSpec& c, std::size_t workers = 1);
  static SubsetProfile sample(const ChainSpec& c, std::span<const double> grid, std::uint64_t seed,
                              std::size_t steps);

  bool exact() const { return exact_; }
  double gap() const { return gap_; }
  double lambda(double eps) const;
  double lambda0(double eps) const;

  /// Values at the requested grid points.
  SpectralProfileTable table(std::span<const double> grid) const;
  /// Table whose rows are exactly the breakpoints (plus eps = 1), so that a
  /// right-continuous step reading of it reproduces Lambda exactly.
  SpectralProfileTable breakpoint_table() const;
  const std::vector<Step>& steps() const { return steps_; }

 private:
  std::vector<Step> steps_;  // ascending mass, values non-increasing
  double gap_ = 0.0;
  double min_proper_lambda0_ = 0.0;
  bool exact_ = false;
};

/// Throws kTooLarge when require_exact is set and N exceeds the limit.
SpectralProfileTable spectral_profile(const ChainSpec& c, std::span<const double> eps_grid,
                                      const ProfileOptions& opts = {});

/// Right-continuous step reading of a table; +infinity below its first row.
double profile_lambda_at(const SpectralProfileTable& t, double eps);
double profile_lambda0_at(const SpectralProfileTable& t, double eps);

/// Integral of 2 / (delta Lambda(delta)) over [4 pi_min, 4 / eps], with Lambda
/// read from the table as a right-continuous step function. Returns 0 when
/// 4 pi_min >= 4 / eps. Throws kProfileUnavailable if the table is not exact
/// or does not cover the integration range.
double spectral_profile_time(const SpectralProfileTable& table, double pi_min, double eps);
/// Convenience overload: exact breakpoint table of c.
double spectral_profile_time(const ChainSpec& c, double eps);

}  // namespace dynperc
