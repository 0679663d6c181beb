#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "dynperc/chain.hpp"
#include "dynperc/spectral_profile.hpp"

namespace dynperc {

struct LogSobolevOptions {
  std::size_t restarts = 50;
  std::size_t iterations = 400;
  std::uint64_t seed = 7;
  std::size_t workers = 1;
  std::size_t exact_state_limit = 4096;
  std::size_t exact_subset_limit = 20;
};

/// Bracket and point estimate for c_LS = inf E(h,h) / Ent(h^2).
///
/// `estimate` is the smallest ratio found, so it never undershoots c_LS.
/// `upper` is min(min_x -L(x,x)/log(1/pi(x)), gap/2) and `lower` the gap-based
/// bound gap (1 - 2 pi_min) / log(1/pi_min - 1). `certified` is set when the
/// exact Lambda_0 characterization (factor 17) also tightened the bracket.
struct LogSobolevResult {
  double lower;
  double upper;
  double estimate;
  bool certified;
  double sandwich_sup;  // sup over eps in [pi_min, 1/2] of Lambda_0(eps)/log(1/eps)
};

/// E(h,h) / Ent_pi(h^2), with 0 log 0 = 0. Infinite when Ent = 0.
double entropy_ratio(const ChainSpec& c, std::span<const double> h);
double entropy(std::span<const double> pi, std::span<const double> h_squared);

/// min_x -L(x,x) / log(1/pi(x)).
double trivial_ls_upper_bound(const ChainSpec& c);

/// sup_{eps in [pi_min, 1/2]} Lambda_0(eps) / log(1/eps) from an exact profile.
double ls_sandwich_sup(const SubsetProfile& profile, double pi_min);

/// Throws kNotReversible, kTooLarge.
LogSobolevResult log_sobolev_constant(const ChainSpec& c, const LogSobolevOptions& opts = {});

}  // namespace dynperc
