#pragma once

#include <span>
#include <vector>

#include "dynperc/analysis.hpp"

namespace dynperc {

/// delta^2 pi(A^c) / pi(A): the least squared L2(pi) distance from pi among
/// distributions with nu(A) >= pi(A) + delta pi(A^c). Throws kBadSubset for an
/// empty, full or out-of-range A and kInvalidArgument for delta outside [0,1].
double lagrange_min_distance(std::span<const double> pi, const StateSet& a, double delta);
/// The minimizer delta pi_A + (1 - delta) pi.
std::vector<double> lagrange_achiever(std::span<const double> pi, const StateSet& a, double delta);

struct ConditioningCheck {
  bool holds;
  double lhs;  // ||nu_A - pi||^2
  double rhs;  // (||nu - pi||^2 + 1) / nu(A)^2 - 1
};

/// Compares the L2 distance of nu conditioned on A with the bound through
/// nu(A). Throws kZeroMass when nu(A) = 0.
ConditioningCheck conditioning_l2_bound_check(std::span<const double> pi, std::span<const double> nu,
                                              const StateSet& a);

}  // namespace dynperc
