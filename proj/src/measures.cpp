#include "dynperc/measures.hpp"

#include <cmath>

#include "dynperc/error.hpp"

namespace dynperc {

namespace {

double checked_mass(std::span<const double> pi, const StateSet& a) {
  if (a.empty()) fail(ErrorCode::kBadSubset, "subset is empty");
  std::vector<char> seen(pi.size(), 0);
  for (auto x : a) {
    if (x >= pi.size()) fail(ErrorCode::kBadSubset, "subset state out of range");
    if (seen[x]) fail(ErrorCode::kBadSubset, "subset lists a state twice");
    seen[x] = 1;
  }
  if (a.size() == pi.size()) fail(ErrorCode::kBadSubset, "subset is the full state space");
  return mass(pi, a);
}

}  // namespace

double lagrange_min_distance(std::span<const double> pi, const StateSet& a, double delta) {
  const double m = checked_mass(pi, a);
  if (!(delta >= 0.0 && delta <= 1.0)) fail(ErrorCode::kInvalidArgument, "delta must lie in [0, 1]");
  return delta * delta * (1.0 - m) / m;
}

std::vector<double> lagrange_achiever(std::span<const double> pi, const StateSet& a, double delta) {
  const double m = checked_mass(pi, a);
  if (!(delta >= 0.0 && delta <= 1.0)) fail(ErrorCode::kInvalidArgument, "delta must lie in [0, 1]");
  std::vector<double> nu(pi.size());
  for (std::size_t x = 0; x < pi.size(); ++x) nu[x] = (1.0 - delta) * pi[x];
  for (auto x : a) nu[x] += delta * pi[x] / m;
  return nu;
}

ConditioningCheck conditioning_l2_bound_check(std::span<const double> pi, std::span<const double> nu,
                                              const StateSet& a) {
  if (nu.size() != pi.size()) fail(ErrorCode::kInvalidArgument, "nu and pi differ in length");
  for (auto x : a)
    if (x >= pi.size()) fail(ErrorCode::kOutOfRange, "subset state out of range");
  const double na = mass(nu, a);
  if (!(na > 0.0)) fail(ErrorCode::kZeroMass, "nu(A) = 0");
  std::vector<double> cond(pi.size(), 0.0);
  for (auto x : a) cond[x] = nu[x] / na;
  const double d = l2_distance(nu, pi);
  const double c = l2_distance(cond, pi);
  ConditioningCheck out{};
  out.lhs = c * c;
  out.rhs = (d * d + 1.0) / (na * na) - 1.0;
  // Both sides are sums of the same nonnegative terms; allow rounding.
  out.holds = out.lhs <= out.rhs + 1e-12 * (1.0 + std::abs(out.rhs));
  return out;
}

}  // namespace dynperc
