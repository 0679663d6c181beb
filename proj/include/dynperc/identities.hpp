#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dynperc/chain.hpp"
#include "dynperc/rng.hpp"

namespace dynperc {

/// Random reversible chain: pi with entries in [0.5, 1.5] (normalized) and a
/// dense symmetric flow q(x,y) = pi(x) L(x,y), scaled so that the largest
/// exit rate is 1. Discrete chains use P = I + L.
ChainSpec random_reversible_chain(std::size_t n, Rng& rng, bool continuous = true);
/// Random irreducible chain with a cyclic drift, so that it is not reversible.
ChainSpec random_nonreversible_chain(std::size_t n, Rng& rng, bool continuous = true);

struct IdentityCheck {
  std::string name;
  bool pass = true;
  bool skipped = false;  // not applicable to this chain
  std::size_t cases = 0;
  double worst = 0.0;    // largest relative violation seen (<= 0 means slack everywhere)
  std::string detail;
};

struct IdentityOptions {
  std::uint64_t seed = 1;
  std::size_t fuzz_cases = 1000;    // random inputs per fuzz check
  std::size_t subset_samples = 64;  // subsets drawn when enumeration is too large
  std::size_t enumerate_limit = 12; // enumerate every proper subset up to this size
  std::size_t profile_limit = 20;   // exact spectral profile up to this size
  double tolerance = 1e-8;
  std::size_t workers = 1;
};

/// Runs every exact identity and inequality that applies to the chain:
/// diagonal L-inf/L2 identity, Poincare decay, profile sandwich, quasi-
/// stationary sandwich, exit-rate match (1%), L-inf mixing vs spectral-profile
/// time, decay inequality through Lambda, Lagrange minimum distance,
/// conditioning bound, commute times of the chain bounded by those of its
/// additive symmetrization, and Dirichlet principle.
std::vector<IdentityCheck> exact_identity_suite(const ChainSpec& c, const IdentityOptions& opts = {});

}  // namespace dynperc
