#include "dynperc/spectral_profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dynperc/error.hpp"
#include "dynperc/parallel.hpp"
#include "dynperc/rng.hpp"
#include "linalg_internal.hpp"

namespace dynperc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMassSlack = 1e-12;

struct SubsetValue {
  double mass;
  double lambda;
  double lambda0;
};

SubsetValue evaluate_subset(const Eigen::MatrixXd& m, const std::vector<double>& pi,
                            const std::vector<std::size_t>& members) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(members.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    total += pi[members[i]];
    s(static_cast<Eigen::Index>(i)) = std::sqrt(pi[members[i]]);
  }
  const Eigen::MatrixXd ma = detail::restrict_to(m, members);
  return {total, detail::variance_normalized_min(ma, s), detail::smallest_eigenvalue(ma)};
}

std::vector<std::size_t> members_of(std::uint64_t mask, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t x = 0; x < n; ++x)
    if (mask >> x & 1ULL) out.push_back(x);
  return out;
}

}  // namespace

SubsetProfile SubsetProfile::enumerate(const ChainSpec& c, std::size_t workers) {
  const std::size_t n = c.states();
  if (n < 2) fail(ErrorCode::kInvalidArgument, "spectral profile needs at least two states");
  if (n > 30) fail(ErrorCode::kTooLarge, "subset enumeration beyond 30 states");
  const Eigen::MatrixXd m = symmetrized_operator(c);
  const auto& pi = c.stationary();
  const std::uint64_t full = (1ULL << n) - 1;
  const std::uint64_t chunk = 4096;
  const std::uint64_t chunks = (full - 1 + chunk - 1) / chunk;

  auto values = parallel_map(static_cast<std::size_t>(chunks), workers, [&](std::size_t k) {
    std::vector<SubsetValue> out;
    const std::uint64_t lo = 1 + k * chunk;
    const std::uint64_t hi = std::min<std::uint64_t>(full, lo + chunk);
    out.reserve(static_cast<std::size_t>(hi - lo));
    for (std::uint64_t mask = lo; mask < hi; ++mask) out.push_back(evaluate_subset(m, pi, members_of(mask, n)));
    return out;
  });

  std::vector<SubsetValue> all;
  all.reserve(static_cast<std::size_t>(full - 1));
  for (auto& v : values) all.insert(all.end(), v.begin(), v.end());
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.mass < b.mass; });

  SubsetProfile prof;
  prof.exact_ = true;
  prof.gap_ = spectral_gap(c);
  double best_l = kInf;
  double best_l0 = kInf;
  for (std::size_t i = 0; i < all.size();) {
    // Sets whose masses agree up to rounding share one breakpoint.
    const double mass = all[i].mass;
    std::size_t j = i;
    while (j < all.size() && all[j].mass <= mass + kMassSlack) {
      best_l = std::min(best_l, all[j].lambda);
      best_l0 = std::min(best_l0, all[j].lambda0);
      ++j;
    }
    if (prof.steps_.empty() || best_l < prof.steps_.back().lambda || best_l0 < prof.steps_.back().lambda0) {
      prof.steps_.push_back({mass, best_l, best_l0});
    }
    i = j;
  }
  prof.min_proper_lambda0_ = best_l0;
  return prof;
}

SubsetProfile SubsetProfile::sample(const ChainSpec& c, std::span<const double> grid, std::uint64_t seed,
                                    std::size_t steps) {
  const std::size_t n = c.states();
  const Eigen::MatrixXd m = symmetrized_operator(c);
  const auto& pi = c.stationary();
  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());

  SubsetProfile prof;
  prof.exact_ = false;
  prof.gap_ = spectral_gap(c);
  const SeedStream stream(seed);
  double best_l = kInf;
  double best_l0 = kInf;
  for (std::size_t g = 0; g < sorted.size(); ++g) {
    const double eps = std::min(sorted[g], 1.0);
    Rng rng = stream.engine(g);
    // Start from the singleton with the smallest exit rate that fits.
    std::vector<char> in(n, 0);
    std::size_t start = n;
    for (std::size_t x = 0; x < n; ++x) {
      if (pi[x] > eps + kMassSlack) continue;
      if (start == n || m(x, x) < m(start, start)) start = x;
    }
    if (start == n) continue;
    in[start] = 1;
    double cur_mass = pi[start];
    auto current = evaluate_subset(m, pi, {start});
    best_l = std::min(best_l, current.lambda);
    best_l0 = std::min(best_l0, current.lambda0);
    for (std::size_t step = 0; step < steps; ++step) {
      const auto x = static_cast<std::size_t>(uniform_index(rng, n));
      const double new_mass = in[x] ? cur_mass - pi[x] : cur_mass + pi[x];
      if (new_mass <= 0.0 || new_mass > eps + kMassSlack || new_mass > 1.0 - kMassSlack) continue;
      in[x] ^= 1;
      std::vector<std::size_t> members;
      for (std::size_t y = 0; y < n; ++y)
        if (in[y]) members.push_back(y);
      const auto proposal = evaluate_subset(m, pi, members);
      const double temperature = 0.05 * current.lambda0 * (1.0 - static_cast<double>(step) / steps) + 1e-12;
      if (proposal.lambda0 <= current.lambda0 ||
          uniform01(rng) < std::exp(-(proposal.lambda0 - current.lambda0) / temperature)) {
        current = proposal;
        cur_mass = new_mass;
        best_l = std::min(best_l, current.lambda);
        best_l0 = std::min(best_l0, current.lambda0);
      } else {
        in[x] ^= 1;
      }
    }
    prof.steps_.push_back({sorted[g], best_l, best_l0});
  }
  prof.min_proper_lambda0_ = best_l0;
  return prof;
}

double SubsetProfile::lambda(double eps) const {
  if (eps >= 1.0) return gap_;
  double v = kInf;
  for (const auto& s : steps_) {
    if (s.mass > eps + kMassSlack) break;
    v = s.lambda;
  }
  return v;
}

double SubsetProfile::lambda0(double eps) const {
  if (eps >= 1.0) return min_proper_lambda0_;
  double v = kInf;
  for (const auto& s : steps_) {
    if (s.mass > eps + kMassSlack) break;
    v = s.lambda0;
  }
  return v;
}

SpectralProfileTable SubsetProfile::table(std::span<const double> grid) const {
  SpectralProfileTable t;
  t.exact = exact_;
  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  for (double eps : sorted) t.points.push_back({eps, lambda(eps), lambda0(eps)});
  return t;
}

SpectralProfileTable SubsetProfile::breakpoint_table() const {
  SpectralProfileTable t;
  t.exact = exact_;
  for (const auto& s : steps_) {
    if (s.mass >= 1.0 - kMassSlack) break;
    t.points.push_back({s.mass, s.lambda, s.lambda0});
  }
  t.points.push_back({1.0, gap_, min_proper_lambda0_});
  return t;
}

SpectralProfileTable spectral_profile(const ChainSpec& c, std::span<const double> eps_grid,
                                      const ProfileOptions& opts) {
  if (c.states() <= opts.exact_subset_limit) return SubsetProfile::enumerate(c, opts.workers).table(eps_grid);
  if (opts.require_exact) {
    fail(ErrorCode::kTooLarge, "exact spectral profile needs at most " + std::to_string(opts.exact_subset_limit) +
                                   " states, chain has " + std::to_string(c.states()));
  }
  return SubsetProfile::sample(c, eps_grid, opts.seed, opts.sampler_steps).table(eps_grid);
}

namespace {

double step_read(const SpectralProfileTable& t, double eps, bool use_lambda0) {
  double v = kInf;
  for (const auto& p : t.points) {
    if (p.eps > eps + kMassSlack) break;
    v = use_lambda0 ? p.lambda0 : p.lambda;
  }
  return v;
}

}  // namespace

double profile_lambda_at(const SpectralProfileTable& t, double eps) { return step_read(t, eps, false); }
double profile_lambda0_at(const SpectralProfileTable& t, double eps) { return step_read(t, eps, true); }

double spectral_profile_time(const SpectralProfileTable& table, double pi_min, double eps) {
  if (!(eps > 0.0) || !(pi_min > 0.0)) fail(ErrorCode::kInvalidArgument, "eps and pi_min must be positive");
  const double lo = 4.0 * pi_min;
  const double hi = 4.0 / eps;
  if (lo >= hi) return 0.0;
  if (!table.exact) fail(ErrorCode::kProfileUnavailable, "spectral profile table is not exact");
  if (table.points.empty() || table.points.front().eps > lo + kMassSlack) {
    fail(ErrorCode::kProfileUnavailable, "spectral profile table does not cover the integration range");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < table.points.size(); ++k) {
    const double a = std::max(lo, table.points[k].eps);
    const double b = k + 1 < table.points.size() ? std::min(hi, table.points[k + 1].eps) : hi;
    if (b <= a) continue;
    const double value = table.points[k].lambda;
    if (std::isinf(value)) continue;
    total += 2.0 * std::log(b / a) / value;
  }
  return total;
}

double spectral_profile_time(const ChainSpec& c, double eps) {
  const auto& pi = c.stationary();
  const double pi_min = *std::min_element(pi.begin(), pi.end());
  return spectral_profile_time(SubsetProfile::enumerate(c).breakpoint_table(), pi_min, eps);
}

}  // namespace dynperc
