#include "dynperc/identities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "dynperc/analysis.hpp"
#include "dynperc/error.hpp"
#include "dynperc/measures.hpp"
#include "dynperc/spectral_profile.hpp"

namespace dynperc {

namespace {

std::vector<Triplet> dense_triplets(const Eigen::MatrixXd& l) {
  std::vector<Triplet> t;
  for (Eigen::Index i = 0; i < l.rows(); ++i)
    for (Eigen::Index j = 0; j < l.cols(); ++j)
      if (l(i, j) != 0.0) t.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), l(i, j)});
  return t;
}

// Rescales to max exit rate 1 and returns L (or P = I + L).
Eigen::MatrixXd finish_rates(Eigen::MatrixXd l, bool continuous) {
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    l(i, i) = 0.0;
    l(i, i) = -l.row(i).sum();
  }
  const double top = (-l.diagonal()).maxCoeff();
  l /= top;
  if (!continuous) {
    l += Eigen::MatrixXd::Identity(l.rows(), l.cols());
    l = (l.array().abs() < 1e-15).select(0.0, l);
  }
  return l;
}

// Relative violation of a <= b (positive when violated).
double excess(double a, double b) { return (a - b) / std::max(1.0, std::abs(b)); }

class Checker {
 public:
  Checker(std::string name, double tol) : tol_(tol) { check_.name = std::move(name); }

  void le(double a, double b) { record(excess(a, b)); }
  void near(double a, double b) { record(std::abs(a - b) / std::max(1.0, std::abs(b))); }
  void record(double violation) {
    ++check_.cases;
    check_.worst = check_.cases == 1 ? violation : std::max(check_.worst, violation);
    if (!(violation <= tol_)) check_.pass = false;
  }
  IdentityCheck done(std::string detail = {}) {
    check_.detail = std::move(detail);
    return check_;
  }
  static IdentityCheck skip(std::string name, std::string why) {
    IdentityCheck c;
    c.name = std::move(name);
    c.skipped = true;
    c.detail = std::move(why);
    return c;
  }

 private:
  IdentityCheck check_;
  double tol_;
};

StateSet mask_members(std::uint64_t mask, std::size_t n) {
  StateSet a;
  for (std::size_t i = 0; i < n; ++i)
    if (mask >> i & 1ULL) a.push_back(i);
  return a;
}

StateSet random_subset(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t k = 1 + uniform_index(rng, n - 1);
  StateSet a(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(a.begin(), a.end());
  return a;
}

// Every proper subset when small, otherwise a seeded sample.
std::vector<StateSet> test_subsets(std::size_t n, const IdentityOptions& opts, Rng& rng) {
  std::vector<StateSet> out;
  if (n <= opts.enumerate_limit) {
    for (std::uint64_t mask = 1; mask + 1 < (1ULL << n); ++mask) out.push_back(mask_members(mask, n));
  } else {
    for (std::size_t i = 0; i < opts.subset_samples; ++i) out.push_back(random_subset(n, rng));
  }
  return out;
}

std::vector<double> row(const Eigen::MatrixXd& m, Eigen::Index i) {
  std::vector<double> r(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
  return r;
}

std::vector<double> probe_times(const ChainSpec& c) {
  const double t_rel = relaxation_time(c);
  if (c.continuous()) return {0.1 * t_rel, 0.5 * t_rel, t_rel, 2.0 * t_rel};
  // Even powers keep the centred kernel positive semidefinite.
  std::vector<double> out;
  for (double f : {0.5, 1.0, 2.0}) out.push_back(2.0 * std::max(1.0, std::round(f * t_rel / 2.0)));
  return out;
}

IdentityCheck check_maxdiag(const ChainSpec& c, const KernelEvaluator& k, double tol) {
  if (!c.reversible()) return Checker::skip("diagonal identity", "needs a reversible chain");
  Checker ch("diagonal identity", tol);
  const auto& pi = c.stationary();
  const auto n = static_cast<Eigen::Index>(c.states());
  for (double t : probe_times(c)) {
    const Eigen::MatrixXd pt = k.kernel(t);
    const Eigen::MatrixXd p2t = k.kernel(2.0 * t);
    double all = 0.0;
    double diag = 0.0;
    for (Eigen::Index x = 0; x < n; ++x) {
      for (Eigen::Index y = 0; y < n; ++y) all = std::max(all, std::abs(pt(x, y) / pi[y] - 1.0));
      diag = std::max(diag, std::abs(pt(x, x) / pi[x] - 1.0));
      const double l2 = l2_distance(row(pt, x), pi);
      ch.near(l2 * l2, p2t(x, x) / pi[x] - 1.0);
    }
    ch.near(all, diag);
  }
  return ch.done();
}

IdentityCheck check_poincare(const ChainSpec& c, const KernelEvaluator& k, double tol) {
  if (!c.continuous()) return Checker::skip("Poincare decay", "continuous-time statement");
  Checker ch("Poincare decay", tol);
  const auto& pi = c.stationary();
  const double gap = spectral_gap(c);
  for (double t : probe_times(c)) {
    const Eigen::MatrixXd pt = k.kernel(t);
    for (Eigen::Index x = 0; x < pt.rows(); ++x) {
      const double l2 = l2_distance(row(pt, x), pi);
      const double start = 1.0 / pi[static_cast<std::size_t>(x)] - 1.0;
      ch.le(l2 * l2, start * std::exp(-2.0 * gap * t));
    }
  }
  return ch.done();
}

IdentityCheck check_profile_sandwich(const ChainSpec& c, const SubsetProfile* profile,
                                     const std::vector<StateSet>& sets, double tol) {
  Checker ch("profile sandwich", tol);
  const auto& pi = c.stationary();
  for (const auto& a : sets) {
    const double big = variance_normalized_minimum(c, a);
    const double small = dirichlet_eigenvalue(c, a);
    ch.le((1.0 - mass(pi, a)) * big, small);
    ch.le(small, big);
  }
  if (profile != nullptr) {
    for (const auto& s : profile->steps()) {
      if (s.mass >= 1.0) continue;
      ch.le((1.0 - s.mass) * s.lambda, s.lambda0);
      ch.le(s.lambda0, s.lambda);
    }
  }
  return ch.done(profile != nullptr ? "exact profile and per-set" : "per-set on sampled subsets");
}

IdentityCheck check_quasi_stationary(const ChainSpec& c, const std::vector<StateSet>& sets, double tol) {
  if (!c.reversible()) return Checker::skip("quasi-stationary sandwich", "needs a reversible chain");
  Checker ch("quasi-stationary sandwich", tol);
  const auto& pi = c.stationary();
  for (const auto& a : sets) {
    const auto h = hitting_times_to_set(c, a);
    const double from_pi = std::inner_product(pi.begin(), pi.end(), h.begin(), 0.0);
    const double worst = *std::max_element(h.begin(), h.end());
    const double inv = 1.0 / dirichlet_eigenvalue(c, complement(c.states(), a));
    ch.le(from_pi, inv);
    ch.le(inv, worst);
  }
  return ch.done();
}

IdentityCheck check_exit_rate(const ChainSpec& c, const std::vector<StateSet>& sets) {
  if (!c.reversible() || !c.continuous())
    return Checker::skip("exit-rate match", "needs a reversible continuous-time chain");
  Checker ch("exit-rate match", 0.01);
  for (const auto& a : sets) {
    const double lam = dirichlet_eigenvalue(c, a);
    const double fitted = killed_decay_rate(c, a);
    ch.record(std::abs(fitted - lam) / lam);
  }
  return ch.done("relative error, 1% tolerance");
}

IdentityCheck check_profile_mixing(const ChainSpec& c, const SubsetProfile* profile, double tol) {
  if (profile == nullptr) return Checker::skip("Linf mixing vs profile time", "no exact profile");
  if (!c.continuous() || !c.reversible())
    return Checker::skip("Linf mixing vs profile time", "needs a reversible continuous-time chain");
  Checker ch("Linf mixing vs profile time", tol);
  const auto table = profile->breakpoint_table();
  const auto& pi = c.stationary();
  const double pi_min = *std::min_element(pi.begin(), pi.end());
  for (double eps : {0.1, 0.25, 0.5, 1.0}) {
    const double t_mix = mixing_time(c, eps, DistanceNorm::kLinf);
    const double t_sp = spectral_profile_time(table, pi_min, eps);
    // mixing_time reports the upper end of a 1e-4 t_rel bracket.
    ch.le(t_mix - 1e-4 * relaxation_time(c), t_sp);
  }
  return ch.done();
}

IdentityCheck check_profile_decay(const ChainSpec& c, const SubsetProfile* profile, std::size_t cases, Rng& rng,
                                  double tol) {
  if (profile == nullptr) return Checker::skip("decay inequality through Lambda", "no exact profile");
  Checker ch("decay inequality through Lambda", tol);
  const auto& pi = c.stationary();
  const std::size_t n = c.states();
  std::vector<double> u(n);
  for (std::size_t i = 0; i < cases; ++i) {
    // Alternate between dense and sparse supports.
    const double keep = (i % 2 == 0) ? 1.0 : uniform01(rng);
    for (auto& v : u) v = bernoulli(rng, keep) ? exponential(rng, 1.0) : 0.0;
    const double var = variance(pi, u);
    if (var <= 1e-12) continue;
    const double l1 = expectation(pi, u);
    ch.le(0.5 * profile->lambda(4.0 * l1 * l1 / var), dirichlet_form(c, u) / var);
  }
  return ch.done();
}

IdentityCheck check_lagrange(const ChainSpec& c, std::size_t cases, Rng& rng, double tol) {
  Checker ch("Lagrange minimum distance", tol);
  const auto& pi = c.stationary();
  const std::size_t n = c.states();
  for (std::size_t i = 0; i < cases; ++i) {
    const StateSet a = random_subset(n, rng);
    const double delta = uniform01(rng);
    const double value = lagrange_min_distance(pi, a, delta);
    const double target = mass(pi, a) + delta * (1.0 - mass(pi, a));
    const auto nu = lagrange_achiever(pi, a, delta);
    const double d = l2_distance(nu, pi);
    ch.near(d * d, value);
    ch.le(target, mass(nu, a));
    // A random feasible competitor: move extra mass into A along a random direction.
    std::vector<double> w(n);
    double wa = 0.0;
    for (std::size_t s : a) {
      w[s] = exponential(rng, 1.0);
      wa += w[s];
    }
    std::vector<double> other = pi;
    const double need = target - mass(pi, a);
    const double out_mass = 1.0 - mass(pi, a);
    for (std::size_t s : a) other[s] += need * w[s] / wa;
    for (std::size_t s = 0; s < n; ++s)
      if (!std::binary_search(a.begin(), a.end(), s)) other[s] -= need * pi[s] / out_mass;
    const double od = l2_distance(other, pi);
    ch.le(value, od * od);
  }
  return ch.done();
}

IdentityCheck check_conditioning(const ChainSpec& c, std::size_t cases, Rng& rng, double tol) {
  Checker ch("conditioning bound", tol);
  const auto& pi = c.stationary();
  const std::size_t n = c.states();
  std::vector<double> nu(n);
  for (std::size_t i = 0; i < cases; ++i) {
    double total = 0.0;
    for (auto& v : nu) total += (v = exponential(rng, 1.0) * (bernoulli(rng, 0.7) ? 1.0 : 0.01));
    for (auto& v : nu) v /= total;
    const StateSet a = random_subset(n, rng);
    if (mass(nu, a) <= 0.0) continue;
    const auto r = conditioning_l2_bound_check(pi, nu, a);
    ch.le(r.lhs, r.rhs);
  }
  return ch.done();
}

IdentityCheck check_commute(const ChainSpec& c, double tol) {
  Checker ch("commute-time domination by symmetrization", tol);
  const Eigen::MatrixXd hp = hitting_times(c);
  const Eigen::MatrixXd hs = hitting_times(additive_symmetrization(c));
  for (Eigen::Index a = 0; a < hp.rows(); ++a)
    for (Eigen::Index b = a + 1; b < hp.cols(); ++b) ch.le(hp(a, b) + hp(b, a), hs(a, b) + hs(b, a));
  return ch.done();
}

IdentityCheck check_dirichlet_principle(const ChainSpec& c, Rng& rng, double tol) {
  if (!c.reversible()) return Checker::skip("Dirichlet principle", "needs a reversible chain");
  Checker ch("Dirichlet principle", tol);
  const std::size_t n = c.states();
  const std::size_t pairs = std::min<std::size_t>(n * (n - 1) / 2, 32);
  for (std::size_t i = 0; i < pairs; ++i) {
    const std::size_t a = uniform_index(rng, n);
    std::size_t b = uniform_index(rng, n - 1);
    if (b >= a) ++b;
    ch.near(effective_conductance(c, a, b) * commute_time(c, a, b), 1.0);
  }
  return ch.done();
}

}  // namespace

ChainSpec random_reversible_chain(std::size_t n, Rng& rng, bool continuous) {
  if (n < 2) fail(ErrorCode::kInvalidArgument, "random chain needs two states");
  std::vector<double> pi(n);
  for (auto& v : pi) v = 0.5 + uniform01(rng);
  const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (auto& v : pi) v /= total;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = x + 1; y < n; ++y) {
      const double flow = 0.05 + uniform01(rng);
      l(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = flow / pi[x];
      l(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) = flow / pi[y];
    }
  }
  l = finish_rates(std::move(l), continuous);
  return ChainSpec(continuous ? ChainKind::kGenerator : ChainKind::kTransition, n, dense_triplets(l), pi, true);
}

ChainSpec random_nonreversible_chain(std::size_t n, Rng& rng, bool continuous) {
  if (n < 3) fail(ErrorCode::kInvalidArgument, "a non-reversible chain needs three states");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y)
      if (x != y) l(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = 0.2 * uniform01(rng);
    l(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>((x + 1) % n)) += 1.0 + uniform01(rng);
  }
  l = finish_rates(std::move(l), continuous);
  return ChainSpec::with_solved_stationary(continuous ? ChainKind::kGenerator : ChainKind::kTransition, n,
                                           dense_triplets(l));
}

std::vector<IdentityCheck> exact_identity_suite(const ChainSpec& c, const IdentityOptions& opts) {
  const std::size_t n = c.states();
  Rng rng = SeedStream(opts.seed).engine(0);
  const auto sets = test_subsets(n, opts, rng);
  const KernelEvaluator k(c);
  std::unique_ptr<SubsetProfile> profile;
  if (n <= opts.profile_limit) profile = std::make_unique<SubsetProfile>(SubsetProfile::enumerate(c, opts.workers));

  std::vector<IdentityCheck> out;
  out.push_back(check_maxdiag(c, k, opts.tolerance));
  out.push_back(check_poincare(c, k, opts.tolerance));
  out.push_back(check_profile_sandwich(c, profile.get(), sets, opts.tolerance));
  out.push_back(check_quasi_stationary(c, sets, opts.tolerance));
  out.push_back(check_exit_rate(c, sets));
  out.push_back(check_profile_mixing(c, profile.get(), opts.tolerance));
  out.push_back(check_profile_decay(c, profile.get(), opts.fuzz_cases, rng, opts.tolerance));
  out.push_back(check_lagrange(c, opts.fuzz_cases, rng, opts.tolerance));
  out.push_back(check_conditioning(c, opts.fuzz_cases, rng, opts.tolerance));
  out.push_back(check_commute(c, opts.tolerance));
  out.push_back(check_dirichlet_principle(c, rng, opts.tolerance));
  return out;
}

}  // namespace dynperc
