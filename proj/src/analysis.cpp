#include "dynperc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynperc/error.hpp"
#include "linalg_internal.hpp"

namespace dynperc {

namespace {

void check_function(const ChainSpec& c, std::span<const double> f) {
  if (f.size() != c.states()) fail(ErrorCode::kInvalidArgument, "function length mismatch");
  for (double v : f)
    if (!std::isfinite(v)) fail(ErrorCode::kInvalidArgument, "function value is not finite");
}

void check_subset(std::size_t n, const StateSet& a) {
  if (a.empty()) fail(ErrorCode::kEmptySet, "subset is empty");
  std::vector<char> seen(n, 0);
  for (auto x : a) {
    if (x >= n) fail(ErrorCode::kOutOfRange, "subset state out of range");
    if (seen[x]) fail(ErrorCode::kInvalidArgument, "subset lists a state twice");
    seen[x] = 1;
  }
  if (a.size() == n) fail(ErrorCode::kFullSet, "subset is the full state space");
}

ChainSpec rebuild(const ChainSpec& c, const Eigen::MatrixXd& m, bool reversible) {
  // Entries at rounding level (a zero holding probability recomputed from a
  // row sum, say) are dropped so that validation sees exact zeros.
  const double floor = 1e-14 * std::max(1.0, m.cwiseAbs().maxCoeff());
  std::vector<Triplet> t;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (std::abs(m(i, j)) > floor) t.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), m(i, j)});
  return ChainSpec(c.kind(), c.states(), t, c.stationary(), reversible);
}

// Solves (-Q restricted to the complement of target) h = 1.
std::vector<double> hitting_from_dense(const Eigen::MatrixXd& q, const std::vector<char>& in_target) {
  const auto n = static_cast<std::size_t>(q.rows());
  std::vector<std::size_t> free_states;
  for (std::size_t x = 0; x < n; ++x)
    if (!in_target[x]) free_states.push_back(x);
  std::vector<double> h(n, 0.0);
  if (free_states.empty()) return h;
  Eigen::MatrixXd a = -detail::restrict_to(q, free_states);
  Eigen::VectorXd rhs = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(free_states.size()));
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd sol = lu.solve(rhs);
  const double residual = (a * sol - rhs).cwiseAbs().maxCoeff();
  if (!sol.allFinite() || residual > 1e-6 * std::max(1.0, sol.cwiseAbs().maxCoeff()) ||
      (sol.array() < 0.0).any()) {
    fail(ErrorCode::kSingularSystem, "hitting-time system is singular (chain reducible?)");
  }
  for (std::size_t i = 0; i < free_states.size(); ++i) h[free_states[i]] = sol(static_cast<Eigen::Index>(i));
  return h;
}

}  // namespace

ChainSpec srw_chain(const Graph& g, bool continuous) {
  std::vector<Triplet> t;
  for (Vertex x = 0; x < g.vertex_count(); ++x) {
    const double w = 1.0 / static_cast<double>(g.degree(x));
    for (const auto& nb : g.neighbors(x)) t.push_back({x, nb.vertex, w});
    if (continuous) t.push_back({x, x, -1.0});
  }
  return ChainSpec(continuous ? ChainKind::kGenerator : ChainKind::kTransition, g.vertex_count(), t,
                   stationary_distribution(g).weights(), true);
}

double dirichlet_form(const ChainSpec& c, std::span<const double> f) {
  check_function(c, f);
  const SparseMatrix q = c.generator_sparse();
  const auto& pi = c.stationary();
  double sum = 0.0;
  for (int x = 0; x < q.outerSize(); ++x) {
    for (SparseMatrix::InnerIterator it(q, x); it; ++it) {
      if (it.col() == x) continue;
      const double d = f[x] - f[it.col()];
      sum += pi[x] * it.value() * d * d;
    }
  }
  return 0.5 * sum;
}

double dirichlet_form_operator(const ChainSpec& c, std::span<const double> f) {
  check_function(c, f);
  const SparseMatrix q = c.generator_sparse();
  Eigen::Map<const Eigen::VectorXd> fv(f.data(), static_cast<Eigen::Index>(f.size()));
  const Eigen::VectorXd lf = q * fv;
  double sum = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) sum -= c.stationary()[x] * lf(static_cast<Eigen::Index>(x)) * f[x];
  return sum;
}

double expectation(std::span<const double> pi, std::span<const double> f) {
  double s = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) s += pi[i] * f[i];
  return s;
}

double variance(std::span<const double> pi, std::span<const double> f) {
  const double m = expectation(pi, f);
  double s = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) s += pi[i] * (f[i] - m) * (f[i] - m);
  return s;
}

ChainSpec time_reversal(const ChainSpec& c) {
  const Eigen::MatrixXd m = c.matrix_dense();
  const auto& pi = c.stationary();
  Eigen::MatrixXd r(m.rows(), m.cols());
  for (Eigen::Index x = 0; x < m.rows(); ++x)
    for (Eigen::Index y = 0; y < m.cols(); ++y) r(x, y) = x == y ? m(x, x) : pi[y] * m(y, x) / pi[x];
  // pi L = 0 makes the rows of L* sum correctly; re-balance the diagonal so
  // the rounding error in pi does not trip validation.
  const double target = c.continuous() ? 0.0 : 1.0;
  for (Eigen::Index x = 0; x < r.rows(); ++x) r(x, x) = target - (r.row(x).sum() - r(x, x));
  return rebuild(c, r, c.reversible());
}

ChainSpec additive_symmetrization(const ChainSpec& c) {
  const Eigen::MatrixXd m = c.matrix_dense();
  const Eigen::MatrixXd r = time_reversal(c).matrix_dense();
  Eigen::MatrixXd s = 0.5 * (m + r);
  // Re-balance diagonals so rows sum exactly.
  const double target = c.continuous() ? 0.0 : 1.0;
  for (Eigen::Index x = 0; x < s.rows(); ++x) {
    const double off = s.row(x).sum() - s(x, x);
    s(x, x) = target - off;
  }
  return rebuild(c, s, true);
}

Eigen::MatrixXd symmetrized_operator(const ChainSpec& c) {
  const Eigen::MatrixXd q = c.generator_dense();
  const auto& pi = c.stationary();
  const auto n = q.rows();
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    for (Eigen::Index y = 0; y < n; ++y) {
      const double w = -0.5 * (pi[x] * q(x, y) + pi[y] * q(y, x));
      m(x, y) = w / std::sqrt(pi[x] * pi[y]);
    }
  }
  return m;
}

Eigen::VectorXd spectrum(const ChainSpec& c) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized_operator(c), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double spectral_gap(const ChainSpec& c) {
  if (c.states() < 2) fail(ErrorCode::kNotIrreducible, "a one-state chain has no spectral gap");
  const Eigen::VectorXd ev = spectrum(c);
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev(1) <= 1e-10 * scale) fail(ErrorCode::kNotIrreducible, "second eigenvalue is zero: chain is reducible");
  return ev(1);
}

double relaxation_time(const ChainSpec& c) { return 1.0 / spectral_gap(c); }

double dirichlet_eigenvalue(const ChainSpec& c, const StateSet& a) {
  check_subset(c.states(), a);
  return detail::smallest_eigenvalue(detail::restrict_to(symmetrized_operator(c), a));
}

double variance_normalized_minimum(const ChainSpec& c, const StateSet& a) {
  check_subset(c.states(), a);
  Eigen::VectorXd s(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) s(static_cast<Eigen::Index>(i)) = std::sqrt(c.stationary()[a[i]]);
  return detail::variance_normalized_min(detail::restrict_to(symmetrized_operator(c), a), s);
}

Eigen::MatrixXd hitting_times(const ChainSpec& c) {
  const Eigen::MatrixXd q = c.generator_dense();
  const auto n = c.states();
  Eigen::MatrixXd h(n, n);
  std::vector<char> target(n, 0);
  for (std::size_t y = 0; y < n; ++y) {
    target[y] = 1;
    const auto col = hitting_from_dense(q, target);
    for (std::size_t x = 0; x < n; ++x) h(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = col[x];
    target[y] = 0;
  }
  return h;
}

std::vector<double> hitting_times_to_set(const ChainSpec& c, const StateSet& target) {
  if (target.empty()) fail(ErrorCode::kEmptySet, "hitting target is empty");
  std::vector<char> in(c.states(), 0);
  for (auto x : target) {
    if (x >= c.states()) fail(ErrorCode::kOutOfRange, "target state out of range");
    in[x] = 1;
  }
  return hitting_from_dense(c.generator_dense(), in);
}

double commute_time(const ChainSpec& c, std::size_t a, std::size_t b) {
  if (a == b) fail(ErrorCode::kSameState, "commute time needs two distinct states");
  if (a >= c.states() || b >= c.states()) fail(ErrorCode::kOutOfRange, "state out of range");
  return hitting_times_to_set(c, {b})[a] + hitting_times_to_set(c, {a})[b];
}

double effective_conductance(const ChainSpec& c, std::size_t a, std::size_t b) {
  if (a == b) fail(ErrorCode::kSameState, "effective conductance needs two distinct states");
  if (a >= c.states() || b >= c.states()) fail(ErrorCode::kOutOfRange, "state out of range");
  if (!c.reversible()) fail(ErrorCode::kNotReversible, "Dirichlet principle needs a reversible chain");
  const Eigen::MatrixXd q = c.generator_dense();
  const auto n = c.states();
  std::vector<std::size_t> interior;
  for (std::size_t x = 0; x < n; ++x)
    if (x != a && x != b) interior.push_back(x);
  std::vector<double> f(n, 0.0);
  f[a] = 1.0;
  if (!interior.empty()) {
    const Eigen::MatrixXd qi = detail::restrict_to(q, interior);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(interior.size()));
    for (std::size_t i = 0; i < interior.size(); ++i) rhs(static_cast<Eigen::Index>(i)) = -q(interior[i], a);
    const Eigen::VectorXd sol = qi.partialPivLu().solve(rhs);
    if (!sol.allFinite()) fail(ErrorCode::kSingularSystem, "harmonic extension failed");
    for (std::size_t i = 0; i < interior.size(); ++i) f[interior[i]] = sol(static_cast<Eigen::Index>(i));
  }
  return dirichlet_form(c, f);
}

// ---------------------------------------------------------------------------
// Kernels

Eigen::MatrixXd uniformized_exponential(const Eigen::MatrixXd& q, double t) {
  const auto n = q.rows();
  if (t <= 0.0) return Eigen::MatrixXd::Identity(n, n);
  double rate = 0.0;
  for (Eigen::Index x = 0; x < n; ++x) rate = std::max(rate, -q(x, x));
  if (rate == 0.0) return Eigen::MatrixXd::Identity(n, n);
  int squarings = 0;
  double step = t;
  while (rate * step > 0.5) {
    step *= 0.5;
    ++squarings;
  }
  const Eigen::MatrixXd k = Eigen::MatrixXd::Identity(n, n) + q / rate;
  const double lambda = rate * step;
  double weight = std::exp(-lambda);
  double covered = weight;
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = weight * power;
  // Poisson tail below 1e-17 per step keeps the squared result under 1e-12.
  for (int j = 1; 1.0 - covered > 1e-17 && j < 64; ++j) {
    power = power * k;
    weight *= lambda / j;
    covered += weight;
    sum += weight * power;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

struct KernelEvaluator::Impl {
  bool continuous;
  bool spectral;
  Eigen::MatrixXd q;        // generator (continuous, non-spectral)
  Eigen::MatrixXd p;        // transition matrix (discrete)
  Eigen::MatrixXd left;     // D^{-1/2} U
  Eigen::MatrixXd right;    // U' D^{1/2}
  Eigen::VectorXd eigenvalues;
};

KernelEvaluator::KernelEvaluator(const ChainSpec& c) : impl_(std::make_unique<Impl>()) {
  impl_->continuous = c.continuous();
  impl_->spectral = c.continuous() && c.reversible();
  if (!c.continuous()) {
    impl_->p = c.matrix_dense();
  } else if (impl_->spectral) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized_operator(c));
    Eigen::VectorXd sq(c.states());
    for (std::size_t x = 0; x < c.states(); ++x) sq(static_cast<Eigen::Index>(x)) = std::sqrt(c.stationary()[x]);
    impl_->eigenvalues = es.eigenvalues();
    impl_->left = sq.cwiseInverse().asDiagonal() * es.eigenvectors();
    impl_->right = es.eigenvectors().transpose() * sq.asDiagonal();
  } else {
    impl_->q = c.generator_dense();
  }
}

KernelEvaluator::~KernelEvaluator() = default;
KernelEvaluator::KernelEvaluator(KernelEvaluator&&) noexcept = default;
KernelEvaluator& KernelEvaluator::operator=(KernelEvaluator&&) noexcept = default;

Eigen::MatrixXd KernelEvaluator::kernel(double t) const {
  const Impl& m = *impl_;
  if (!m.continuous) {
    auto steps = static_cast<unsigned long long>(std::floor(std::max(0.0, t)));
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(m.p.rows(), m.p.cols());
    Eigen::MatrixXd base = m.p;
    while (steps > 0) {
      if (steps & 1ULL) result = result * base;
      steps >>= 1;
      if (steps > 0) base = base * base;
    }
    return result;
  }
  if (m.spectral) {
    const Eigen::VectorXd decay = (-t * m.eigenvalues.array()).exp();
    return m.left * decay.asDiagonal() * m.right;
  }
  return uniformized_exponential(m.q, t);
}

Eigen::MatrixXd transition_kernel(const ChainSpec& c, double t) { return KernelEvaluator(c).kernel(t); }

// ---------------------------------------------------------------------------
// Distances and mixing

double tv_distance(std::span<const double> nu, std::span<const double> pi) {
  double s = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) s += std::abs(nu[i] - pi[i]);
  return 0.5 * s;
}

double l2_distance(std::span<const double> nu, std::span<const double> pi) {
  double s = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    const double r = nu[i] / pi[i] - 1.0;
    s += pi[i] * r * r;
  }
  return std::sqrt(s);
}

double linf_distance(std::span<const double> nu, std::span<const double> pi) {
  double s = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) s = std::max(s, std::abs(nu[i] / pi[i] - 1.0));
  return s;
}

double distance(std::span<const double> nu, std::span<const double> pi, DistanceNorm norm) {
  switch (norm) {
    case DistanceNorm::kTV: return tv_distance(nu, pi);
    case DistanceNorm::kL2: return l2_distance(nu, pi);
    case DistanceNorm::kLinf: return linf_distance(nu, pi);
  }
  return 0.0;
}

double distance_at(const KernelEvaluator& k, std::span<const double> pi, double t, DistanceNorm norm,
                   const MixingStart& start) {
  const Eigen::MatrixXd pt = k.kernel(t);
  const auto n = pt.rows();
  std::vector<double> row(static_cast<std::size_t>(n));
  auto row_distance = [&](Eigen::Index x) {
    for (Eigen::Index y = 0; y < n; ++y) row[static_cast<std::size_t>(y)] = pt(x, y);
    return distance(row, pi, norm);
  };
  if (std::holds_alternative<WorstCaseStart>(start)) {
    double worst = 0.0;
    for (Eigen::Index x = 0; x < n; ++x) worst = std::max(worst, row_distance(x));
    return worst;
  }
  if (const auto* x = std::get_if<std::size_t>(&start)) return row_distance(static_cast<Eigen::Index>(*x));
  const auto& nu = std::get<std::vector<double>>(start);
  Eigen::Map<const Eigen::RowVectorXd> nv(nu.data(), n);
  const Eigen::RowVectorXd out = nv * pt;
  return distance(std::span<const double>(out.data(), static_cast<std::size_t>(n)), pi, norm);
}

double mixing_time(const ChainSpec& c, double eps, DistanceNorm norm, const MixingStart& start,
                   std::size_t exact_state_limit) {
  if (c.states() > exact_state_limit) {
    fail(ErrorCode::kTooLarge, "mixing_time: " + std::to_string(c.states()) + " states exceeds the exact limit");
  }
  if (!(eps > 0.0)) fail(ErrorCode::kInvalidArgument, "mixing_time: eps must be positive");
  if (const auto* x = std::get_if<std::size_t>(&start); x && *x >= c.states()) {
    fail(ErrorCode::kOutOfRange, "mixing_time: start state out of range");
  }
  if (const auto* nu = std::get_if<std::vector<double>>(&start); nu && nu->size() != c.states()) {
    fail(ErrorCode::kInvalidArgument, "mixing_time: start distribution length mismatch");
  }
  const KernelEvaluator k(c);
  const auto& pi = c.stationary();
  auto d = [&](double t) { return distance_at(k, pi, t, norm, start); };
  if (d(0.0) <= eps) return 0.0;

  if (!c.continuous()) {
    double hi = 1.0;
    while (d(hi) > eps) {
      hi *= 2.0;
      if (hi > 0x1.0p40) fail(ErrorCode::kNotIrreducible, "mixing_time: distance does not decay (periodic chain?)");
    }
    double lo = std::floor(hi / 2.0);
    while (hi - lo > 1.0) {
      const double mid = std::floor(0.5 * (lo + hi));
      (d(mid) <= eps ? hi : lo) = mid;
    }
    return hi;
  }

  const double t_rel = relaxation_time(c);
  double lo = 0.0;
  double hi = t_rel * 0x1.0p-20;
  while (d(hi) > eps) {
    lo = hi;
    hi *= 2.0;
    if (hi > t_rel * 0x1.0p60) fail(ErrorCode::kNotIrreducible, "mixing_time: distance does not decay");
  }
  const double resolution = 1e-4 * t_rel;
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    (d(mid) <= eps ? hi : lo) = mid;
  }
  return hi;
}

// ---------------------------------------------------------------------------
// Killed chains

StateSet complement(std::size_t n, const StateSet& a) {
  std::vector<char> in(n, 0);
  for (auto x : a) in[x] = 1;
  StateSet out;
  for (std::size_t x = 0; x < n; ++x)
    if (!in[x]) out.push_back(x);
  return out;
}

double mass(std::span<const double> pi, const StateSet& a) {
  double s = 0.0;
  for (auto x : a) s += pi[x];
  return s;
}

double survival_outside(const ChainSpec& c, const StateSet& a, double t) {
  check_subset(c.states(), a);
  const Eigen::MatrixXd qa = detail::restrict_to(c.generator_dense(), a);
  const Eigen::MatrixXd k = uniformized_exponential(qa, t);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += c.stationary()[a[i]] * k.row(static_cast<Eigen::Index>(i)).sum();
  return s;
}

double killed_decay_rate(const ChainSpec& c, const StateSet& a) {
  check_subset(c.states(), a);
  const Eigen::MatrixXd qa = detail::restrict_to(c.generator_dense(), a);
  double rate = 0.0;
  for (Eigen::Index x = 0; x < qa.rows(); ++x) rate = std::max(rate, -qa(x, x));
  double t = 1.0 / rate;
  Eigen::MatrixXd k = uniformized_exponential(qa, t);
  double log_scale = 0.0;
  Eigen::VectorXd w(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) w(static_cast<Eigen::Index>(i)) = c.stationary()[a[i]];
  auto log_survival = [&](const Eigen::MatrixXd& m, double scale) { return scale + std::log(w.dot(m.rowwise().sum())); };

  double previous = std::numeric_limits<double>::quiet_NaN();
  double estimate = std::numeric_limits<double>::quiet_NaN();
  for (int iter = 0; iter < 80; ++iter) {
    const double ls_t = log_survival(k, log_scale);
    Eigen::MatrixXd k2 = k * k;
    const double norm = k2.rowwise().sum().maxCoeff();
    if (!(norm > 0.0)) break;
    k2 /= norm;
    const double scale2 = 2.0 * log_scale + std::log(norm);
    const double ls_2t = log_survival(k2, scale2);
    estimate = -(ls_2t - ls_t) / t;
    if (std::isfinite(previous) && std::abs(estimate - previous) <= 1e-12 * std::abs(estimate)) break;
    previous = estimate;
    k = std::move(k2);
    log_scale = scale2;
    t *= 2.0;
  }
  return estimate;
}

}  // namespace dynperc
