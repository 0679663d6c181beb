#include "dynperc/log_sobolev.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "dynperc/analysis.hpp"
#include "dynperc/error.hpp"
#include "dynperc/parallel.hpp"
#include "dynperc/rng.hpp"

namespace dynperc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Symmetric conductances w_xy = (pi(x) L(x,y) + pi(y) L(y,x)) / 2 over
// x < y, so that E(h,h) = sum w_xy (h_x - h_y)^2 without cancellation.
struct Conductance {
  Eigen::Index x;
  Eigen::Index y;
  double w;
};

std::vector<Conductance> conductances(const ChainSpec& c) {
  const Eigen::MatrixXd q = c.generator_dense();
  const auto& pi = c.stationary();
  std::vector<Conductance> out;
  for (Eigen::Index x = 0; x < q.rows(); ++x) {
    for (Eigen::Index y = x + 1; y < q.cols(); ++y) {
      const double w = 0.5 * (pi[x] * q(x, y) + pi[y] * q(y, x));
      if (w != 0.0) out.push_back({x, y, w});
    }
  }
  return out;
}

// u log u - u + 1 >= 0, accurate near u = 1.
double phi(double u) {
  const double d = u - 1.0;
  if (std::abs(d) < 1e-3) return d * d * (0.5 - d * (1.0 / 6.0 - d * (1.0 / 12.0 - d / 20.0)));
  if (u <= 0.0) return 1.0;
  return u * std::log(u) - d;
}

struct Objective {
  const std::vector<Conductance>& edges;
  const Eigen::VectorXd& pi;

  // Returns the ratio and fills its gradient; infinite when Ent(h^2) is ~0.
  double eval(const Eigen::VectorXd& h, Eigen::VectorXd* grad) const {
    Eigen::VectorXd de = Eigen::VectorXd::Zero(h.size());
    double e = 0.0;
    for (const auto& c : edges) {
      const double diff = h(c.x) - h(c.y);
      e += c.w * diff * diff;
      de(c.x) += 2.0 * c.w * diff;
      de(c.y) -= 2.0 * c.w * diff;
    }
    const Eigen::ArrayXd h2 = h.array().square();
    const double m = (pi.array() * h2).sum();
    double ent = 0.0;
    Eigen::ArrayXd logs = Eigen::ArrayXd::Zero(h.size());
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      const double u = h2(i) / m;
      ent += pi(i) * phi(u);
      if (u > 0.0) logs(i) = std::log1p(u - 1.0);
    }
    ent *= m;
    if (!(ent > 1e-10 * m)) return kInf;
    const double r = e / ent;
    if (grad != nullptr) {
      const Eigen::VectorXd dent = (2.0 * pi.array() * h.array() * logs).matrix();
      *grad = (de - r * dent) / ent;
    }
    return r;
  }
};

double minimize_from(const Objective& obj, Eigen::VectorXd h, std::size_t iterations) {
  auto normalize = [&](Eigen::VectorXd& v) {
    v = v.cwiseMax(0.0);
    const double m = (obj.pi.array() * v.array().square()).sum();
    if (m > 0.0) v /= std::sqrt(m);
  };
  normalize(h);
  Eigen::VectorXd grad;
  double value = obj.eval(h, &grad);
  if (!std::isfinite(value)) return kInf;
  double step = 1.0 / std::max(1.0, grad.norm());
  for (std::size_t it = 0; it < iterations; ++it) {
    bool improved = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::VectorXd trial = h - step * grad;
      normalize(trial);
      Eigen::VectorXd trial_grad;
      const double tv = obj.eval(trial, &trial_grad);
      if (tv < value) {
        h = std::move(trial);
        grad = std::move(trial_grad);
        const double gain = value - tv;
        value = tv;
        step *= 1.5;
        improved = gain > 1e-15 * std::abs(value);
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return value;
}

}  // namespace

double entropy(std::span<const double> pi, std::span<const double> h_squared) {
  double m = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) m += pi[i] * h_squared[i];
  if (m <= 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i)
    if (h_squared[i] > 0.0) s += pi[i] * h_squared[i] * std::log(h_squared[i] / m);
  return s;
}

double entropy_ratio(const ChainSpec& c, std::span<const double> h) {
  std::vector<double> h2(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) h2[i] = h[i] * h[i];
  const double ent = entropy(c.stationary(), h2);
  if (ent <= 0.0) return kInf;
  return dirichlet_form(c, h) / ent;
}

double trivial_ls_upper_bound(const ChainSpec& c) {
  const Eigen::MatrixXd q = c.generator_dense();
  double best = kInf;
  for (std::size_t x = 0; x < c.states(); ++x) {
    const auto i = static_cast<Eigen::Index>(x);
    best = std::min(best, -q(i, i) / std::log(1.0 / c.stationary()[x]));
  }
  return best;
}

double ls_sandwich_sup(const SubsetProfile& profile, double pi_min) {
  // Lambda_0 is constant on [m_k, m_{k+1}) while log(1/eps) decreases, so the
  // supremum on each piece is approached at its right end.
  const auto& steps = profile.steps();
  double sup = 0.0;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const double left = std::max(steps[k].mass, pi_min);
    if (left > 0.5) break;
    const double right = k + 1 < steps.size() ? std::min(steps[k + 1].mass, 0.5) : 0.5;
    if (right < left) continue;
    sup = std::max(sup, steps[k].lambda0 / std::log(1.0 / right));
  }
  return sup;
}

LogSobolevResult log_sobolev_constant(const ChainSpec& c, const LogSobolevOptions& opts) {
  if (!c.reversible()) fail(ErrorCode::kNotReversible, "log-Sobolev bracket requires a reversible chain");
  const std::size_t n = c.states();
  if (n > opts.exact_state_limit) fail(ErrorCode::kTooLarge, "log-Sobolev: chain exceeds the exact state limit");
  if (n < 2) fail(ErrorCode::kInvalidArgument, "log-Sobolev: chain needs two states");

  const auto w = conductances(c);
  Eigen::VectorXd pi(static_cast<Eigen::Index>(n));
  for (std::size_t x = 0; x < n; ++x) pi(static_cast<Eigen::Index>(x)) = c.stationary()[x];
  const Objective obj{w, pi};
  const double gap = spectral_gap(c);
  const double pi_min = pi.minCoeff();

  const SeedStream stream(opts.seed);
  const auto runs = parallel_map(opts.restarts, resolve_workers(opts.workers), [&](std::size_t k) {
    Rng rng = stream.engine(k);
    std::normal_distribution<double> normal(0.0, 1.0);
    // Spread of the log-amplitudes grows with k: near-constant starts probe
    // the gap/2 regime, wide starts probe concentrated functions.
    const double spread = 0.05 + 3.0 * static_cast<double>(k) / std::max<std::size_t>(1, opts.restarts);
    Eigen::VectorXd h(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = std::exp(spread * normal(rng));
    return minimize_from(obj, h, opts.iterations);
  });

  const double trivial = trivial_ls_upper_bound(c);
  double estimate = std::min(trivial, 0.5 * gap);
  for (double r : runs) estimate = std::min(estimate, r);

  // Two-sided gap bound: c_LS >= gap (1 - 2 pi_min) / log(1/pi_min - 1),
  // whose limit at pi_min = 1/2 is gap / 2.
  const double dsc = pi_min >= 0.5 - 1e-12 ? 0.5 * gap
                                            : gap * (1.0 - 2.0 * pi_min) / std::log(1.0 / pi_min - 1.0);
  LogSobolevResult res{};
  res.estimate = estimate;
  res.upper = std::min(trivial, 0.5 * gap);
  res.lower = dsc;
  res.certified = false;
  res.sandwich_sup = std::numeric_limits<double>::quiet_NaN();
  if (n <= opts.exact_subset_limit) {
    const auto profile = SubsetProfile::enumerate(c, resolve_workers(opts.workers));
    const double k = ls_sandwich_sup(profile, pi_min);
    res.sandwich_sup = k;
    res.upper = std::min(res.upper, k);
    res.lower = std::max(res.lower, k / 17.0);
    res.certified = true;
  }
  return res;
}

}  // namespace dynperc
