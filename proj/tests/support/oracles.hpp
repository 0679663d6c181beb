#pragma once

// Reference computations written independently of the library: dense
// matrix functions, brute-force enumeration and small closed forms.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <unsupported/Eigen/MatrixFunctions>
#include <utility>
#include <vector>

namespace oracle {

// Dense rate matrix from (row, col, rate) off-diagonal entries; diagonal fills rows to zero.
inline Eigen::MatrixXd rate_matrix(std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, double>>& off) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& [i, j, r] : off) q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += r;
  for (Eigen::Index i = 0; i < q.rows(); ++i) q(i, i) = -(q.row(i).sum() - q(i, i));
  return q;
}

// Generator of the full process on adjacency lists, with its own state order
// x * 2^m + eta and its own rates (walk 1/deg across open edges, flips mu p
// and mu (1 - p)).
struct SmallGraph {
  std::size_t n;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  std::size_t degree(std::size_t v) const {
    std::size_t d = 0;
    for (const auto& [a, b] : edges) d += (a == v) + (b == v);
    return d;
  }
};

inline Eigen::MatrixXd full_generator(const SmallGraph& g, double mu, double p) {
  const std::size_t m = g.edges.size();
  const std::size_t envs = std::size_t{1} << m;
  std::vector<std::tuple<std::size_t, std::size_t, double>> off;
  for (std::size_t x = 0; x < g.n; ++x) {
    for (std::size_t eta = 0; eta < envs; ++eta) {
      const std::size_t s = x * envs + eta;
      for (std::size_t e = 0; e < m; ++e) {
        const bool open = (eta >> e) & 1U;
        off.emplace_back(s, x * envs + (eta ^ (std::size_t{1} << e)), open ? mu * (1 - p) : mu * p);
        const auto [a, b] = g.edges[e];
        if (open && (a == x || b == x)) {
          const std::size_t y = a == x ? b : a;
          off.emplace_back(s, y * envs + eta, 1.0 / static_cast<double>(g.degree(x)));
        }
      }
    }
  }
  return rate_matrix(g.n * envs, off);
}

// Stationary law of an irreducible rate matrix by a dense solve.
inline Eigen::VectorXd stationary(const Eigen::MatrixXd& q) {
  const Eigen::Index n = q.rows();
  Eigen::MatrixXd a = q.transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  return a.fullPivLu().solve(b);
}

// E_x[T_target] for all x by dense solve.
inline Eigen::VectorXd hitting_times(const Eigen::MatrixXd& q, const std::vector<bool>& target) {
  const Eigen::Index n = q.rows();
  std::vector<Eigen::Index> rest;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!target[static_cast<std::size_t>(i)]) rest.push_back(i);
  const auto k = static_cast<Eigen::Index>(rest.size());
  Eigen::MatrixXd a(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) a(i, j) = q(rest[i], rest[j]);
  const Eigen::VectorXd h = a.fullPivLu().solve(-Eigen::VectorXd::Ones(k));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < k; ++i) out(rest[i]) = h(i);
  return out;
}

// Spectral gap of a reversible rate matrix from a dense self-adjoint solve.
inline double reversible_gap(const Eigen::MatrixXd& q, const Eigen::VectorXd& pi) {
  const Eigen::VectorXd s = pi.array().sqrt();
  const Eigen::MatrixXd sym = s.asDiagonal() * (-q) * s.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (sym + sym.transpose()));
  return es.eigenvalues()(1);
}

// Gap of the full process on K_2: functions of eta alone decay at rate mu; on
// functions odd in x the generator acts as [[-mu p, mu p], [mu(1-p), -mu(1-p) - 2]].
inline double k2_full_gap(double mu, double p) {
  const double b = mu + 2.0;
  const double odd = 0.5 * (b - std::sqrt(b * b - 8.0 * mu * p));
  return std::min(mu, odd);
}

// min sum_x (nu(x) - pi(x))^2 / pi(x) over probability vectors with
// nu(A) >= pi(A) + delta pi(A^c), by Dykstra's alternating projections in
// L2(pi) from the start point pi.
inline double lagrange_qp(const std::vector<double>& pi, const std::vector<bool>& in_a, double delta,
                          std::size_t iterations = 200000) {
  const std::size_t n = pi.size();
  double pa = 0.0;
  for (std::size_t i = 0; i < n; ++i) pa += in_a[i] ? pi[i] : 0.0;
  const double need = pa + delta * (1.0 - pa);
  std::vector<double> r(n, 1.0);  // r = nu / pi
  std::vector<std::vector<double>> inc(3, std::vector<double>(n, 0.0));
  auto project = [&](std::size_t which, std::vector<double>& v) {
    if (which == 0) {
      double mass = 0.0;
      for (std::size_t i = 0; i < n; ++i) mass += pi[i] * v[i];
      for (auto& x : v) x += 1.0 - mass;
    } else if (which == 1) {
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) m += in_a[i] ? pi[i] * v[i] : 0.0;
      if (m < need)
        for (std::size_t i = 0; i < n; ++i)
          if (in_a[i]) v[i] += (need - m) / pa;
    } else {
      for (auto& x : v) x = std::max(x, 0.0);
    }
  };
  for (std::size_t it = 0; it < iterations; ++it) {
    const std::vector<double> before = r;
    for (std::size_t k = 0; k < 3; ++k) {
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = r[i] + inc[k][i];
      std::vector<double> z = y;
      project(k, z);
      for (std::size_t i = 0; i < n; ++i) inc[k][i] = y[i] - z[i];
      r = z;
    }
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(r[i] - before[i]));
    if (change < 1e-15 && it > 10) break;
  }
  double value = 0.0;
  for (std::size_t i = 0; i < n; ++i) value += pi[i] * (r[i] - 1.0) * (r[i] - 1.0);
  return value;
}

// E_k[T_0] for the birth-death chain q(i,i+1) = 1, q(i,i-1) = mu i, by a dense
// solve on {1..cap} with a reflecting top state.
inline double birth_death_emptying(std::size_t k, double mu, std::size_t cap = 200) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cap), static_cast<Eigen::Index>(cap));
  for (std::size_t i = 1; i <= cap; ++i) {
    const auto r = static_cast<Eigen::Index>(i - 1);
    const double up = i < cap ? 1.0 : 0.0;
    const double down = mu * static_cast<double>(i);
    a(r, r) = -(up + down);
    if (i < cap) a(r, r + 1) = up;
    if (i > 1) a(r, r - 1) = down;
  }
  const Eigen::VectorXd h = a.fullPivLu().solve(-Eigen::VectorXd::Ones(static_cast<Eigen::Index>(cap)));
  return h(static_cast<Eigen::Index>(k - 1));
}

// Cluster statistics by enumerating every environment and flood-filling from base.
struct ClusterMoments {
  double m_p;
  double n_p;
};

inline ClusterMoments cluster_moments(const SmallGraph& g, double p, std::size_t base) {
  const std::size_t m = g.edges.size();
  ClusterMoments out{0.0, 0.0};
  for (std::uint64_t eta = 0; eta < (std::uint64_t{1} << m); ++eta) {
    double w = 1.0;
    for (std::size_t e = 0; e < m; ++e) w *= ((eta >> e) & 1U) ? p : 1.0 - p;
    std::vector<bool> in(g.n, false);
    in[base] = true;
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::size_t e = 0; e < m; ++e) {
        if (!((eta >> e) & 1U)) continue;
        const auto [a, b] = g.edges[e];
        if (in[a] != in[b]) {
          in[a] = in[b] = true;
          grew = true;
        }
      }
    }
    double size = 0.0;
    double boundary = 0.0;
    for (std::size_t v = 0; v < g.n; ++v) size += in[v] ? 1.0 : 0.0;
    for (const auto& [a, b] : g.edges) boundary += in[a] != in[b] ? 1.0 : 0.0;
    out.m_p += w * boundary * size * size;
    out.n_p += w * size;
  }
  return out;
}

inline SmallGraph cycle(std::size_t n) {
  SmallGraph g{n, {}};
  for (std::size_t i = 0; i < n; ++i) g.edges.emplace_back(std::min(i, (i + 1) % n), std::max(i, (i + 1) % n));
  return g;
}

inline double poisson_pmf(std::size_t k, double lambda) {
  return std::exp(static_cast<double>(k) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(k) + 1.0));
}

}  // namespace oracle
