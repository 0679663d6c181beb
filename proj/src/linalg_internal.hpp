#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace dynperc::detail {

inline double smallest_eigenvalue(const Eigen::MatrixXd& sym) {
  if (sym.rows() == 1) return sym(0, 0);
  if (sym.rows() == 2) {
    const double a = sym(0, 0), b = sym(0, 1), d = sym(1, 1);
    const double half_trace = 0.5 * (a + d);
    const double disc = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    return half_trace - disc;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline Eigen::MatrixXd restrict_to(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd r(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) r(i, j) = m(idx[i], idx[j]);
  return r;
}

// Given the symmetrized operator restricted to A and sqrt(pi) on A, returns
// min g'Mg / (|g|^2 - (s.g)^2), i.e. min E(h,h)/Var(h) over supp h in A.
// Uses (I - s s')^{-1/2} = I + c s s' with c = (1/sqrt(1-|s|^2) - 1)/|s|^2.
inline double variance_normalized_min(const Eigen::MatrixXd& m_a, const Eigen::VectorXd& s) {
  const double s2 = s.squaredNorm();
  const double c = (1.0 / std::sqrt(1.0 - s2) - 1.0) / s2;
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(s.size(), s.size()) + c * s * s.transpose();
  Eigen::MatrixXd t = b * m_a * b;
  t = 0.5 * (t + t.transpose()).eval();
  return smallest_eigenvalue(t);
}

}  // namespace dynperc::detail
