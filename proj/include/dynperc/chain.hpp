#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstddef>
#include <string>
#include <vector>

namespace dynperc {

enum class ChainKind { kGenerator, kTransition };

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// A finite-state Markov chain: either a rate matrix L (continuous time) or a
/// transition matrix P (discrete time), with its stationary law.
///
/// Construction validates the invariants: rows sum to 0 (resp. 1),
/// off-diagonals are nonnegative, pi L = 0 (resp. pi P = pi) to 1e-10 and,
/// when flagged reversible, detailed balance to 1e-10.
class ChainSpec {
 public:
  static constexpr double kTolerance = 1e-10;

  ChainSpec(ChainKind kind, std::size_t states, const std::vector<Triplet>& entries,
            std::vector<double> stationary, bool reversible);

  // Builds the chain and solves for its stationary law; the reversible flag
  // is set when detailed balance holds to kTolerance.
  static ChainSpec with_solved_stationary(ChainKind kind, std::size_t states,
                                          const std::vector<Triplet>& entries);

  ChainKind kind() const { return kind_; }
  bool continuous() const { return kind_ == ChainKind::kGenerator; }
  std::size_t states() const { return states_; }
  const SparseMatrix& matrix() const { return matrix_; }
  const std::vector<double>& stationary() const { return stationary_; }
  bool reversible() const { return reversible_; }

  // The rate matrix of the chain: L itself, or P - I for discrete chains.
  // Every analysis routine works with this form.
  Eigen::MatrixXd generator_dense() const;
  SparseMatrix generator_sparse() const;
  Eigen::MatrixXd matrix_dense() const { return Eigen::MatrixXd(matrix_); }

  std::vector<Triplet> triplets() const;

 private:
  void validate() const;

  ChainKind kind_;
  std::size_t states_;
  SparseMatrix matrix_;
  std::vector<double> stationary_;
  bool reversible_;
};

/// Solves pi Q = 0, sum pi = 1 for a rate matrix Q (dense LU).
std::vector<double> solve_stationary(const Eigen::MatrixXd& rate);

/// Largest residual of pi L (or pi P - pi).
double stationarity_residual(const ChainSpec& c);
/// Largest |pi(x) L(x,y) - pi(y) L(y,x)|.
double detailed_balance_residual(const ChainSpec& c);

// JSON: {"states":N,"kind":"generator"|"transition","triplets":[[i,j,v],...],
//        "pi":[...]} with an optional "reversible" flag.
std::string chain_to_json(const ChainSpec& c);
ChainSpec chain_from_json(const std::string& text);

}  // namespace dynperc
