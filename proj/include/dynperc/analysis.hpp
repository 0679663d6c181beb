#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "dynperc/chain.hpp"
#include "dynperc/graph.hpp"

namespace dynperc {

using StateSet = std::vector<std::size_t>;

/// Simple random walk on g: P(x,y) = 1/deg(x) for neighbours, or the
/// continuous-time version L = P - I with jump rate 1.
ChainSpec srw_chain(const Graph& g, bool continuous);

/// 1/2 sum_{x,y} pi(x) L(x,y) (f(x) - f(y))^2 (L = P - I for discrete chains).
double dirichlet_form(const ChainSpec& c, std::span<const double> f);
/// pi(-L f . f); equals dirichlet_form for every chain with stationary pi.
double dirichlet_form_operator(const ChainSpec& c, std::span<const double> f);

double expectation(std::span<const double> pi, std::span<const double> f);
double variance(std::span<const double> pi, std::span<const double> f);

ChainSpec time_reversal(const ChainSpec& c);
/// (L + L*) / 2, reversible with respect to the same pi.
ChainSpec additive_symmetrization(const ChainSpec& c);

/// D^{1/2} (-L^s) D^{-1/2}: symmetric, same spectrum as -L^s.
Eigen::MatrixXd symmetrized_operator(const ChainSpec& c);

/// Ascending eigenvalues of -L^s.
Eigen::VectorXd spectrum(const ChainSpec& c);
/// Smallest positive eigenvalue of -L^s (the gap of I - P for discrete
/// chains). Non-reversible chains are handled through their additive
/// symmetrization. Throws kNotIrreducible.
double spectral_gap(const ChainSpec& c);
double relaxation_time(const ChainSpec& c);

/// Smallest eigenvalue of -L^s killed outside A. Throws kEmptySet/kFullSet.
double dirichlet_eigenvalue(const ChainSpec& c, const StateSet& a);
/// min E(h,h)/Var(h) over h supported in the proper subset A.
double variance_normalized_minimum(const ChainSpec& c, const StateSet& a);

/// Matrix of E_x[T_y]; zero diagonal. Throws kSingularSystem.
Eigen::MatrixXd hitting_times(const ChainSpec& c);
/// E_x[T_A] for every state x (zero on A).
std::vector<double> hitting_times_to_set(const ChainSpec& c, const StateSet& target);
/// E_a[T_b] + E_b[T_a]. Throws kSameState.
double commute_time(const ChainSpec& c, std::size_t a, std::size_t b);
/// Dirichlet-principle value: min E(f,f) over f(a) = 1, f(b) = 0, computed
/// from the harmonic extension. Equals 1/commute_time for reversible chains.
/// Throws kSameState, kNotReversible.
double effective_conductance(const ChainSpec& c, std::size_t a, std::size_t b);

/// Time-t kernel: e^{tL} for continuous chains, P^t (t rounded down) for
/// discrete ones. Reversible chains use their eigendecomposition; others use
/// uniformization with truncation error below 1e-12.
class KernelEvaluator {
 public:
  explicit KernelEvaluator(const ChainSpec& c);
  ~KernelEvaluator();
  KernelEvaluator(KernelEvaluator&&) noexcept;
  KernelEvaluator& operator=(KernelEvaluator&&) noexcept;

  Eigen::MatrixXd kernel(double t) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Eigen::MatrixXd transition_kernel(const ChainSpec& c, double t);
/// Uniformized e^{tQ} for a (possibly sub-stochastic) rate matrix Q.
Eigen::MatrixXd uniformized_exponential(const Eigen::MatrixXd& q, double t);

enum class DistanceNorm { kTV, kL2, kLinf };

double tv_distance(std::span<const double> nu, std::span<const double> pi);
/// ||nu - pi||_{2,pi} = ||nu/pi - 1||_2 under pi.
double l2_distance(std::span<const double> nu, std::span<const double> pi);
double linf_distance(std::span<const double> nu, std::span<const double> pi);
double distance(std::span<const double> nu, std::span<const double> pi, DistanceNorm norm);

struct WorstCaseStart {};
using MixingStart = std::variant<WorstCaseStart, std::size_t, std::vector<double>>;

/// First time the distance to pi drops to eps. Continuous chains: doubling
/// grid then bisection to 1e-4 t_rel, returning the upper endpoint.
/// Discrete chains: smallest integer t. Throws kTooLarge past
/// exact_state_limit states.
double mixing_time(const ChainSpec& c, double eps, DistanceNorm norm,
                   const MixingStart& start = WorstCaseStart{},
                   std::size_t exact_state_limit = 4096);

/// Distance to pi at time t from the given start (worst case over states by
/// default).
double distance_at(const KernelEvaluator& k, std::span<const double> pi, double t,
                   DistanceNorm norm, const MixingStart& start);

/// P_pi(T_{A^c} > t) = sum_{x in A} pi(x) (e^{t L_A} 1)(x).
double survival_outside(const ChainSpec& c, const StateSet& a, double t);
/// Exponential decay rate of t -> P_pi(T_{A^c} > t), fitted from the exact
/// tail of the killed semigroup at geometrically growing times.
double killed_decay_rate(const ChainSpec& c, const StateSet& a);

/// Complement of A within the state space of c.
StateSet complement(std::size_t n, const StateSet& a);
double mass(std::span<const double> pi, const StateSet& a);

}  // namespace dynperc
