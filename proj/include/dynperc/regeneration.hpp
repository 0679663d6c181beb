#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dynperc/full_process.hpp"
#include "dynperc/graph.hpp"
#include "dynperc/rng.hpp"

namespace dynperc {

enum class InitialInfection { kEmpty, kAllEdges };

enum class InfectionEventKind {
  kWalkAttempt,   // adds the real element of the examined edge, or a copy if it is present
  kRemoveReal,    // removal clock picked the real element: the edge is refreshed
  kRemoveCopy,    // removal clock picked a copy
  kFreeRefresh,   // rate-mu clock of an edge whose real element is absent
};

struct InfectionEvent {
  double time;
  InfectionEventKind kind;
  EdgeId edge;
};

/// The full process driven through the infected multiset R_t.
///
/// R holds, per edge, an optional real element plus a count of copies. A
/// walk attempt (rate 1) adds the real element of the examined edge when it
/// is absent, otherwise a copy. A clock of rate mu|R| removes a uniform
/// element of R counting multiplicity; removing a real element refreshes the
/// edge to Ber(p). Edges whose real element is absent refresh at rate mu.
///
/// Copies never block re-adding the real element. The alternative reading,
/// where surviving copies count as "the edge being in R", leaves an edge that
/// was examined after its last refresh without a pending refresh, so the
/// environment at an empty R would no longer be fresh.
class InfectedWalk {
 public:
  InfectedWalk(const Graph& g, FullParams params, Vertex x0, Environment eta0, InitialInfection init, Rng rng);

  InfectionEvent step();
  /// Runs to the next regeneration: the first time R is empty after (or at)
  /// the first walk attempt from now when R is currently empty, otherwise
  /// the first time R empties. Returns that time.
  double run_to_regeneration();

  double time() const { return time_; }
  Vertex position() const { return pos_; }
  const Environment& environment() const { return env_; }
  std::size_t infected_size() const { return tokens_.size(); }
  bool real_present(EdgeId e) const { return real_[e] != 0; }
  std::uint32_t copies(EdgeId e) const { return copies_[e]; }
  std::uint64_t walk_attempts() const { return walk_attempts_; }
  const std::vector<std::uint64_t>& refresh_counts() const { return refresh_counts_; }
  Rng& rng() { return rng_; }

  /// Tracks the last examination and refresh time per edge and checks, at
  /// every event, that the real element is present exactly when the edge
  /// was examined after its last refresh.
  void set_instrumented(bool on);
  std::uint64_t invariant_checks() const { return invariant_checks_; }
  std::uint64_t invariant_violations() const { return invariant_violations_; }
  /// Full scan over all edges; true when the invariant holds everywhere.
  bool invariant_holds() const;

 private:
  void add_element(EdgeId e);
  void free_edge(EdgeId e);
  void unfree_edge(EdgeId e);
  void refresh(EdgeId e);
  void check_edge(EdgeId e);

  const Graph* g_;
  FullParams params_;
  double time_ = 0.0;
  Vertex pos_;
  Environment env_;
  Rng rng_;

  std::vector<char> real_;
  std::vector<std::uint32_t> copies_;
  std::vector<EdgeId> tokens_;  // one entry per element of R
  std::vector<EdgeId> free_;    // edges without their real element in R
  std::vector<std::size_t> free_pos_;
  std::vector<std::uint64_t> refresh_counts_;
  std::uint64_t walk_attempts_ = 0;

  bool instrumented_ = false;
  std::vector<double> last_exam_;
  std::vector<double> last_refresh_;
  std::uint64_t invariant_checks_ = 0;
  std::uint64_t invariant_violations_ = 0;
};

struct RegenerationTrace {
  std::vector<double> taus;       // tau_0 = 0, tau_1, ...
  std::vector<Vertex> positions;  // Y_i = X_{tau_i}
  std::vector<double> spacings;   // tau_i - tau_{i-1}, i >= 1
};

RegenerationTrace simulate_with_infection(const Graph& g, const FullParams& params, Vertex x0,
                                          const Environment& eta0, InitialInfection init, std::size_t n_regens,
                                          std::uint64_t seed);

/// "i,tau,spacing,position"; the spacing column is empty for i = 0.
void write_trace_csv(std::ostream& out, const RegenerationTrace& trace);

struct MeanEstimate {
  double mean;
  double std_error;
  double ci_low;
  double ci_high;
  std::size_t samples;
};

/// Mean first emptying time of R started from all |E| real elements, with
/// eta_0 ~ pi_p and X_0 = 0.
MeanEstimate first_regeneration_from_all_infected(const Graph& g, const FullParams& params, std::uint64_t seed,
                                                  std::size_t n_samples, std::size_t workers = 1);

/// Exact E_k[T_0] for the birth-death chain with q(i,i+1) = 1, q(i,i-1) = mu i.
double birth_death_emptying_time(std::size_t k, double mu);

/// Y_1..Y_n of the auxiliary chain from x0 with eta_0 ~ pi_p and R_0 empty.
std::vector<Vertex> aux_chain_sample(const Graph& g, const FullParams& params, Vertex x0, std::size_t n_steps,
                                     std::uint64_t seed);

struct AuxTransitionEstimate {
  std::vector<std::vector<std::uint64_t>> counts;
  std::vector<std::vector<double>> p;
  std::vector<std::vector<double>> ci_low;  // 95% Wilson intervals
  std::vector<std::vector<double>> ci_high;
  std::size_t samples_per_state;
};

/// Restart protocol: from each x, fresh eta ~ pi_p and empty R, run to tau_1
/// and record X_{tau_1}.
AuxTransitionEstimate estimate_aux_transition(const Graph& g, const FullParams& params,
                                              std::size_t n_samples_per_state, std::uint64_t seed,
                                              std::size_t workers = 1);

struct IndependenceResult {
  double tv_marginal;     // TV(empirical law of eta_{tau_1}, pi_p)
  double tv_product_gap;  // TV(empirical joint, product of empirical marginals)
  std::vector<std::uint64_t> joint_counts;  // index x * 2^|E| + eta
  std::size_t samples;
};

/// Throws kTooLarge when |V| 2^|E| > 64.
IndependenceResult regeneration_independence_test(const Graph& g, const FullParams& params, std::size_t n_samples,
                                                  std::uint64_t seed, Vertex x0 = 0, std::size_t workers = 1);

struct OccupancyResult {
  std::vector<std::uint64_t> histogram;  // counts of |R| at snapshot times
  std::size_t snapshots;
  double mean;
  double chi2;
  double dof;
  double p_value;  // against Poisson(1/mu)
};

/// Snapshots |R| every `spacing` time units (default 5/mu) after a burn-in of
/// 10/mu, over `n_events` simulated events in total.
OccupancyResult infection_occupancy_test(const Graph& g, const FullParams& params, std::size_t n_events,
                                         std::uint64_t seed, double spacing = 0.0);

struct SpacingDiagnostics {
  double mean;
  double std_error;
  double ljung_box_q;
  double ljung_box_p;
  double tail_rate;  // slope of -log survival over the upper tail
  double tail_r2;    // linearity of the log-survival fit
};

SpacingDiagnostics spacing_diagnostics(const std::vector<double>& spacings, std::size_t lags = 10);

struct InvariantReport {
  std::uint64_t events;
  std::uint64_t checks;
  std::uint64_t violations;
  bool final_scan_ok;
};

InvariantReport run_invariant_check(const Graph& g, const FullParams& params, std::size_t n_events,
                                    std::uint64_t seed);

struct RefreshRateReport {
  double horizon;
  std::size_t replicates;
  std::vector<double> mean_counts;  // per edge, expected mu * horizon
  std::vector<double> var_counts;   // per edge, expected mu * horizon
  double max_abs_z;                 // worst standardized per-edge mean
  double dispersion_p;              // chi-square dispersion test, pooled over edges
};

/// Independent replicates of length `horizon` from (x0 = 0, pi_p, empty R).
RefreshRateReport refresh_rate_check(const Graph& g, const FullParams& params, double horizon,
                                     std::size_t replicates, std::uint64_t seed, std::size_t workers = 1);

struct WaldReport {
  MeanEstimate direct;        // T_y of the full process from (x, pi_p)
  MeanEstimate regen_time;    // tau_N with N the first aux index hitting y
  MeanEstimate aux_steps;     // N
  double wald_prediction;     // e^{1/mu} E[N]
  double wald_difference;     // mean(tau_N - e^{1/mu} N)
  double wald_difference_se;
};

WaldReport wald_cross_estimate(const Graph& g, const FullParams& params, Vertex x, Vertex y,
                               std::size_t n_samples, std::uint64_t seed, std::size_t workers = 1);

}  // namespace dynperc
