#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dynperc/chain.hpp"
#include "dynperc/graph.hpp"
#include "dynperc/rng.hpp"

namespace dynperc {

/// Open/closed bit per edge id, packed 64 to a word.
class Environment {
 public:
  Environment() = default;
  explicit Environment(std::size_t edges, bool open = false);
  /// Environment whose bit e is bit e of `index` (|E| <= 64).
  static Environment from_index(std::size_t edges, std::uint64_t index);

  std::size_t size() const { return size_; }
  bool open(EdgeId e) const { return (words_[e >> 6] >> (e & 63)) & 1ULL; }
  void set(EdgeId e, bool value) {
    const std::uint64_t bit = 1ULL << (e & 63);
    if (value) {
      words_[e >> 6] |= bit;
    } else {
      words_[e >> 6] &= ~bit;
    }
  }
  std::size_t count_open() const;
  /// Packed index for |E| <= 64 (inverse of from_index).
  std::uint64_t index() const;

  friend bool operator==(const Environment&, const Environment&) = default;

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

struct FullParams {
  double mu = 1.0;
  double p = 0.5;
};

/// Throws kInvalidArgument unless mu > 0 and p in [0, 1]. Returns warnings
/// (mu > 1 lies outside the regime the comparison constants are stated for).
std::vector<std::string> validate_params(const FullParams& params);

Environment sample_environment(const Graph& g, double p, Rng& rng);
Environment sample_environment(const Graph& g, double p, std::uint64_t seed);

enum class EventKind { kWalkAttempt, kRefresh };

struct FullEvent {
  double time;
  EventKind kind;
  EdgeId edge;
  bool open;        // walk attempt: edge open (step taken); refresh: new bit
  Vertex walk_pos;  // position after the event
};

struct FullTrajectory {
  Vertex x0 = 0;
  Environment eta0;
  std::vector<FullEvent> events;
  Vertex final_pos = 0;
  Environment final_env;
  double horizon = 0.0;
};

/// Event-driven simulator of (X_t, eta_t) with literal refreshes: one
/// composite Exponential(1 + mu|E|) clock; the event is a walk attempt with
/// probability 1/(1 + mu|E|), otherwise a refresh of a uniform edge.
class FullProcessSimulator {
 public:
  FullProcessSimulator(const Graph& g, FullParams params, Vertex x0, Environment eta0, Rng rng);

  FullEvent step();

  double time() const { return time_; }
  Vertex position() const { return pos_; }
  const Environment& environment() const { return env_; }
  Rng& rng() { return rng_; }

 private:
  const Graph* g_;
  FullParams params_;
  double total_rate_;
  double walk_share_;
  double time_ = 0.0;
  Vertex pos_;
  Environment env_;
  Rng rng_;
};

/// Throws kInvalidArgument for horizon <= 0 or mismatched eta0.
FullTrajectory simulate(const Graph& g, const FullParams& params, Vertex x0, const Environment& eta0,
                        double horizon, std::uint64_t seed);

/// "time,kind,edge,open,walk_pos" with one row per event.
void write_trajectory_csv(std::ostream& out, const FullTrajectory& traj);

/// Full-process state index x * 2^|E| + eta.
inline std::size_t full_state_index(std::size_t x, std::uint64_t eta, std::size_t edges) {
  return (x << edges) | static_cast<std::size_t>(eta);
}

/// Rate matrix on V x {0,1}^E with refreshes to the current state collapsed:
/// walk x -> y at rate 1/deg(x) across open edges, closed -> open at rate
/// mu p, open -> closed at rate mu (1 - p). Throws kTooLarge past the limit.
SparseMatrix full_rate_matrix(const Graph& g, const FullParams& params, std::size_t exact_state_limit = 4096);

/// Exact generator with stationary law pi x pi_p (validated, reversible).
/// Throws kTooLarge, and kDegenerateP for p in {0, 1} where pi_p has zero atoms.
ChainSpec build_full_generator(const Graph& g, const FullParams& params, std::size_t exact_state_limit = 4096);

/// E_{(x,eta)}[T_{{y} x {0,1}^E}] for every full state, by a sparse linear solve.
std::vector<double> full_hitting_times_to_vertex(const Graph& g, const FullParams& params, Vertex target,
                                                 std::size_t exact_state_limit = 4096);

struct HittingEstimate {
  double mean;
  double std_error;
  double ci_low;   // 95% normal interval
  double ci_high;
  std::size_t samples;
};

/// Monte Carlo mean of the first time the walk sits at `target`. Samples are
/// drawn in fixed chunks (chunk k uses stream k), so the result does not
/// depend on `workers`.
HittingEstimate estimate_hitting_time_full(const Graph& g, const FullParams& params, Vertex x0,
                                           const Environment& eta0, Vertex target, std::size_t n_samples,
                                           std::uint64_t seed, std::size_t workers = 1);
/// Same, with eta0 ~ pi_p drawn afresh for each sample.
HittingEstimate estimate_hitting_time_full_stationary_env(const Graph& g, const FullParams& params, Vertex x0,
                                                          Vertex target, std::size_t n_samples,
                                                          std::uint64_t seed, std::size_t workers = 1);

/// Exact counterpart of estimate_hitting_time_full by linear solve.
double exact_hitting_time_full(const Graph& g, const FullParams& params, Vertex x0, const Environment& eta0,
                               Vertex target, std::size_t exact_state_limit = 4096);

// ---------------------------------------------------------------------------
// The environment alone: {0,1}^d with each coordinate refreshed at rate mu.

/// Throws kDegenerateP for p in {0, 1}, kTooLarge for 2^d > exact_state_limit.
ChainSpec tilted_hypercube_chain(std::size_t edge_count, double p, double mu,
                                 std::size_t exact_state_limit = 4096);

/// Worst-case max_{a,b} |Q_t(a,b)/nu(b) - 1| from the product formula
/// Q_t(a,a) = e^{-mu t} + (1 - e^{-mu t}) nu(a). Throws kDegenerateP.
double tilted_linf_distance(std::size_t d, double p, double mu, double t);
/// (1/mu) log(d (1 - alpha) / (alpha log(1 + delta))), alpha = min(p, 1 - p).
/// Throws kDegenerateP, kInvalidArgument for delta <= 0 or d = 0.
double tilted_mixing_time_bound(std::size_t d, double p, double mu, double delta);
/// Exact first time tilted_linf_distance drops to eps (bisection to 1e-12 relative).
double tilted_linf_mixing_time(std::size_t d, double p, double mu, double eps);

}  // namespace dynperc
