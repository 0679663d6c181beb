#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dynperc/full_process.hpp"
#include "dynperc/graph.hpp"

namespace dynperc {

/// Cartesian (mu, p) grid; cells are enumerated mu-major.
struct ParamGrid {
  std::vector<double> mus;
  std::vector<double> ps;

  std::vector<FullParams> cells() const;
  /// Adds the midpoint between each pair of consecutive values on both axes.
  ParamGrid refined() const;
};

struct ComparisonCell {
  double mu;
  double p;
  double full_value;
  double srw_value;
  double ratio;
  /// Extra named quantities; every cell of a report carries the same names.
  std::vector<std::pair<std::string, double>> extras;
};

struct Verdict {
  std::string name;
  bool pass;
  std::string detail;
  bool statistical = false;  // Monte Carlo based; reported, never decides exit status
};

struct ComparisonReport {
  std::string experiment;
  std::string graph;
  std::string ratio_label;
  std::vector<ComparisonCell> cells;
  double empirical_constant = 0.0;  // max ratio over the grid
  std::vector<Verdict> verdicts;

  bool all_pass() const;
  /// Every non-statistical verdict passed.
  bool exact_pass() const;
  void add_verdict(std::string name, bool pass, std::string detail = {}, bool statistical = false);
  /// Recomputes empirical_constant and adds the finiteness verdict.
  void finalize();
};

/// Doubles rounded to 12 significant digits.
std::string report_to_json(const ComparisonReport& r);
/// One row per grid cell: mu,p,full,srw,ratio,<extras...>.
void write_report_csv(std::ostream& out, const ComparisonReport& r);

/// Formats with 12 significant digits (shared by every text output).
std::string format_number(double v);

// ---------------------------------------------------------------------------

struct HittingComparisonOptions {
  bool exact = true;              // worst case over (x, eta, y) by linear solves
  std::size_t mc_samples = 0;     // 0 disables the Monte Carlo path
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t exact_state_limit = 4096;
};

/// Full-process worst hitting time against the continuous-time SRW one; the
/// reported ratio is p * t_hit^full / t_hit^SRW. The Monte Carlo path
/// estimates every ordered pair from the all-closed environment and from
/// eta ~ pi_p and, when the exact path also runs, checks the all-closed
/// estimates against the exact values with Bonferroni-adjusted intervals.
ComparisonReport check_hitting_comparison(const Graph& g, const ParamGrid& grid,
                                          const HittingComparisonOptions& opts = {});

/// Ratio t_rel^full * mu p / t_rel^SRW from exact eigensolves.
ComparisonReport check_relaxation_comparison(const Graph& g, const ParamGrid& grid, std::size_t workers = 1,
                                             std::size_t exact_state_limit = 4096);

/// Ratio mu min(p c_LS^SRW, 1 / (log(1/pi_*) log(1/(p(1-p))))) / c_LS^full,
/// using the upper SRW bracket and the lower full bracket; its maximum is the
/// reciprocal of the empirical constant of the lower bound.
ComparisonReport check_ls_comparison(const Graph& g, const ParamGrid& grid, std::size_t workers = 1,
                                     std::uint64_t seed = 7);

/// Exact t_mix^{full,Linf}(1/4) against (1/(mu p)) t_sp^SRW(1/4) + |log(1-p)|/mu,
/// plus the environment-only Linf mixing time against the tilted-hypercube bound.
ComparisonReport mixing_upper_bound_experiment(const Graph& g, const ParamGrid& grid, std::size_t workers = 1,
                                               std::size_t exact_state_limit = 4096);

// ---------------------------------------------------------------------------
// Percolation clusters.

enum class ClusterMethod { kExact, kMonteCarlo };

struct ClusterStats {
  double m_p;     // E|dK||K|^2
  double n_p;     // E|K|
  double m_se;    // standard errors; zero in exact mode
  double n_se;
  ClusterMethod method;
  std::size_t samples;  // environments summed or sampled
  Vertex base;
};

/// Vertices of the open cluster of `base`, with the number of edges leaving it.
struct Cluster {
  std::vector<Vertex> vertices;
  std::size_t boundary;
};
Cluster open_cluster(const Graph& g, const Environment& eta, Vertex base);

/// Throws kNotTransitive unless g is certified or passes the heuristic check,
/// kTooLarge for exact mode beyond 20 edges.
ClusterStats cluster_stats(const Graph& g, double p, ClusterMethod method, std::size_t budget = 1000000,
                           std::uint64_t seed = 1, Vertex base = 0, std::size_t workers = 1);

struct ModerateGrowthOptions {
  bool strict = false;  // throw kPreconditionFailed when N_p > diameter/4
  std::size_t exact_state_limit = 4096;
};

struct ModerateGrowthResult {
  ClusterStats stats;
  std::size_t diameter;
  bool applicable;       // N_p <= diameter / 4
  double bound;          // (diameter - 4 N_p)^2 / (mu p M_p); NaN when not applicable
  double dirichlet_f;    // E(f, f) on the exact full generator
  double variance_f;
  double variational;    // Var(f) / E(f, f)
  double t_rel_full;
  double bkk_rhs;        // 4 mu p M_p
  bool bkk_holds;
  bool variational_holds;
  double alternate_base_gap;  // |stats at base 1 - stats at base 0|, max over M_p, N_p
};

/// Test function f(x, eta) = mean of d(v, o) over the open cluster of x.
std::vector<double> cluster_distance_function(const Graph& g, Vertex origin);

ModerateGrowthResult moderate_growth_lower_bound(const Graph& g, const FullParams& params,
                                                 const ModerateGrowthOptions& opts = {});

}  // namespace dynperc
