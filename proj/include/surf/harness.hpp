#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "surf/dist.hpp"

namespace surf {

inline constexpr std::uint64_t kDefaultSeed = 20240601;
inline constexpr double kDefaultEpsilon = 1e-6;

std::string_view tool_version() noexcept;

/// Statistic names accepted in ExperimentConfig::stats:
///   M, O, H, H0, L, S0, Dmax, Droot_max, N, N_1, escape, largest_frac,
///   M_over_m, M_gt_O, r (indicator C_n = 0), S:<i> (size of tree i <= 0),
///   D:<i> (degree of vertex i), profile:<k> (N_k of tree 0).
/// Names of verify checks accepted in ExperimentConfig::checks are listed by
/// all_check_names().
struct ExperimentConfig {
  std::string dist;
  std::vector<std::uint64_t> horizons;
  std::uint64_t reps = 100;
  std::uint64_t seed = kDefaultSeed;
  std::vector<std::string> stats;
  std::vector<std::string> checks;
  unsigned threads = 0;  // 0 = all hardware threads
  double epsilon = kDefaultEpsilon;
  std::uint32_t kmax = 5;  // depths covered by the profile-mean check
  /// Statistics whose raw per-replication samples are kept in the report
  /// (at every horizon).
  std::vector<std::string> keep_samples;

  /// Throws SpecError on an empty/unsorted horizon list, reps = 0 or an
  /// unknown statistic/check name.
  void validate() const;
};

/// Reads the flat `key = value` format (one pair per line, `#` comments).
/// Keys: dist, horizons (or sizes), reps, seed, stats, checks, threads,
/// epsilon, kmax. Lists are comma separated.
ExperimentConfig parse_config(std::string_view text);

struct StatSummary {
  std::string stat;
  std::uint64_t n = 0;
  std::uint64_t reps = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (divisor R - 1)
  double se = 0.0;  // sd / sqrt(R)
  double min = 0.0;
  double max = 0.0;
};

enum class Verdict { pass, fail, not_applicable };
std::string_view verdict_name(Verdict v) noexcept;

struct CheckResult {
  std::string name;
  std::uint64_t n = 0;
  Verdict verdict = Verdict::not_applicable;
  double measured = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  std::string relation;  // how measured is compared with reference
  std::string source;    // exact, oracle, bound or simulation
  bool proxy = false;    // finite-size stand-in for an asymptotic claim
  std::string detail;
};

struct ExperimentReport {
  std::string spec;
  std::uint64_t seed = 0;
  std::uint64_t reps = 0;
  std::vector<std::uint64_t> horizons;
  std::string version;
  std::map<std::string, bool> hypotheses;
  std::vector<StatSummary> stats;
  std::vector<CheckResult> checks;
  /// stat name -> horizon -> samples, for ExperimentConfig::keep_samples.
  std::map<std::string, std::map<std::uint64_t, std::vector<double>>> samples;

  const StatSummary* find(std::string_view stat, std::uint64_t n) const;
  bool any_failed() const;
};

/// Replication r (0-based) builds Forest(d, max horizon, derive_seed(seed, r))
/// and is observed at every horizon; smaller horizons are prefixes of the same
/// realization. Results are identical for any thread count.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// The full check list on the given sizes.
ExperimentReport verify_suite(const StepDistribution& d, std::vector<std::uint64_t> sizes, std::uint64_t seed,
                              std::uint64_t reps = 1000, unsigned threads = 0, double epsilon = kDefaultEpsilon);

std::vector<std::string> all_check_names();

struct CltResult {
  double ks_statistic = 0.0;
  double critical = 0.0;  // Kolmogorov critical value at level 1e-3
  bool pass = false;
  std::string diagnostic;
};

/// Kolmogorov-Smirnov distance between the standardized samples and N(0, 1).
/// Requires sigma > 0 and at least 200 samples.
CltResult clt_check(std::span<const double> samples, double mu, double sigma);

/// O_n for replications 0..reps-1 (same seeds as run_experiment), computed
/// from the steps alone.
std::vector<double> sample_root_hits(const StepDistribution& d, std::uint64_t n, std::uint64_t reps,
                                     std::uint64_t seed, unsigned threads = 0);

nlohmann::ordered_json to_json(const ExperimentReport& report);
/// Fixed-width human-readable rendering of the stats and checks.
std::string to_table(const ExperimentReport& report);
/// One row per (stat, n): `stat,n,reps,mean,sd,se,min,max`.
std::string stats_csv(const ExperimentReport& report);

}  // namespace surf
