#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "surf/dist.hpp"

/// Deterministic expectations, recursions and probability bounds for the
/// subtractive forest. Every function is pure and safe to call concurrently.
namespace surf::exact {

/// r_0..r_n with r_0 = 1 and r_t = sum_{s=1}^t q_s r_{t-s} = P{C_t = 0}.
std::vector<double> renewal_sequence(const StepDistribution& d, std::uint64_t n);

struct SizeSeries {
  std::vector<double> rhat;         // root-inclusive, rhat[0] = 1
  std::vector<double> r_exclusive;  // rhat[t] - 1 = E S_t^{(0)}
};

/// Expected size of the tree rooted at 0, from the recursion
/// R^_t = 1 + sum_{s=1}^t q_s R^_{t-s}.
SizeSeries expected_size_series(const StepDistribution& d, std::uint64_t n);

/// E S_n^{(i)} for a root i <= 0 (root excluded), given rhat[0..n].
double expected_size_rooted(const StepDistribution& d, std::span<const double> rhat, std::int64_t i);
double expected_size_rooted(const StepDistribution& d, std::uint64_t n, std::int64_t i);

/// E N_k(n) = P{X_1 + ... + X_k <= n}: expected number of tree-0 vertices at
/// depth k among [1, n].
double profile_expectation(const StepDistribution& d, std::uint64_t n, std::uint32_t k);
/// E N_1(n), ..., E N_kmax(n) (index k - 1), sharing the convolutions.
std::vector<double> profile_expectations(const StepDistribution& d, std::uint64_t n, std::uint32_t kmax);

struct LeavesResult {
  double value = 0.0;       // E L_n
  double ratio = 0.0;       // E L_n / E S_n^{(0)}
  double bracket_lo = 0.0;  // exp(-1 / (1 - q_max))
  double bracket_hi = 0.0;  // exp(-1)
};

LeavesResult expected_leaves(const StepDistribution& d, std::uint64_t n);
/// E L_0..E L_n given r_0..r_n.
std::vector<double> expected_leaves_series(const StepDistribution& d, std::span<const double> r);

struct TreesResult {
  double eo = 0.0;        // E O_n = m_n
  double em = 0.0;        // E M_n
  double em_error = 0.0;  // certified bound on |em - E M_n|
  double var_o = 0.0;     // Var O_n
  bool converged = true;  // em_error <= epsilon
  std::uint64_t roots_summed = 0;
};

/// E M_n sums 1 - prod_{t=1}^n (1 - q_{t-i}) over roots i <= 0. Terms are
/// summed exactly until the dropped remainder, approximated to first order by
/// sum_{j=J+1}^{J+n} p_j, is certified within epsilon; non-convergence within
/// `max_roots` terms is reported rather than thrown.
TreesResult expected_trees(const StepDistribution& d, std::uint64_t n, double epsilon,
                           std::uint64_t max_roots = std::uint64_t{1} << 27);

/// E D_n^{(i)}: p_{1-i} - p_{n-i+1} for roots, 1 - p_{n-i+1} for 1 <= i <= n.
double expected_degree(const StepDistribution& d, std::uint64_t n, std::int64_t i);
/// Limit variance 1 - sum q_t^2 of a positive vertex's degree.
double degree_variance_limit(const StepDistribution& d);

/// P{tree 0 is infinite}: 1/E Z for finite mean, else 0.
double survival_probability(const StepDistribution& d);

struct BlockSurvival {
  double exact = 0.0;                 // P{B_t = t for all t <= n}
  std::optional<double> lower_bound;  // exp(-E Z / q_1)
};

BlockSurvival block_survival(const StepDistribution& d, std::uint64_t n);

struct HeightBound {
  double mean_bound = 0.0;  // (2 + ln n) / p_n, +inf when p_n = 0
  double tail_bound = 0.0;  // min(1, sum_t exp(-k p_t)) >= P{H_n > k}
  bool finite = true;
};

HeightBound bound_height(const StepDistribution& d, std::uint64_t n, std::uint64_t k);

enum class SeriesStatus { converged, divergent, uncertified };

struct DegreeBounds {
  double positive_tail = 0.0;       // n e^{x - 1 - x ln x}
  std::optional<double> root_tail;  // (e/x)^x sum_t p_t^x
  SeriesStatus root_series = SeriesStatus::converged;
  double root_series_error = 0.0;
};

DegreeBounds bound_degrees(const StepDistribution& d, std::uint64_t n, double x, double tolerance = 1e-12);

struct ChernoffBounds {
  /// (EM/(EM+x))^{EM+x} e^{-x}, exactly as displayed for the upper tail.
  double upper = 0.0;
  /// e^{-x^2 / (2 EM)} for the lower tail.
  double lower = 0.0;
  /// (EM/(EM+x))^{EM+x} e^{x}: the standard Chernoff upper-tail bound for
  /// sums of negatively associated indicators with mean EM.
  double upper_standard = 0.0;
};

ChernoffBounds bound_chernoff_M(double em, double x);

struct Certified {
  double value = 0.0;
  double error = 0.0;
  bool finite = true;
};

/// sum_{i >= 1} i p_{i+1} = E Z(Z-1)/2, the scale linking E N to E N_1.
/// For zipf the tail past 2^20 terms is enclosed analytically; `error` is the
/// half-width of that enclosure.
Certified renewal_index_scale(const StepDistribution& d);

/// Columns of the exported series table, indexed by t = 0..n.
struct ExactSeries {
  std::uint64_t horizon = 0;
  std::vector<double> r;
  std::vector<double> rhat;
  std::vector<double> m;
  std::vector<double> el;
};

ExactSeries exact_series(const StepDistribution& d, std::uint64_t n);

}  // namespace surf::exact
