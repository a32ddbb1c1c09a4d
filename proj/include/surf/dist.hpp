#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "surf/rng.hpp"

namespace surf {

enum class Family { constant, table, geometric, zipf, logheavy };

std::string_view family_name(Family f) noexcept;

struct MeanInfo {
  bool finite = false;
  std::optional<double> value;
  bool second_moment_finite = false;
};

/// Exact rational form of a finite-support pmf: q_k = numerators[k-1] / denominator.
/// Only present when every table entry parsed as an exact decimal or fraction.
struct RationalPmf {
  std::vector<std::uint64_t> numerators;
  std::uint64_t denominator = 1;
};

/// Steps at or beyond this value are not resolved exactly; a draw whose
/// exact value would reach it is mapped to a uniformly random value in
/// [kSaturatedStep, kSaturatedStep + 2^61). Every vertex with such a step
/// attaches to its own root with overwhelming probability.
inline constexpr std::uint64_t kSaturatedStep = std::uint64_t{1} << 62;

/// Law of the step Z on {1, 2, ...}.
///
/// Immutable after construction. Copies share the precomputed tail and guide
/// tables, so passing by value is cheap and concurrent reads are safe.
///
/// Unbounded families keep an exact suffix-sum table of p_n for n <= 2^20 and
/// an Euler-Maclaurin closed form beyond it; sampling inverts the tail
/// (Z = max{n : p_n >= V}, V uniform on (0,1]) through a bucket guide table
/// and falls back to bracketed bisection on the closed-form tail past the
/// table.
class StepDistribution {
 public:
  /// Parses `const:<k>`, `table:<p1>,<p2>,...`, `geom:<theta>`,
  /// `zipf:<alpha>` or `logheavy`. Table entries may be decimals or `a/b`.
  static StepDistribution parse(std::string_view spec);

  static StepDistribution constant(std::uint64_t k);
  static StepDistribution table(std::vector<double> probabilities);
  static StepDistribution geometric(double theta);
  static StepDistribution zipf(double alpha);
  static StepDistribution logheavy();

  Family family() const noexcept;
  const std::string& spec() const noexcept;
  /// Family parameters: {k}, {theta}, {alpha}, the table, or empty.
  const std::vector<double>& params() const noexcept;

  /// q_n. Zero for n = 0.
  double pmf(std::uint64_t n) const;
  /// p_n = P{Z >= n}. One for n <= 1.
  double tail(std::uint64_t n) const;
  /// m_n = sum_{t=1}^n p_t = E min(Z, n).
  double truncated_mean(std::uint64_t n) const;
  /// (m_0, m_1, ..., m_n) with m_0 = 0.
  std::vector<double> truncated_means(std::uint64_t n) const;
  /// (q_0 = 0, q_1, ..., q_n).
  std::vector<double> pmf_prefix(std::uint64_t n) const;

  MeanInfo mean_info() const;

  /// Largest n with q_n > 0, when the support is finite.
  std::optional<std::uint64_t> support_max() const noexcept;
  /// Largest n such that q_t may be nonzero for some t >= n when evaluated in
  /// double precision. Equals support_max() for finite supports; for the
  /// geometric family it is where q_n underflows; otherwise none.
  std::optional<std::uint64_t> effective_support() const noexcept;
  /// gcd of the support (1 for every unbounded family).
  std::uint64_t period() const noexcept;
  double q_max() const;

  std::uint64_t sample(Rng& rng) const;
  void sample_into(Rng& rng, std::span<std::uint64_t> out) const;

  const std::optional<RationalPmf>& rational() const noexcept;

  /// Number of tail-table entries (sampling table length).
  std::uint64_t table_size() const noexcept;

  struct Impl;

 private:
  explicit StepDistribution(std::shared_ptr<const Impl> impl);
  std::uint64_t sample_beyond_table(double v, Rng& rng) const;

  std::shared_ptr<const Impl> impl_;
};

/// Hurwitz zeta sum_{k >= n} k^{-s} for s > 1, n >= 1. Partial sum up to
/// 2^20 terms plus an Euler-Maclaurin tail; absolute error below 1e-13 for
/// s >= 1.01.
double hurwitz_zeta(double s, std::uint64_t n);

}  // namespace surf
