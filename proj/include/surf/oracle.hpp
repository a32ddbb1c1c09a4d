#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "surf/dist.hpp"

/// Brute-force ground truth: every step sequence over a finite support is
/// enumerated and weighted by its probability.
namespace surf::oracle {

inline constexpr std::uint64_t kDefaultBudget = 10'000'000;

/// An expectation or probability. `rational` holds the reduced fraction
/// ("13/9") when the enumeration ran in exact integer arithmetic.
struct Value {
  long double value = 0.0L;
  std::string rational;
};

struct EnumerationResult {
  std::string spec;
  std::uint64_t horizon = 0;
  std::uint64_t support = 0;  // number of step values with q > 0
  std::uint64_t max_step = 0;
  std::uint64_t sequences = 0;
  bool exact = false;  // integer weights throughout

  Value em, eo, el, eh, eh_zero;
  /// r_0..r_n, with r_t = P{C_t = 0}.
  std::vector<Value> r;
  /// 1 + E S_t^{(0)} for t = 0..n.
  std::vector<Value> rhat;
  /// E S_n^{(i)} for i = 0, -1, ..., 1 - max_step (index -i).
  std::vector<Value> size_by_root;
  /// E D_n^{(i)} for the same roots (index -i).
  std::vector<Value> degree_root;
  /// E D_n^{(t)} for t = 1..n (index t - 1).
  std::vector<Value> degree_positive;
  /// P{X = k} for k = 0..n.
  std::vector<Value> dist_m, dist_o, dist_l, dist_h;
};

/// Enumerates all support^n sequences in lexicographic (odometer) order.
/// Throws SpecError for unbounded supports and BudgetError when
/// support^n exceeds `budget`. The result does not depend on `threads`.
EnumerationResult enumerate_exact(const StepDistribution& d, std::uint64_t n,
                                  std::uint64_t budget = kDefaultBudget, unsigned threads = 1);

nlohmann::ordered_json to_json(const EnumerationResult& result);

}  // namespace surf::oracle
