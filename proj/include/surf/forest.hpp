#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "surf/dist.hpp"

namespace surf {

/// Upper bound on bytes a single build may allocate for its per-vertex arrays
/// (steps, colors, depths). Override per call through `build`.
inline constexpr std::uint64_t kDefaultMemoryBudget = std::uint64_t{6} << 30;

/// Bytes per vertex held by a Forest.
inline constexpr std::uint64_t kForestBytesPerVertex = 8 + 8 + 4;

/// One realization of the attachment process up to its horizon.
///
/// Vertex t in [1, n] attaches to parent t - Z_t; every id <= 0 is a root.
/// Accessors take 1-based vertex ids.
class Forest {
 public:
  Forest() = default;

  /// Deterministic construction from given steps (Z_1, ..., Z_n). Every step
  /// must be >= 1. Colors and depths are filled in one forward pass.
  explicit Forest(std::vector<std::uint64_t> steps);

  static Forest build(const StepDistribution& dist, std::uint64_t n, std::uint64_t seed,
                      std::uint64_t memory_budget = kDefaultMemoryBudget);

  std::uint64_t size() const noexcept { return steps_.size(); }

  std::uint64_t step(std::uint64_t t) const { return steps_[t - 1]; }
  std::int64_t parent(std::uint64_t t) const {
    return static_cast<std::int64_t>(t) - static_cast<std::int64_t>(steps_[t - 1]);
  }
  std::int64_t color(std::uint64_t t) const { return colors_[t - 1]; }
  std::uint32_t depth(std::uint64_t t) const { return depths_[t - 1]; }

  std::span<const std::uint64_t> steps() const noexcept { return steps_; }
  std::span<const std::int64_t> colors() const noexcept { return colors_; }
  std::span<const std::uint32_t> depths() const noexcept { return depths_; }

  bool operator==(const Forest&) const = default;

 private:
  std::vector<std::uint64_t> steps_;
  std::vector<std::int64_t> colors_;
  std::vector<std::uint32_t> depths_;
};

/// Largest horizon accepted by Forest (depths are 32-bit).
inline constexpr std::uint64_t kMaxHorizon = 0xFFFFFFFFULL;

struct ForestStats {
  std::uint64_t horizon = 0;

  /// S_n^{(i)} for every root i <= 0 with at least one attached vertex.
  std::map<std::int64_t, std::uint64_t> tree_sizes;
  /// D_n^{(i)} for every root i <= 0 with at least one child.
  std::map<std::int64_t, std::uint64_t> root_degrees;
  /// D_n^{(t)} for t in [1, n], stored at index t - 1.
  std::vector<std::uint32_t> degrees;

  std::uint64_t num_trees = 0;   // M_n
  std::uint64_t root_hits = 0;   // O_n
  std::uint32_t height = 0;      // H_n
  std::uint32_t height_of_zero = 0;
  std::uint64_t leaves_of_zero = 0;  // L_n
  /// N_1, ..., N_{H_n^{(0)}}: tree-0 vertices per depth (index k - 1).
  std::vector<std::uint64_t> profile_of_zero;

  /// B_1, ..., B_n (index t - 1).
  std::vector<std::uint32_t> block_chain;
  std::uint64_t last_renewal = 0;    // N = max{t : B_t = 1}
  std::uint64_t renewal_visits = 0;  // #{t : B_t = 1}

  std::uint32_t max_degree_positive = 0;
  std::uint32_t max_degree_root = 0;
  std::uint64_t largest_tree = 0;

  std::uint64_t size_of_zero() const {
    auto it = tree_sizes.find(0);
    return it == tree_sizes.end() ? 0 : it->second;
  }
};

/// All per-realization statistics of the prefix [1, horizon] of `f`
/// (horizon = 0 means the whole forest). The prefix of a realization is the
/// realization at the smaller horizon, so one build serves several horizons.
ForestStats compute_stats(const Forest& f, std::uint64_t horizon = 0);

/// N_1, ..., N_kmax for the tree rooted at 0.
std::vector<std::uint64_t> profile(const Forest& f, std::uint32_t kmax, std::uint64_t horizon = 0);

struct MaxDegree {
  std::uint32_t over_positive = 0;
  std::uint32_t over_roots = 0;
};

MaxDegree max_degree(const Forest& f, std::uint64_t horizon = 0);

}  // namespace surf
