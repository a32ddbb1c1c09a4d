#include "surf/forest.hpp"

#include <algorithm>
#include <string>

#include "surf/errors.hpp"

namespace surf {

namespace {

void check_horizon(std::uint64_t n, std::uint64_t memory_budget) {
  if (n > kMaxHorizon) {
    throw BudgetError("horizon " + std::to_string(n) + " exceeds the maximum " + std::to_string(kMaxHorizon));
  }
  if (n > memory_budget / kForestBytesPerVertex) {
    throw BudgetError("horizon " + std::to_string(n) + " needs " + std::to_string(n * kForestBytesPerVertex) +
                      " bytes, over the memory budget of " + std::to_string(memory_budget));
  }
}

void fill_colors(std::span<const std::uint64_t> steps, std::vector<std::int64_t>& colors,
                 std::vector<std::uint32_t>& depths) {
  const std::size_t n = steps.size();
  colors.resize(n);
  depths.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = static_cast<std::int64_t>(i + 1);
    const auto p = t - static_cast<std::int64_t>(steps[i]);
    if (p <= 0) {
      colors[i] = p;
      depths[i] = 1;
    } else {
      colors[i] = colors[static_cast<std::size_t>(p - 1)];
      depths[i] = depths[static_cast<std::size_t>(p - 1)] + 1;
    }
  }
}

}  // namespace

Forest::Forest(std::vector<std::uint64_t> steps) : steps_(std::move(steps)) {
  check_horizon(steps_.size(), kDefaultMemoryBudget);
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    if (steps_[i] == 0) throw SpecError("step Z_" + std::to_string(i + 1) + " must be >= 1");
    if (steps_[i] >= (std::uint64_t{1} << 63)) throw SpecError("step Z_" + std::to_string(i + 1) + " too large");
  }
  fill_colors(steps_, colors_, depths_);
}

Forest Forest::build(const StepDistribution& dist, std::uint64_t n, std::uint64_t seed,
                     std::uint64_t memory_budget) {
  check_horizon(n, memory_budget);
  Forest f;
  f.steps_.resize(n);
  Rng rng(seed);
  dist.sample_into(rng, f.steps_);
  fill_colors(f.steps_, f.colors_, f.depths_);
  return f;
}

ForestStats compute_stats(const Forest& f, std::uint64_t horizon) {
  const std::uint64_t h = horizon == 0 ? f.size() : std::min(horizon, f.size());
  const auto steps = f.steps();
  const auto colors = f.colors();
  const auto depths = f.depths();
  const auto hh = static_cast<std::int64_t>(h);

  ForestStats st;
  st.horizon = h;
  st.degrees.assign(h, 0);
  st.block_chain.resize(h);

  // Roots in [-h, 0] are counted densely, deeper roots in the maps directly.
  std::vector<std::uint32_t> root_size(h + 1, 0);
  std::vector<std::uint32_t> root_deg(h + 1, 0);
  std::map<std::int64_t, std::uint64_t> deep_sizes;
  std::map<std::int64_t, std::uint64_t> deep_degrees;

  std::uint32_t block = 0;
  for (std::uint64_t i = 0; i < h; ++i) {
    const auto t = static_cast<std::int64_t>(i + 1);
    const std::uint64_t z = steps[i];
    const std::int64_t p = t - static_cast<std::int64_t>(z);
    if (p >= 1) {
      ++st.degrees[static_cast<std::size_t>(p - 1)];
    } else if (p >= -hh) {
      ++root_deg[static_cast<std::size_t>(-p)];
    } else {
      ++deep_degrees[p];
    }
    const std::int64_t c = colors[i];
    if (c >= -hh) {
      ++root_size[static_cast<std::size_t>(-c)];
    } else {
      ++deep_sizes[c];
    }
    const std::uint32_t d = depths[i];
    st.height = std::max(st.height, d);
    if (c == 0) {
      if (st.profile_of_zero.size() < d) st.profile_of_zero.resize(d, 0);
      ++st.profile_of_zero[d - 1];
      st.height_of_zero = std::max(st.height_of_zero, d);
    }
    // B_1 = 1; B_{t+1} = B_t + 1 if Z_{t+1} <= B_t, else 1.
    block = (i == 0 || z > block) ? 1 : block + 1;
    st.block_chain[i] = block;
    if (block == 1) {
      st.last_renewal = i + 1;
      ++st.renewal_visits;
    }
  }

  for (std::uint64_t i = 0; i < h; ++i) {
    const std::uint32_t d = st.degrees[i];
    st.max_degree_positive = std::max(st.max_degree_positive, d);
    if (d == 0 && colors[i] == 0) ++st.leaves_of_zero;
  }

  auto merge = [h](const std::map<std::int64_t, std::uint64_t>& deep, const std::vector<std::uint32_t>& dense,
                   std::map<std::int64_t, std::uint64_t>& out) {
    out = deep;
    for (std::uint64_t j = h + 1; j-- > 0;) {
      if (dense[j] > 0) out.emplace_hint(out.end(), -static_cast<std::int64_t>(j), dense[j]);
    }
  };
  merge(deep_sizes, root_size, st.tree_sizes);
  merge(deep_degrees, root_deg, st.root_degrees);

  st.num_trees = st.tree_sizes.size();
  for (const auto& [root, deg] : st.root_degrees) {
    st.root_hits += deg;
    st.max_degree_root = std::max<std::uint32_t>(st.max_degree_root, static_cast<std::uint32_t>(deg));
  }
  for (const auto& [root, size] : st.tree_sizes) st.largest_tree = std::max(st.largest_tree, size);
  return st;
}

std::vector<std::uint64_t> profile(const Forest& f, std::uint32_t kmax, std::uint64_t horizon) {
  const std::uint64_t h = horizon == 0 ? f.size() : std::min(horizon, f.size());
  std::vector<std::uint64_t> counts(kmax, 0);
  const auto colors = f.colors();
  const auto depths = f.depths();
  for (std::uint64_t i = 0; i < h; ++i) {
    if (colors[i] == 0 && depths[i] <= kmax) ++counts[depths[i] - 1];
  }
  return counts;
}

MaxDegree max_degree(const Forest& f, std::uint64_t horizon) {
  const auto st = compute_stats(f, horizon);
  return {st.max_degree_positive, st.max_degree_root};
}

}  // namespace surf
