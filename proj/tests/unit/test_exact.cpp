#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "surf/exact.hpp"

using namespace surf;
namespace ex = surf::exact;

namespace {

// Reduced fractions over 64-bit integers; enough for n <= 8 with q = 1/3.
struct Frac {
  std::int64_t num = 0, den = 1;
  Frac() = default;
  Frac(std::int64_t a, std::int64_t b = 1) : num(a), den(b) { norm(); }
  void norm() {
    const auto g = std::gcd(num, den);
    if (g) num /= g, den /= g;
  }
  Frac operator+(Frac o) const { return {num * o.den + o.num * den, den * o.den}; }
  Frac operator*(Frac o) const { return {num * o.num, den * o.den}; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// E M_n for an unbounded law by summing roots directly and closing the sum with
// its first-order remainder.
double em_direct(const StepDistribution& d, std::uint64_t n, std::uint64_t roots) {
  long double total = 0.0L;
  for (std::uint64_t j = 0; j < roots; ++j) {
    long double prod = 1.0L;
    for (std::uint64_t t = 1; t <= n; ++t) prod *= 1.0L - d.pmf(t + j);
    total += 1.0L - prod;
  }
  long double rem = 0.0L;
  for (std::uint64_t u = roots + 1; u <= roots + n; ++u) rem += d.tail(u);
  return static_cast<double>(total + rem);
}

}  // namespace

TEST_CASE("renewal sequence for the uniform three-point law") {
  const auto d = StepDistribution::parse("table:1/3,1/3,1/3");
  std::vector<Frac> r{Frac(1)};
  for (int t = 1; t <= 8; ++t) {
    Frac acc(0);
    for (int s = 1; s <= std::min(t, 3); ++s) acc = acc + Frac(1, 3) * r[t - s];
    r.push_back(acc);
  }
  const auto got = ex::renewal_sequence(d, 8);
  for (int t = 0; t <= 8; ++t) CHECK(got[t] == doctest::Approx(r[t].value()).epsilon(1e-15));
  CHECK(r[3].num == 16);
  CHECK(r[3].den == 27);
  CHECK(std::fabs(ex::renewal_sequence(d, 5000).back() - 0.5) < 1e-6);
}

TEST_CASE("geometric renewal sequence is constant") {
  for (double theta : {0.5, 0.2, 1.0}) {
    const auto r = ex::renewal_sequence(StepDistribution::geometric(theta), 10000);
    for (std::size_t t = 1; t < r.size(); ++t) REQUIRE(std::fabs(r[t] - theta) < 1e-12);
  }
}

TEST_CASE("expected size is one plus the cumulative renewal mass") {
  for (const char* spec : {"const:2", "table:1/3,1/3,1/3", "geom:0.5", "zipf:0.5", "logheavy"}) {
    CAPTURE(spec);
    const auto d = StepDistribution::parse(spec);
    const auto r = ex::renewal_sequence(d, 2000);
    const auto s = ex::expected_size_series(d, 2000);
    long double acc = 1.0L;
    for (std::size_t t = 1; t < r.size(); ++t) {
      acc += r[t];
      REQUIRE(std::fabs(s.rhat[t] - static_cast<double>(acc)) < 1e-10 * std::max(1.0, static_cast<double>(acc)));
      REQUIRE(s.r_exclusive[t] == doctest::Approx(s.rhat[t] - 1.0));
    }
  }
  const auto t3 = ex::expected_size_series(StepDistribution::parse("table:1/3,1/3,1/3"), 3);
  CHECK(t3.rhat[3] == doctest::Approx(64.0 / 27.0).epsilon(1e-15));
}

TEST_CASE("size of a negative root") {
  const auto d = StepDistribution::parse("table:1/3,1/3,1/3");
  CHECK(ex::expected_size_rooted(d, 2, -1) == doctest::Approx(7.0 / 9.0).epsilon(1e-15));
  CHECK(ex::expected_size_rooted(d, 2, 0) == doctest::Approx(7.0 / 9.0).epsilon(1e-15));
  CHECK(ex::expected_size_rooted(d, 2, -5) == 0.0);
}

TEST_CASE("profile expectation is a negative binomial probability for geometric steps") {
  // P{X_1 + ... + X_k <= n} = P{Bin(n, theta) >= k}.
  const double theta = 0.3;
  const auto d = StepDistribution::geometric(theta);
  const std::uint64_t n = 25;
  for (std::uint32_t k = 1; k <= 6; ++k) {
    long double tail = 0.0L;
    for (std::uint64_t j = k; j <= n; ++j)
      tail += std::exp(std::lgamma(n + 1.0L) - std::lgamma(j + 1.0L) - std::lgamma(n - j + 1.0L) +
                       j * std::log(static_cast<long double>(theta)) + (n - j) * std::log(1.0L - theta));
    CHECK(ex::profile_expectation(d, n, k) == doctest::Approx(static_cast<double>(tail)).epsilon(1e-12));
  }
  const auto all = ex::profile_expectations(StepDistribution::geometric(0.5), 100000, 5);
  for (double v : all) CHECK(std::fabs(v - 1.0) < 1e-6);
}

TEST_CASE("trees: finite support is exact and geometric matches a direct sum") {
  const auto t3 = StepDistribution::parse("table:1/3,1/3,1/3");
  auto res = ex::expected_trees(t3, 2, 1e-12);
  CHECK(res.em == doctest::Approx(13.0 / 9.0).epsilon(1e-15));
  CHECK(res.eo == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK(res.converged);

  const auto g = StepDistribution::geometric(0.5);
  for (std::uint64_t n : {1u, 5u, 100u}) {
    long double direct = 0.0L;
    for (std::uint64_t j = 0; j < 200; ++j) {
      long double prod = 1.0L;
      for (std::uint64_t t = 1; t <= n; ++t) prod *= 1.0L - std::pow(0.5L, static_cast<long double>(t + j));
      direct += 1.0L - prod;
    }
    const auto tr = ex::expected_trees(g, n, 1e-12);
    CHECK(tr.em == doctest::Approx(static_cast<double>(direct)).epsilon(1e-12));
    CHECK(tr.eo == doctest::Approx(g.truncated_mean(n)));
    CHECK(tr.em <= tr.eo + 1e-12);
  }
}

TEST_CASE("trees: zipf against a direct root sum") {
  const auto z = StepDistribution::zipf(0.5);
  const auto tr = ex::expected_trees(z, 100, 1e-7);
  CHECK(tr.converged);
  CHECK(tr.em_error <= 1e-7);
  CHECK(tr.em == doctest::Approx(em_direct(z, 100, 200000)).epsilon(1e-5));
  double var = 0.0;
  for (std::uint64_t t = 1; t <= 100; ++t) var += z.tail(t) * (1 - z.tail(t));
  CHECK(tr.var_o == doctest::Approx(var).epsilon(1e-12));
  CHECK(tr.em < tr.eo);
}

TEST_CASE("trees: an impossible tolerance is reported, not thrown") {
  const auto tr = ex::expected_trees(StepDistribution::logheavy(), 1000, 1e-12, 1u << 12);
  CHECK_FALSE(tr.converged);
  CHECK(tr.em_error > 1e-12);
}

TEST_CASE("leaves") {
  const auto t3 = StepDistribution::parse("table:1/3,1/3,1/3");
  CHECK(ex::expected_leaves(t3, 2).value == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(ex::expected_leaves(StepDistribution::geometric(0.5), 2).value == doctest::Approx(0.75));
  const auto z = ex::expected_leaves(StepDistribution::zipf(0.5), 10000);
  CHECK(z.bracket_lo == doctest::Approx(std::exp(-1.0 / (1.0 - 0.382793384))).epsilon(1e-8));
  CHECK(z.bracket_hi == doctest::Approx(std::exp(-1.0)));
  CHECK(z.ratio > z.bracket_lo);
  CHECK(z.ratio < z.bracket_hi);
}

TEST_CASE("degrees") {
  const auto g = StepDistribution::geometric(0.5);
  CHECK(ex::expected_degree(g, 10, 0) == doctest::Approx(1.0 - std::pow(0.5, 10)));
  CHECK(ex::expected_degree(g, 10, -2) == doctest::Approx(0.25 - std::pow(0.5, 12)));
  CHECK(ex::expected_degree(g, 10, 4) == doctest::Approx(1.0 - std::pow(0.5, 6)));
  CHECK(ex::degree_variance_limit(g) == doctest::Approx(1.0 - 1.0 / 3.0));
}

TEST_CASE("survival") {
  CHECK(ex::survival_probability(StepDistribution::geometric(0.5)) == 0.5);
  CHECK(ex::survival_probability(StepDistribution::parse("table:1/3,1/3,1/3")) == doctest::Approx(0.5));
  CHECK(ex::survival_probability(StepDistribution::zipf(0.5)) == 0.0);
  CHECK(ex::survival_probability(StepDistribution::logheavy()) == 0.0);
  // zeta(3) / zeta(2)
  CHECK(ex::survival_probability(StepDistribution::zipf(2)) ==
        doctest::Approx(1.2020569031595942 / 1.6449340668482264).epsilon(1e-10));
}

TEST_CASE("block survival") {
  const auto b = ex::block_survival(StepDistribution::geometric(0.5), 5);
  CHECK(b.exact == doctest::Approx(315.0 / 1024.0).epsilon(1e-14));
  REQUIRE(b.lower_bound);
  CHECK(*b.lower_bound == doctest::Approx(std::exp(-4.0)));
  CHECK_FALSE(ex::block_survival(StepDistribution::zipf(0.5), 5).lower_bound);
}

TEST_CASE("height bound") {
  const auto t3 = StepDistribution::parse("table:1/3,1/3,1/3");
  CHECK(ex::bound_height(t3, 3, 1).mean_bound == doctest::Approx((2.0 + std::log(3.0)) * 3.0));
  const auto c = ex::bound_height(StepDistribution::constant(1), 10, 1);
  CHECK_FALSE(c.finite);
  CHECK(std::isinf(c.mean_bound));
  const auto g = ex::bound_height(StepDistribution::geometric(0.5), 100, 1);
  CHECK(g.mean_bound == doctest::Approx((2.0 + std::log(100.0)) * std::pow(2.0, 99)));
}

TEST_CASE("degree bounds") {
  const auto g = StepDistribution::geometric(0.5);
  const auto b = ex::bound_degrees(g, 10, 5.0);
  CHECK(b.positive_tail == doctest::Approx(10.0 * std::exp(4.0) / 3125.0).epsilon(1e-12));
  REQUIRE(b.root_tail);
  CHECK(ex::bound_degrees(g, 10, 3.0).root_tail.value() ==
        doctest::Approx(std::pow(std::exp(1.0) / 3.0, 3) * 8.0 / 7.0).epsilon(1e-12));

  const auto z = StepDistribution::zipf(0.5);
  CHECK(ex::bound_degrees(z, 10, 2.0).root_series == ex::SeriesStatus::divergent);
  const auto z3 = ex::bound_degrees(z, 10, 3.0);
  CHECK(z3.root_series == ex::SeriesStatus::converged);
  CHECK(z3.root_tail.value() == doctest::Approx(1.38544).epsilon(2e-5));
  CHECK(ex::bound_degrees(z, 10, 5.0).root_tail.value() == doctest::Approx(0.0545450).epsilon(2e-5));
  CHECK(ex::bound_degrees(StepDistribution::logheavy(), 10, 5.0).root_series == ex::SeriesStatus::divergent);
}

TEST_CASE("chernoff bounds") {
  const double em = 10.0, x = 3.0;
  const auto c = ex::bound_chernoff_M(em, x);
  const double base = std::pow(em / (em + x), em + x);
  CHECK(c.upper == doctest::Approx(base * std::exp(-x)));
  CHECK(c.upper_standard == doctest::Approx(base * std::exp(x)));
  CHECK(c.lower == doctest::Approx(std::exp(-x * x / (2 * em))));
  CHECK(c.upper_standard < 1.0);
}

TEST_CASE("renewal index scale") {
  CHECK(ex::renewal_index_scale(StepDistribution::geometric(0.5)).value == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(ex::renewal_index_scale(StepDistribution::parse("table:1/3,1/3,1/3")).value == doctest::Approx(4.0 / 3.0));
  // E Z(Z-1)/2 for zipf:3 = (zeta(2) - zeta(3)) / (2 zeta(4)).
  const double z2 = 1.6449340668482264, z3 = 1.2020569031595942, z4 = 1.0823232337111382;
  const auto s = ex::renewal_index_scale(StepDistribution::zipf(3));
  CHECK(s.finite);
  CHECK(s.value == doctest::Approx((z2 - z3) / (2 * z4)).epsilon(1e-10));
  CHECK(s.error < 1e-10);
  CHECK_FALSE(ex::renewal_index_scale(StepDistribution::zipf(1.5)).finite);
}

TEST_CASE("exported series") {
  const auto s = ex::exact_series(StepDistribution::parse("table:1/3,1/3,1/3"), 3);
  REQUIRE(s.r.size() == 4);
  CHECK(s.m[0] == 0.0);
  CHECK(s.m[3] == doctest::Approx(2.0));
  CHECK(s.el[3] == doctest::Approx(28.0 / 27.0));
  CHECK(s.rhat[3] == doctest::Approx(64.0 / 27.0));
}
