// Runs every acceptance criterion at its stated scale and prints one
// PASS/FAIL line per criterion. Exit status is nonzero if any line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <sys/resource.h>

#include "surf/dist.hpp"
#include "surf/exact.hpp"
#include "surf/forest.hpp"
#include "surf/harness.hpp"
#include "surf/oracle.hpp"

using namespace surf;
namespace ex = surf::exact;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Accumulates sub-conditions; the detail keeps the first failures readable.
struct Checker {
  Outcome out;
  std::ostringstream os;
  int shown_failures = 0;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      out.pass = false;
      if (shown_failures++ < 3) os << " FAILED[" << what << "]";
    }
  }
  void note(const std::string& s) { os << ' ' << s; }
  Outcome done() {
    out.detail = os.str();
    return out;
  }
};

std::string g(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

ExperimentReport experiment(const std::string& spec, std::vector<std::uint64_t> horizons, std::uint64_t reps,
                            std::vector<std::string> stats, std::vector<std::string> keep = {}) {
  ExperimentConfig cfg;
  cfg.dist = spec;
  cfg.horizons = std::move(horizons);
  cfg.reps = reps;
  cfg.stats = std::move(stats);
  cfg.keep_samples = std::move(keep);
  return run_experiment(cfg);
}

bool within_4se(double mean, double se, double ref) { return std::fabs(mean - ref) <= 4.0 * se; }

Outcome renewal_limit() {
  Checker v;
  const auto t3 = ex::renewal_sequence(StepDistribution::parse("table:1/3,1/3,1/3"), 5000);
  v.note("|r_5000-0.5|=" + g(std::fabs(t3[5000] - 0.5), 3));
  v.require(std::fabs(t3[5000] - 0.5) < 1e-6, "table r_5000");
  const auto geo = ex::renewal_sequence(StepDistribution::geometric(0.5), 10000);
  double worst = 0.0;
  for (std::size_t t = 1; t < geo.size(); ++t) worst = std::max(worst, std::fabs(geo[t] - 0.5));
  v.note("geom max|r_n-0.5|=" + g(worst, 3));
  v.require(worst <= 1e-12, "geom r_n");
  return v.done();
}

Outcome size_recursion() {
  Checker v;
  double worst = 0.0;
  for (const char* spec : {"const:3", "table:1/3,1/3,1/3", "geom:0.5", "zipf:0.5", "logheavy"}) {
    const auto d = StepDistribution::parse(spec);
    const auto r = ex::renewal_sequence(d, 10000);
    const auto s = ex::expected_size_series(d, 10000);
    long double acc = 1.0L;
    double err = 0.0;
    for (std::size_t t = 1; t < r.size(); ++t) {
      acc += r[t];
      err = std::max(err, std::fabs(s.rhat[t] - static_cast<double>(acc)));
    }
    worst = std::max(worst, err);
    v.require(err <= 1e-10, spec);
  }
  v.note("max|Rhat-1-sum r|=" + g(worst, 3));
  const auto o = oracle::enumerate_exact(StepDistribution::parse("table:1/3,1/3,1/3"), 3);
  const auto s3 = ex::expected_size_series(StepDistribution::parse("table:1/3,1/3,1/3"), 3);
  v.note("oracle Rhat_3=" + o.rhat[3].rational + " exact=" + g(s3.rhat[3], 12));
  v.require(o.rhat[3].rational == "64/27", "oracle Rhat_3");
  v.require(std::fabs(s3.rhat[3] - 64.0 / 27.0) <= 1e-12, "exact Rhat_3");
  return v.done();
}

Outcome oracle_equivalence() {
  Checker v;
  const auto d = StepDistribution::parse("table:1/3,1/3,1/3");
  double worst = 0.0;
  std::vector<oracle::EnumerationResult> exact_by_n(7);
  for (std::uint64_t n = 1; n <= 6; ++n) {
    const auto o = oracle::enumerate_exact(d, n);
    const auto r = ex::renewal_sequence(d, n);
    const auto s = ex::expected_size_series(d, n);
    const auto tr = ex::expected_trees(d, n, 1e-14);
    const double diffs[] = {std::fabs(static_cast<double>(o.r[n].value) - r[n]),
                            std::fabs(static_cast<double>(o.rhat[n].value) - s.rhat[n]),
                            std::fabs(static_cast<double>(o.el.value) - ex::expected_leaves(d, n).value),
                            std::fabs(static_cast<double>(o.em.value) - tr.em),
                            std::fabs(static_cast<double>(o.eo.value) - tr.eo)};
    for (double x : diffs) worst = std::max(worst, x);
    exact_by_n[n] = o;
  }
  v.note("max|oracle-exact|=" + g(worst, 3));
  v.require(worst <= 1e-12, "oracle vs exact");
  const auto& two = exact_by_n[2];
  v.note("EM_2=" + two.em.rational + " EL_2=" + two.el.rational + " ES_2(-1)=" + two.size_by_root[1].rational);
  v.require(two.em.rational == "13/9", "EM_2");
  v.require(two.el.rational == "2/3", "EL_2");
  v.require(two.size_by_root[1].rational == "7/9", "ES_2(-1)");

  // Monte Carlo with 10^6 replications against every enumerated value.
  const auto rep = experiment("table:1/3,1/3,1/3", {1, 2, 3, 4, 5, 6}, 1000000, {"r", "S0", "L", "M", "O"});
  double worst_z = 0.0;
  for (std::uint64_t n = 1; n <= 6; ++n) {
    const auto& o = exact_by_n[n];
    const std::pair<const char*, double> refs[] = {{"r", static_cast<double>(o.r[n].value)},
                                                   {"S0", static_cast<double>(o.rhat[n].value) - 1.0},
                                                   {"L", static_cast<double>(o.el.value)},
                                                   {"M", static_cast<double>(o.em.value)},
                                                   {"O", static_cast<double>(o.eo.value)}};
    for (const auto& [stat, ref] : refs) {
      const auto* s = rep.find(stat, n);
      const double z = s->se > 0 ? std::fabs(s->mean - ref) / s->se : (s->mean == ref ? 0.0 : 1e9);
      worst_z = std::max(worst_z, z);
      v.require(z <= 4.0, std::string(stat) + " n=" + std::to_string(n));
    }
  }
  v.note("MC R=1e6 max|z|=" + g(worst_z, 3));
  return v.done();
}

Outcome o_mean() {
  Checker v;
  for (const char* spec : {"geom:0.5", "zipf:0.5"}) {
    const auto rep = experiment(spec, {1000}, 10000, {"O"});
    const auto* s = rep.find("O", 1000);
    const double m = StepDistribution::parse(spec).truncated_mean(1000);
    v.note(std::string(spec) + ": mean=" + g(s->mean) + " m_n=" + g(m) + " z=" + g((s->mean - m) / s->se, 3));
    v.require(within_4se(s->mean, s->se, m), spec);
  }
  return v.done();
}

Outcome trees_ratio() {
  Checker v;
  const auto rep = experiment("zipf:0.5", {100000}, 100, {"M_over_m", "M_gt_O"});
  const auto* ratio = rep.find("M_over_m", 100000);
  const auto* dominated = rep.find("M_gt_O", 100000);
  v.note("mean M/m=" + g(ratio->mean) + " replications with M>O: " + g(dominated->mean * 100, 3));
  v.require(ratio->mean >= 0.9 && ratio->mean <= 1.1, "ratio");
  v.require(dominated->max == 0.0, "M<=O");
  return v.done();
}

Outcome clt() {
  Checker v;
  const auto d = StepDistribution::zipf(0.5);
  const std::uint64_t n = 100000;
  const auto xs = sample_root_hits(d, n, 10000, kDefaultSeed);
  const double m = d.truncated_mean(n);
  long double sq = 0.0L;
  for (std::uint64_t t = 1; t <= n; ++t) sq += static_cast<long double>(d.tail(t)) * d.tail(t);
  const double sigma = std::sqrt(m - static_cast<double>(sq));
  const auto res = clt_check(xs, m, sigma);
  v.note("KS=" + g(res.ks_statistic, 4) + " critical(1e-3)=" + g(res.critical, 4) + " m_n=" + g(m) +
         " sigma=" + g(sigma));
  v.require(res.pass, "KS");
  return v.done();
}

Outcome profile_mean() {
  Checker v;
  const auto d = StepDistribution::geometric(0.5);
  const std::uint64_t n = 100000;
  std::vector<std::string> stats;
  for (int k = 1; k <= 5; ++k) stats.push_back("profile:" + std::to_string(k));
  const auto rep = experiment("geom:0.5", {n}, 10000, stats);
  const auto exact = ex::profile_expectations(d, n, 5);
  double worst_exact = 0.0, worst_z = 0.0;
  for (int k = 1; k <= 5; ++k) {
    const auto* s = rep.find(stats[k - 1], n);
    worst_exact = std::max(worst_exact, std::fabs(exact[k - 1] - 1.0));
    worst_z = std::max(worst_z, std::fabs(s->mean - exact[k - 1]) / s->se);
    v.require(within_4se(s->mean, s->se, exact[k - 1]), stats[k - 1]);
  }
  v.require(worst_exact <= 1e-6, "exact near 1");
  v.note("max|E N_k-1|=" + g(worst_exact, 3) + " max|z|=" + g(worst_z, 3));
  return v.done();
}

Outcome height_bound() {
  Checker v;
  for (const char* spec : {"geom:0.5", "table:1/3,1/3,1/3"}) {
    const auto d = StepDistribution::parse(spec);
    const auto rep = experiment(spec, {100, 1000}, 1000, {"H"});
    for (std::uint64_t n : {100u, 1000u}) {
      const auto* s = rep.find("H", n);
      const double bound = ex::bound_height(d, n, 1).mean_bound;
      v.note(std::string(spec) + " n=" + std::to_string(n) + ": " + g(s->mean + 4 * s->se, 4) + "<" + g(bound, 4));
      v.require(s->mean + 4 * s->se < bound, std::string(spec) + " n=" + std::to_string(n));
    }
  }
  return v.done();
}

Outcome max_degree_bound() {
  Checker v;
  const std::uint64_t n = 100000;
  const double ln = std::log(static_cast<double>(n));
  const double threshold = 1.5 * ln / std::log(ln);
  for (const char* spec : {"geom:0.5", "zipf:0.5"}) {
    const auto rep = experiment(spec, {n}, 200, {"Dmax"}, {"Dmax"});
    const auto& xs = rep.samples.at("Dmax").at(n);
    double over = 0;
    for (double x : xs) over += x > threshold;
    const double freq = over / static_cast<double>(xs.size());
    v.note(std::string(spec) + ": freq=" + g(freq, 3) + " (threshold " + g(threshold, 4) + ")");
    v.require(freq <= 0.1, spec);
  }
  return v.done();
}

Outcome block_escape() {
  Checker v;
  const auto d = StepDistribution::geometric(0.5);
  const auto b = ex::block_survival(d, 5);
  v.note("product=" + g(b.exact, 10) + " e^-4=" + g(*b.lower_bound, 6));
  v.require(std::fabs(b.exact - 0.307617) <= 1e-6, "product");
  v.require(b.exact > std::exp(-4.0), "above e^-4");
  const std::uint64_t reps = 1000000;
  const auto rep = experiment("geom:0.5", {5}, reps, {"escape"});
  const auto* s = rep.find("escape", 5);
  const double se = std::sqrt(b.exact * (1 - b.exact) / static_cast<double>(reps));
  v.note("MC=" + g(s->mean) + " z=" + g((s->mean - b.exact) / se, 3));
  v.require(within_4se(s->mean, se, b.exact), "MC");
  return v.done();
}

Outcome survival() {
  Checker v;
  const auto d = StepDistribution::geometric(0.5);
  const double p = ex::survival_probability(d);
  const double r = ex::renewal_sequence(d, 10000).back();
  v.note("P(survive)=" + g(p) + " r_10000=" + g(r, 12));
  v.require(p == 0.5, "survival");
  v.require(std::fabs(r - p) <= 1e-12, "r_n corroboration");
  return v.done();
}

Outcome leaf_ratio() {
  Checker v;
  const auto d = StepDistribution::zipf(0.5);
  const auto a = ex::expected_leaves(d, 10000);
  const auto b = ex::expected_leaves(d, 20000);
  const double q1 = 1.0 / 2.612375348685488;
  const double lo = std::exp(-1.0 / (1.0 - q1)), hi = std::exp(-1.0);
  v.note("ratio(1e4)=" + g(a.ratio) + " ratio(2e4)=" + g(b.ratio) + " bracket=[" + g(lo) + "," + g(hi) + "]");
  v.require(std::fabs(a.ratio - b.ratio) < 0.01, "stability");
  for (double x : {a.ratio, b.ratio}) v.require(x >= lo && x <= hi, "bracket");
  return v.done();
}

Outcome n_sandwich() {
  Checker v;
  const std::uint64_t n = 10000;
  const auto d = StepDistribution::geometric(0.5);
  const auto rep = experiment("geom:0.5", {n}, 10000, {"N", "N_1"}, {"N", "N_1"});
  const auto& big = rep.samples.at("N").at(n);
  const auto& visits = rep.samples.at("N_1").at(n);
  const double reps = static_cast<double>(big.size());
  // Completed block lengths sum to N - 1; the ratio is estimated with a
  // delta-method standard error.
  double sx = 0, sy = 0, sraw = 0;
  for (std::size_t i = 0; i < big.size(); ++i) {
    sx += big[i] - 1.0;
    sraw += big[i];
    sy += visits[i];
  }
  const double ratio = sx / sy, raw = sraw / sy, my = sy / reps;
  double resid = 0;
  for (std::size_t i = 0; i < big.size(); ++i) resid += std::pow(big[i] - 1.0 - ratio * visits[i], 2);
  const double se = std::sqrt(resid / (reps * (reps - 1))) / my;
  const double s_hat = ex::renewal_index_scale(d).value;
  const double lo = std::exp(-4.0) * s_hat - 4 * se, hi = s_hat + 4 * se;
  v.note("mean(N-1)/mean(N_1)=" + g(ratio) + " SE=" + g(se, 3) + " in [" + g(lo, 4) + "," + g(hi, 4) +
         "] S=" + g(s_hat) + " (mean(N)/mean(N_1)=" + g(raw) + ")");
  v.require(std::fabs(s_hat - 2.0) < 1e-12, "S=2");
  v.require(ratio >= lo && ratio <= hi, "sandwich");
  return v.done();
}

Outcome performance() {
  Checker v;
  const auto d = StepDistribution::geometric(0.5);
  const std::uint64_t n = 10000000;
  auto once = [&] {
    const auto f = Forest::build(d, n, 42);
    const auto st = compute_stats(f);
    nlohmann::ordered_json j;
    j["M"] = st.num_trees;
    j["O"] = st.root_hits;
    j["H"] = st.height;
    j["L"] = st.leaves_of_zero;
    j["S0"] = st.size_of_zero();
    j["N"] = st.last_renewal;
    j["N_1"] = st.renewal_visits;
    j["largest_tree"] = st.largest_tree;
    j["max_degree_positive"] = st.max_degree_positive;
    j["max_degree_root"] = st.max_degree_root;
    j["tree_sizes"] = st.tree_sizes.size();
    j["profile_of_zero"] = st.profile_of_zero;
    return j.dump(2);
  };
  const auto t0 = std::chrono::steady_clock::now();
  const auto first = once();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto second = once();
  rusage ru{};
  getrusage(RUSAGE_SELF, &ru);
  const double peak_gb = static_cast<double>(ru.ru_maxrss) / (1024.0 * 1024.0);
  v.note("build+stats n=1e7: " + g(secs, 3) + " s, peak RSS " + g(peak_gb, 3) + " GB, identical=" +
         (first == second ? "yes" : "no"));
  v.require(secs < 10.0, "time");
  v.require(peak_gb < 1.5, "memory");
  v.require(first == second, "determinism");
  return v.done();
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  // The performance line runs first so its peak-RSS reading is not inflated
  // by earlier criteria.
  const std::vector<Criterion> criteria{
      {14, "performance envelope", performance},
      {1, "renewal limit", renewal_limit},
      {2, "expected-size recursion", size_recursion},
      {3, "oracle equivalence", oracle_equivalence},
      {4, "E O_n = m_n", o_mean},
      {5, "M_n/m_n near 1, M_n <= O_n", trees_ratio},
      {6, "CLT for O_n", clt},
      {7, "profile mean", profile_mean},
      {8, "height bound", height_bound},
      {9, "max-degree bound", max_degree_bound},
      {10, "block-chain escape", block_escape},
      {11, "survival probability", survival},
      {12, "leaf-ratio bracket", leaf_ratio},
      {13, "N-sandwich", n_sandwich},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string(" exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s  criterion %2d  %-28s (%.1fs)%s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
