#include "surf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "surf/errors.hpp"
#include "surf/exact.hpp"
#include "surf/forest.hpp"
#include "surf/parallel.hpp"

#ifndef SURF_VERSION
#define SURF_VERSION "0.0.0"
#endif

namespace surf {

namespace {

constexpr std::uint64_t kRepChunk = 1024;
constexpr std::uint64_t kExactHorizonCap = 20000;
constexpr std::uint64_t kCltMinReps = 1000;

const std::vector<std::string> kDefaultStats = {"M", "O", "H", "L", "S0"};

const std::vector<std::string> kChecks = {
    "renewal-limit", "trees-ratio",   "m-dominance",   "o-mean",       "clt-O",
    "chernoff-M",    "profile-mean",  "height-bound",  "height-growth", "maxdeg-bound",
    "rootdeg-tight", "block-escape",  "N-sandwich",    "extinction-proxy", "leaf-ratio"};

enum class StatKind {
  m, o, h, h0, l, s0, dmax, droot_max, last_renewal, renewal_visits, escape, largest_frac, m_over_m, m_gt_o, r,
  size_of, degree_of, profile_at
};

struct StatDef {
  std::string name;
  StatKind kind;
  std::int64_t param = 0;
};

std::int64_t parse_int(std::string_view s, std::string_view what) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw SpecError("malformed integer '" + std::string(s) + "' in " + std::string(what));
  }
  return v;
}

StatDef parse_stat(const std::string& name) {
  static const std::map<std::string, StatKind, std::less<>> simple = {
      {"M", StatKind::m},
      {"O", StatKind::o},
      {"H", StatKind::h},
      {"H0", StatKind::h0},
      {"L", StatKind::l},
      {"S0", StatKind::s0},
      {"Dmax", StatKind::dmax},
      {"Droot_max", StatKind::droot_max},
      {"N", StatKind::last_renewal},
      {"N_1", StatKind::renewal_visits},
      {"escape", StatKind::escape},
      {"largest_frac", StatKind::largest_frac},
      {"M_over_m", StatKind::m_over_m},
      {"M_gt_O", StatKind::m_gt_o},
      {"r", StatKind::r},
  };
  if (auto it = simple.find(name); it != simple.end()) return {name, it->second, 0};
  const auto colon = name.find(':');
  if (colon != std::string::npos) {
    const auto head = std::string_view(name).substr(0, colon);
    const auto arg = parse_int(std::string_view(name).substr(colon + 1), name);
    if (head == "S") {
      if (arg > 0) throw SpecError("statistic " + name + ": root id must be <= 0");
      return {name, StatKind::size_of, arg};
    }
    if (head == "D") return {name, StatKind::degree_of, arg};
    if (head == "profile") {
      if (arg < 1) throw SpecError("statistic " + name + ": depth must be >= 1");
      return {name, StatKind::profile_at, arg};
    }
  }
  throw SpecError("unknown statistic '" + name + "'");
}

double observe(const StatDef& s, const Forest& f, const ForestStats& st, double m_h) {
  const std::uint64_t h = st.horizon;
  switch (s.kind) {
    case StatKind::m: return static_cast<double>(st.num_trees);
    case StatKind::o: return static_cast<double>(st.root_hits);
    case StatKind::h: return st.height;
    case StatKind::h0: return st.height_of_zero;
    case StatKind::l: return static_cast<double>(st.leaves_of_zero);
    case StatKind::s0: return static_cast<double>(st.size_of_zero());
    case StatKind::dmax: return st.max_degree_positive;
    case StatKind::droot_max: return st.max_degree_root;
    case StatKind::last_renewal: return static_cast<double>(st.last_renewal);
    case StatKind::renewal_visits: return static_cast<double>(st.renewal_visits);
    case StatKind::escape: return st.renewal_visits == 1 ? 1.0 : 0.0;
    case StatKind::largest_frac: return static_cast<double>(st.largest_tree) / static_cast<double>(h);
    case StatKind::m_over_m: return static_cast<double>(st.num_trees) / m_h;
    case StatKind::m_gt_o: return st.num_trees > st.root_hits ? 1.0 : 0.0;
    case StatKind::r: return f.color(h) == 0 ? 1.0 : 0.0;
    case StatKind::size_of: {
      auto it = st.tree_sizes.find(s.param);
      return it == st.tree_sizes.end() ? 0.0 : static_cast<double>(it->second);
    }
    case StatKind::degree_of: {
      if (s.param <= 0) {
        auto it = st.root_degrees.find(s.param);
        return it == st.root_degrees.end() ? 0.0 : static_cast<double>(it->second);
      }
      const auto v = static_cast<std::uint64_t>(s.param);
      return v <= h ? st.degrees[v - 1] : 0.0;
    }
    case StatKind::profile_at: {
      const auto k = static_cast<std::size_t>(s.param);
      return k <= st.profile_of_zero.size() ? static_cast<double>(st.profile_of_zero[k - 1]) : 0.0;
    }
  }
  return 0.0;
}

// Running count/mean/M2 with pairwise merge (Chan et al.).
struct Moments {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
    min = std::min(min, x);
    max = std::max(max, x);
  }

  void merge(const Moments& b) {
    if (b.count == 0) return;
    if (count == 0) {
      *this = b;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(b.count);
    const double delta = b.mean - mean;
    const double total = na + nb;
    mean += delta * nb / total;
    m2 += b.m2 + delta * delta * na * nb / total;
    count += b.count;
    min = std::min(min, b.min);
    max = std::max(max, b.max);
  }
};

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

struct Suite {
  const ExperimentConfig& cfg;
  const StepDistribution& d;
  ExperimentReport& rep;
  const std::map<std::string, std::map<std::uint64_t, std::vector<double>>>& samples;

  std::uint64_t smallest() const { return cfg.horizons.front(); }
  std::uint64_t largest() const { return cfg.horizons.back(); }
  bool hyp(const char* name) const { return rep.hypotheses.at(name); }

  const StatSummary& stat(const std::string& name, std::uint64_t n) const {
    const auto* s = rep.find(name, n);
    if (!s) throw std::logic_error("missing statistic " + name);
    return *s;
  }
  const std::vector<double>& sample(const std::string& name, std::uint64_t n) const {
    return samples.at(name).at(n);
  }

  void add(CheckResult c) { rep.checks.push_back(std::move(c)); }

  void not_applicable(const std::string& name, std::string why, std::uint64_t n = 0) {
    CheckResult c;
    c.name = name;
    c.n = n;
    c.verdict = Verdict::not_applicable;
    c.source = "none";
    c.detail = std::move(why);
    add(std::move(c));
  }

  // |measured - reference| <= 4 se, with a rounding allowance when se = 0.
  static bool within(double measured, double reference, double se) {
    const double slack = 4.0 * se + 1e-9 * std::max(1.0, std::fabs(reference));
    return std::fabs(measured - reference) <= slack;
  }

  static Verdict verdict(bool ok) { return ok ? Verdict::pass : Verdict::fail; }

  static CheckResult row(std::string name, std::uint64_t n) {
    CheckResult c;
    c.name = std::move(name);
    c.n = n;
    return c;
  }

  void renewal_limit() {
    const char* name = "renewal-limit";
    if (!hyp("mean_finite") || !hyp("aperiodic")) {
      return not_applicable(name, "needs finite mean and aperiodic support");
    }
    const std::uint64_t n = std::min(largest(), kExactHorizonCap);
    const auto r = exact::renewal_sequence(d, n);
    const double target = exact::survival_probability(d);
    CheckResult c = row(name, n);
    c.measured = r[n];
    c.reference = target;
    c.tolerance = 1e-2;
    c.relation = "|r_n - 1/EZ| <= tol";
    c.source = "exact";
    c.proxy = true;
    c.verdict = verdict(std::fabs(r[n] - target) <= c.tolerance);
    add(c);
  }

  void trees_ratio() {
    const char* name = "trees-ratio";
    if (hyp("mean_finite")) return not_applicable(name, "needs infinite mean");
    const auto& s = stat("M_over_m", largest());
    CheckResult c = row(name, largest());
    c.measured = s.mean;
    c.reference = 1.0;
    c.tolerance = 0.1;
    c.relation = "mean(M_n/m_n) in [0.9, 1.1]";
    c.source = "exact";
    c.proxy = true;
    c.verdict = verdict(s.mean >= 0.9 && s.mean <= 1.1);
    add(c);
  }

  void m_dominance() {
    double violations = 0.0;
    for (auto n : cfg.horizons) {
      const auto& s = stat("M_gt_O", n);
      violations += s.mean * static_cast<double>(s.reps);
    }
    CheckResult c = row("m-dominance", largest());
    c.measured = violations;
    c.reference = 0.0;
    c.relation = "realizations with M_n > O_n == 0";
    c.source = "simulation";
    c.detail = "all horizons";
    c.verdict = verdict(violations == 0.0);
    add(c);
  }

  void o_mean() {
    for (auto n : cfg.horizons) {
      const auto& s = stat("O", n);
      CheckResult c = row("o-mean", n);
      c.measured = s.mean;
      c.reference = d.truncated_mean(n);
      c.tolerance = 4.0 * s.se;
      c.relation = "|mean(O_n) - m_n| <= 4 SE";
      c.source = "exact";
      c.verdict = verdict(within(s.mean, c.reference, s.se));
      add(c);
    }
  }

  void clt_o() {
    const char* name = "clt-O";
    if (hyp("mean_finite")) return not_applicable(name, "needs infinite mean");
    const std::uint64_t n = largest();
    const std::uint64_t reps = std::max(cfg.reps, kCltMinReps);
    const auto xs = sample_root_hits(d, n, reps, cfg.seed, cfg.threads);
    double var = 0.0;
    for (std::uint64_t k = 1; k <= n; ++k) var += d.tail(k) * (1.0 - d.tail(k));
    const double mu = d.truncated_mean(n);
    const double sigma = std::sqrt(var);
    CheckResult c = row(name, n);
    c.source = "exact";
    c.proxy = true;
    c.relation = "KS distance <= critical value (level 1e-3)";
    if (!(sigma > 0.0)) {
      c.verdict = Verdict::fail;
      c.detail = "Var O_n = 0";
      return add(c);
    }
    const auto res = clt_check(xs, mu, sigma);
    c.measured = res.ks_statistic;
    c.reference = res.critical;
    c.tolerance = res.critical;
    c.verdict = verdict(res.pass);
    c.detail = "reps=" + std::to_string(reps) + " mu=" + fmt(mu) + " sigma=" + fmt(sigma);
    if (!res.diagnostic.empty()) c.detail += " " + res.diagnostic;
    add(c);
  }

  void chernoff_m() {
    const std::uint64_t n = largest();
    // Tail frequencies live on a scale of x >= 1, so 1e-4 on E M_n is ample.
    const auto t = exact::expected_trees(d, n, std::max(cfg.epsilon, 1e-4));
    const double em = t.em;
    const auto& ms = sample("M", n);
    const double reps = static_cast<double>(ms.size());
    for (const double mult : {1.0, 2.0}) {
      const double x = mult * std::sqrt(em);
      const auto b = exact::bound_chernoff_M(em, x);
      const double up = static_cast<double>(std::count_if(ms.begin(), ms.end(), [&](double m) { return m >= em + x; })) / reps;
      const double lo = static_cast<double>(std::count_if(ms.begin(), ms.end(), [&](double m) { return m <= em - x; })) / reps;
      const double se_up = std::sqrt(up * (1 - up) / reps);
      const double se_lo = std::sqrt(lo * (1 - lo) / reps);

      CheckResult cu = row("chernoff-M", n);
      cu.measured = up;
      cu.reference = b.upper_standard;
      cu.tolerance = 4.0 * se_up;
      cu.relation = "P{M_n >= EM + x} <= (EM/(EM+x))^(EM+x) e^x + 4 SE";
      cu.source = "bound";
      cu.detail = "upper tail, x=" + fmt(x) + " EM=" + fmt(em) + " EM_error=" + fmt(t.em_error) +
                  " displayed_bound=" + fmt(b.upper);
      cu.verdict = verdict(up <= b.upper_standard + 4.0 * se_up);
      add(cu);

      CheckResult cl = row("chernoff-M", n);
      cl.measured = lo;
      cl.reference = b.lower;
      cl.tolerance = 4.0 * se_lo;
      cl.relation = "P{M_n <= EM - x} <= exp(-x^2/(2 EM)) + 4 SE";
      cl.source = "bound";
      cl.detail = "lower tail, x=" + fmt(x) + " EM=" + fmt(em) + " EM_error=" + fmt(t.em_error);
      cl.verdict = verdict(lo <= b.lower + 4.0 * se_lo);
      add(cl);
    }
  }

  void profile_mean() {
    const std::uint64_t n = smallest();
    const auto expected = exact::profile_expectations(d, n, cfg.kmax);
    for (std::uint32_t k = 1; k <= cfg.kmax; ++k) {
      const auto& s = stat("profile:" + std::to_string(k), n);
      CheckResult c = row("profile-mean", n);
      c.measured = s.mean;
      c.reference = expected[k - 1];
      c.tolerance = 4.0 * s.se;
      c.relation = "|mean(N_k) - E N_k(n)| <= 4 SE";
      c.source = "exact";
      c.detail = "k=" + std::to_string(k);
      c.verdict = verdict(within(s.mean, c.reference, s.se));
      add(c);
    }
  }

  void height_bound() {
    for (auto n : cfg.horizons) {
      const auto& s = stat("H", n);
      const auto b = exact::bound_height(d, n, 0);
      CheckResult c = row("height-bound", n);
      c.measured = s.mean + 4.0 * s.se;
      c.reference = b.mean_bound;
      c.relation = "mean(H_n) + 4 SE <= (2 + ln n)/p_n";
      c.source = "bound";
      if (!b.finite) c.detail = "p_n = 0, bound is infinite";
      c.verdict = verdict(c.measured <= b.mean_bound);
      add(c);
    }
  }

  void height_growth() {
    const char* name = "height-growth";
    if (cfg.horizons.size() < 2) return not_applicable(name, "needs at least two sizes");
    bool increasing = true;
    std::string trail;
    double prev = -1.0;
    for (auto n : cfg.horizons) {
      const double mean = stat("H", n).mean;
      if (!(mean > prev)) increasing = false;
      if (!trail.empty()) trail += " < ";
      trail += fmt(mean);
      prev = mean;
    }
    CheckResult c = row(name, largest());
    c.measured = stat("H", largest()).mean;
    c.reference = stat("H", smallest()).mean;
    c.relation = "mean(H_n) strictly increasing in n";
    c.source = "simulation";
    c.proxy = true;
    c.detail = trail;
    c.verdict = verdict(increasing);
    add(c);
  }

  void maxdeg_bound() {
    const char* name = "maxdeg-bound";
    const std::uint64_t n = largest();
    if (n < 16) return not_applicable(name, "needs n >= 16", n);
    const double ln = std::log(static_cast<double>(n));
    const double threshold = 1.5 * ln / std::log(ln);
    const auto& xs = sample("Dmax", n);
    const double freq =
        static_cast<double>(std::count_if(xs.begin(), xs.end(), [&](double v) { return v > threshold; })) /
        static_cast<double>(xs.size());
    CheckResult c = row(name, n);
    c.measured = freq;
    c.reference = 0.1;
    c.relation = "P{max_t D^(t) > 1.5 ln n / ln ln n} <= 0.1";
    c.source = "bound";
    c.proxy = true;
    c.detail = "threshold=" + fmt(threshold);
    c.verdict = verdict(freq <= 0.1);
    add(c);
  }

  void rootdeg_tight() {
    const std::uint64_t n = largest();
    const auto& xs = sample("Droot_max", n);
    for (const double x : {3.0, 5.0, 8.0}) {
      const auto b = exact::bound_degrees(d, n, x);
      const std::string tag = "x=" + fmt(x);
      if (!b.root_tail) {
        not_applicable("rootdeg-tight",
                       tag + (b.root_series == exact::SeriesStatus::divergent ? ": sum p_t^x diverges"
                                                                             : ": sum p_t^x not certified"),
                       n);
        continue;
      }
      const double reps = static_cast<double>(xs.size());
      const double freq = static_cast<double>(std::count_if(xs.begin(), xs.end(), [&](double v) { return v > x; })) / reps;
      const double se = std::sqrt(freq * (1 - freq) / reps);
      CheckResult c = row("rootdeg-tight", n);
      c.measured = freq;
      c.reference = *b.root_tail;
      c.tolerance = 4.0 * se;
      c.relation = "P{max root degree > x} <= (e/x)^x sum p_t^x + 4 SE";
      c.source = "bound";
      c.detail = tag;
      c.verdict = verdict(freq <= *b.root_tail + 4.0 * se);
      add(c);
    }
  }

  void block_escape() {
    const std::uint64_t n = smallest();
    const auto& s = stat("escape", n);
    const auto b = exact::block_survival(d, n);
    const double se = std::sqrt(b.exact * (1.0 - b.exact) / static_cast<double>(s.reps));
    CheckResult c = row("block-escape", n);
    c.measured = s.mean;
    c.reference = b.exact;
    c.tolerance = 4.0 * se;
    c.relation = "|P^{B_t = t, t <= n} - prod(1 - p_{i+1})| <= 4 SE";
    c.source = "exact";
    c.verdict = verdict(within(s.mean, b.exact, se));
    add(c);

    if (!hyp("mean_finite") || !hyp("q1_positive") || !b.lower_bound) {
      return not_applicable("block-escape", "bound needs finite mean and q_1 > 0", n);
    }
    CheckResult e = row("block-escape", n);
    e.measured = b.exact;
    e.reference = *b.lower_bound;
    e.relation = "prod(1 - p_{i+1}) >= exp(-EZ/q_1)";
    e.source = "bound";
    e.detail = "escape bound";
    e.verdict = verdict(b.exact >= *b.lower_bound);
    add(e);
  }

  void n_sandwich() {
    const char* name = "N-sandwich";
    if (!hyp("mean_finite") || !hyp("q1_positive") || !hyp("second_moment_finite")) {
      return not_applicable(name, "needs finite second moment and q_1 > 0");
    }
    const std::uint64_t n = largest();
    const auto& big = sample("N", n);
    const auto& visits = sample("N_1", n);
    const double reps = static_cast<double>(big.size());
    // Vertices before the final block: N - 1 counts the completed block lengths.
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < big.size(); ++i) {
      sx += big[i] - 1.0;
      sy += visits[i];
    }
    const double mx = sx / reps;
    const double my = sy / reps;
    const double ratio = mx / my;
    double resid = 0.0;
    for (std::size_t i = 0; i < big.size(); ++i) {
      const double e = (big[i] - 1.0) - ratio * visits[i];
      resid += e * e;
    }
    const double se = reps > 1 ? std::sqrt(resid / (reps * (reps - 1.0))) / my : 0.0;
    const auto scale = exact::renewal_index_scale(d);
    const double c0 = std::exp(-*d.mean_info().value / d.pmf(1));
    const double lo = c0 * scale.value - 4.0 * se;
    const double hi = scale.value + 4.0 * se;
    CheckResult c = row(name, n);
    c.measured = ratio;
    c.reference = scale.value;
    c.tolerance = 4.0 * se;
    c.relation = "c0 S - 4 SE <= mean(N - 1)/mean(N_1) <= S + 4 SE";
    c.source = "exact";
    c.detail = "S=" + fmt(scale.value) + " c0=" + fmt(c0) + " S_error=" + fmt(scale.error);
    c.verdict = verdict(ratio >= lo && ratio <= hi);
    add(c);
  }

  void extinction_proxy() {
    const char* name = "extinction-proxy";
    if (hyp("mean_finite")) return not_applicable(name, "needs infinite mean");
    if (cfg.horizons.size() < 2) return not_applicable(name, "needs at least two sizes");
    const double a = stat("largest_frac", smallest()).mean;
    const double b = stat("largest_frac", largest()).mean;
    CheckResult c = row(name, largest());
    c.measured = b;
    c.reference = a;
    c.relation = "mean(max_i S^(i)/n) decreases from smallest to largest n";
    c.source = "simulation";
    c.proxy = true;
    c.verdict = verdict(b < a);
    add(c);
  }

  void leaf_ratio() {
    const char* name = "leaf-ratio";
    if (hyp("mean_finite")) return not_applicable(name, "needs infinite mean");
    const std::uint64_t n = std::min(largest(), kExactHorizonCap);
    const auto r = exact::renewal_sequence(d, n);
    const auto el = exact::expected_leaves_series(d, r);
    double size_n = 0.0, size_half = 0.0;
    for (std::uint64_t t = 1; t <= n; ++t) {
      size_n += r[t];
      if (t == n / 2) size_half = size_n;
    }
    const double ratio = el[n] / size_n;
    const double ratio_half = size_half > 0 ? el[n / 2] / size_half : ratio;
    const auto bracket = exact::expected_leaves(d, 1);
    CheckResult c = row(name, n);
    c.measured = ratio;
    c.reference = bracket.bracket_hi;
    c.tolerance = 0.01;
    c.relation = "E L_n / R_n in [exp(-1/(1-q_max)), exp(-1)], |ratio(n) - ratio(n/2)| < 0.01";
    c.source = "exact";
    c.detail = "bracket=[" + fmt(bracket.bracket_lo) + ", " + fmt(bracket.bracket_hi) + "] ratio(n/2)=" + fmt(ratio_half);
    c.verdict = verdict(ratio >= bracket.bracket_lo && ratio <= bracket.bracket_hi &&
                        std::fabs(ratio - ratio_half) < 0.01);
    add(c);
  }

  void run(const std::string& check) {
    if (check == "renewal-limit") renewal_limit();
    else if (check == "trees-ratio") trees_ratio();
    else if (check == "m-dominance") m_dominance();
    else if (check == "o-mean") o_mean();
    else if (check == "clt-O") clt_o();
    else if (check == "chernoff-M") chernoff_m();
    else if (check == "profile-mean") profile_mean();
    else if (check == "height-bound") height_bound();
    else if (check == "height-growth") height_growth();
    else if (check == "maxdeg-bound") maxdeg_bound();
    else if (check == "rootdeg-tight") rootdeg_tight();
    else if (check == "block-escape") block_escape();
    else if (check == "N-sandwich") n_sandwich();
    else if (check == "extinction-proxy") extinction_proxy();
    else if (check == "leaf-ratio") leaf_ratio();
  }
};

// Statistics each check reads: summaries and raw samples.
void check_needs(const std::string& check, std::uint32_t kmax, std::vector<std::string>& stats,
                 std::set<std::string>& samples) {
  if (check == "trees-ratio") stats.push_back("M_over_m");
  else if (check == "m-dominance") stats.push_back("M_gt_O");
  else if (check == "o-mean") stats.push_back("O");
  else if (check == "chernoff-M") samples.insert("M");
  else if (check == "profile-mean") {
    for (std::uint32_t k = 1; k <= kmax; ++k) stats.push_back("profile:" + std::to_string(k));
  } else if (check == "height-bound" || check == "height-growth") stats.push_back("H");
  else if (check == "maxdeg-bound") samples.insert("Dmax");
  else if (check == "rootdeg-tight") samples.insert("Droot_max");
  else if (check == "block-escape") stats.push_back("escape");
  else if (check == "N-sandwich") {
    samples.insert("N");
    samples.insert("N_1");
  } else if (check == "extinction-proxy") stats.push_back("largest_frac");
}

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string_view tool_version() noexcept { return SURF_VERSION; }

std::string_view verdict_name(Verdict v) noexcept {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::not_applicable: return "not-applicable";
  }
  return "?";
}

std::vector<std::string> all_check_names() { return kChecks; }

void ExperimentConfig::validate() const {
  if (dist.empty()) throw SpecError("experiment: missing distribution");
  if (horizons.empty()) throw SpecError("experiment: no horizons given");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] == 0) throw SpecError("experiment: horizons must be positive");
    if (i > 0 && horizons[i] <= horizons[i - 1]) throw SpecError("experiment: horizons must be strictly increasing");
  }
  if (reps == 0) throw SpecError("experiment: reps must be >= 1");
  if (kmax == 0) throw SpecError("experiment: kmax must be >= 1");
  if (!(epsilon > 0.0)) throw SpecError("experiment: epsilon must be positive");
  for (const auto& s : stats) parse_stat(s);
  for (const auto& s : keep_samples) parse_stat(s);
  for (const auto& c : checks) {
    if (std::find(kChecks.begin(), kChecks.end(), c) == kChecks.end()) throw SpecError("unknown check '" + c + "'");
  }
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  auto to_u64 = [&](const std::string& v, const std::string& key) {
    const auto x = parse_int(v, key);
    if (x < 0) throw SpecError("config line " + std::to_string(lineno) + ": " + key + " must be >= 0");
    return static_cast<std::uint64_t>(x);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw SpecError("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(std::string_view(body).substr(0, eq));
    const auto value = trim(std::string_view(body).substr(eq + 1));
    if (key == "dist") {
      cfg.dist = value;
    } else if (key == "horizons" || key == "sizes") {
      cfg.horizons.clear();
      for (const auto& h : split_list(value)) cfg.horizons.push_back(to_u64(h, key));
    } else if (key == "reps") {
      cfg.reps = to_u64(value, key);
    } else if (key == "seed") {
      cfg.seed = to_u64(value, key);
    } else if (key == "stats") {
      cfg.stats = split_list(value);
    } else if (key == "checks") {
      cfg.checks = value == "all" ? kChecks : split_list(value);
    } else if (key == "threads") {
      cfg.threads = static_cast<unsigned>(to_u64(value, key));
    } else if (key == "epsilon") {
      try {
        std::size_t used = 0;
        cfg.epsilon = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw SpecError("config line " + std::to_string(lineno) + ": malformed epsilon '" + value + "'");
      }
    } else if (key == "kmax") {
      cfg.kmax = static_cast<std::uint32_t>(to_u64(value, key));
    } else if (key == "samples") {
      cfg.keep_samples = split_list(value);
    } else {
      throw SpecError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

const StatSummary* ExperimentReport::find(std::string_view stat, std::uint64_t n) const {
  for (const auto& s : stats) {
    if (s.stat == stat && s.n == n) return &s;
  }
  return nullptr;
}

bool ExperimentReport::any_failed() const {
  return std::any_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.verdict == Verdict::fail; });
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto d = StepDistribution::parse(cfg.dist);

  std::vector<std::string> names = cfg.stats.empty() && cfg.checks.empty() ? kDefaultStats : cfg.stats;
  std::set<std::string> sampled(cfg.keep_samples.begin(), cfg.keep_samples.end());
  for (const auto& c : cfg.checks) check_needs(c, cfg.kmax, names, sampled);
  for (const auto& s : sampled) names.push_back(s);
  // Deduplicate, keeping first occurrence order.
  std::vector<StatDef> defs;
  {
    std::set<std::string> seen;
    for (const auto& n : names) {
      if (seen.insert(n).second) defs.push_back(parse_stat(n));
    }
  }

  const auto& hs = cfg.horizons;
  const std::uint64_t hmax = hs.back();
  const std::size_t ns = defs.size();
  const std::size_t nh = hs.size();
  std::vector<double> m_at(nh);
  for (std::size_t j = 0; j < nh; ++j) m_at[j] = d.truncated_mean(hs[j]);

  std::vector<int> sample_slot(ns, -1);
  std::vector<std::vector<std::vector<double>>> raw;  // [slot][horizon][rep]
  for (std::size_t i = 0; i < ns; ++i) {
    if (sampled.count(defs[i].name)) {
      sample_slot[i] = static_cast<int>(raw.size());
      raw.emplace_back(nh, std::vector<double>(cfg.reps));
    }
  }

  const std::uint64_t chunks = (cfg.reps + kRepChunk - 1) / kRepChunk;
  std::vector<std::vector<Moments>> parts(chunks, std::vector<Moments>(ns * nh));
  parallel_for(chunks, cfg.threads, [&](std::uint64_t c) {
    auto& acc = parts[c];
    const std::uint64_t end = std::min(cfg.reps, (c + 1) * kRepChunk);
    for (std::uint64_t r = c * kRepChunk; r < end; ++r) {
      const Forest f = Forest::build(d, hmax, derive_seed(cfg.seed, r));
      for (std::size_t j = 0; j < nh; ++j) {
        const auto st = compute_stats(f, hs[j]);
        for (std::size_t i = 0; i < ns; ++i) {
          const double v = observe(defs[i], f, st, m_at[j]);
          acc[i * nh + j].add(v);
          if (sample_slot[i] >= 0) raw[static_cast<std::size_t>(sample_slot[i])][j][r] = v;
        }
      }
    }
  });
  std::vector<Moments> total(ns * nh);
  for (const auto& p : parts) {
    for (std::size_t k = 0; k < total.size(); ++k) total[k].merge(p[k]);
  }

  ExperimentReport rep;
  rep.spec = d.spec();
  rep.seed = cfg.seed;
  rep.reps = cfg.reps;
  rep.horizons = hs;
  rep.version = std::string(tool_version());
  const auto info = d.mean_info();
  rep.hypotheses = {{"q1_positive", d.pmf(1) > 0.0},
                    {"aperiodic", d.period() == 1},
                    {"full_support", !d.support_max().has_value()},
                    {"mean_finite", info.finite},
                    {"second_moment_finite", info.second_moment_finite}};

  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t j = 0; j < nh; ++j) {
      const auto& m = total[i * nh + j];
      StatSummary s;
      s.stat = defs[i].name;
      s.n = hs[j];
      s.reps = m.count;
      s.mean = m.mean;
      s.sd = m.count > 1 ? std::sqrt(m.m2 / static_cast<double>(m.count - 1)) : 0.0;
      s.se = s.sd / std::sqrt(static_cast<double>(m.count));
      s.min = m.min;
      s.max = m.max;
      rep.stats.push_back(s);
    }
  }

  std::map<std::string, std::map<std::uint64_t, std::vector<double>>> samples;
  for (std::size_t i = 0; i < ns; ++i) {
    if (sample_slot[i] < 0) continue;
    auto& src = raw[static_cast<std::size_t>(sample_slot[i])];
    for (std::size_t j = 0; j < nh; ++j) samples[defs[i].name][hs[j]] = std::move(src[j]);
  }

  Suite suite{cfg, d, rep, samples};
  for (const auto& c : kChecks) {
    if (std::find(cfg.checks.begin(), cfg.checks.end(), c) != cfg.checks.end()) suite.run(c);
  }

  for (const auto& s : cfg.keep_samples) rep.samples[s] = samples.at(s);
  return rep;
}

ExperimentReport verify_suite(const StepDistribution& d, std::vector<std::uint64_t> sizes, std::uint64_t seed,
                              std::uint64_t reps, unsigned threads, double epsilon) {
  ExperimentConfig cfg;
  cfg.dist = d.spec();
  cfg.horizons = std::move(sizes);
  std::sort(cfg.horizons.begin(), cfg.horizons.end());
  cfg.horizons.erase(std::unique(cfg.horizons.begin(), cfg.horizons.end()), cfg.horizons.end());
  cfg.reps = reps;
  cfg.seed = seed;
  cfg.stats = kDefaultStats;
  cfg.checks = kChecks;
  cfg.threads = threads;
  cfg.epsilon = epsilon;
  return run_experiment(cfg);
}

CltResult clt_check(std::span<const double> samples, double mu, double sigma) {
  if (!(sigma > 0.0)) throw SpecError("clt_check: sigma must be positive");
  if (samples.size() < 200) throw SpecError("clt_check: needs at least 200 samples");
  CltResult res;
  const double n = static_cast<double>(samples.size());
  res.critical = std::sqrt(-0.5 * std::log(1e-3 / 2.0)) / (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n));

  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  if (*lo == *hi) {
    res.ks_statistic = 1.0;
    res.pass = false;
    res.diagnostic = "degenerate samples (sd = 0)";
    return res;
  }
  std::vector<double> z(samples.begin(), samples.end());
  for (auto& x : z) x = (x - mu) / sigma;
  std::sort(z.begin(), z.end());
  double dmax = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = normal_cdf(z[i]);
    dmax = std::max({dmax, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  res.ks_statistic = dmax;
  res.pass = dmax <= res.critical;
  return res;
}

std::vector<double> sample_root_hits(const StepDistribution& d, std::uint64_t n, std::uint64_t reps,
                                     std::uint64_t seed, unsigned threads) {
  std::vector<double> out(reps);
  const std::uint64_t chunks = (reps + kRepChunk - 1) / kRepChunk;
  parallel_for(chunks, threads, [&](std::uint64_t c) {
    std::vector<std::uint64_t> steps(n);
    const std::uint64_t end = std::min(reps, (c + 1) * kRepChunk);
    for (std::uint64_t r = c * kRepChunk; r < end; ++r) {
      Rng rng(derive_seed(seed, r));
      d.sample_into(rng, steps);
      std::uint64_t hits = 0;
      for (std::uint64_t t = 0; t < n; ++t) hits += steps[t] >= t + 1;
      out[r] = static_cast<double>(hits);
    }
  });
  return out;
}

nlohmann::ordered_json to_json(const ExperimentReport& rep) {
  nlohmann::ordered_json j;
  j["tool"] = "surf";
  j["version"] = rep.version;
  j["spec"] = rep.spec;
  j["seed"] = rep.seed;
  j["reps"] = rep.reps;
  j["horizons"] = rep.horizons;
  j["hypotheses"] = rep.hypotheses;
  auto stats = nlohmann::ordered_json::array();
  for (const auto& s : rep.stats) {
    stats.push_back({{"stat", s.stat},
                     {"n", s.n},
                     {"reps", s.reps},
                     {"mean", s.mean},
                     {"sd", s.sd},
                     {"se", s.se},
                     {"min", s.min},
                     {"max", s.max}});
  }
  j["stats"] = stats;
  auto checks = nlohmann::ordered_json::array();
  for (const auto& c : rep.checks) {
    checks.push_back({{"name", c.name},
                      {"n", c.n},
                      {"verdict", verdict_name(c.verdict)},
                      {"measured", c.measured},
                      {"reference", c.reference},
                      {"tolerance", c.tolerance},
                      {"relation", c.relation},
                      {"source", c.source},
                      {"proxy", c.proxy},
                      {"detail", c.detail}});
  }
  j["checks"] = checks;
  if (!rep.samples.empty()) {
    nlohmann::ordered_json s;
    for (const auto& [name, by_n] : rep.samples) {
      for (const auto& [n, xs] : by_n) s[name][std::to_string(n)] = xs;
    }
    j["samples"] = s;
  }
  j["failed"] = rep.any_failed();
  return j;
}

std::string to_table(const ExperimentReport& rep) {
  std::ostringstream os;
  os << "surf " << rep.version << "  spec=" << rep.spec << "  seed=" << rep.seed << "  reps=" << rep.reps << "\n";
  if (!rep.stats.empty()) {
    os << std::left << std::setw(14) << "stat" << std::right << std::setw(10) << "n" << std::setw(14) << "mean"
       << std::setw(14) << "sd" << std::setw(14) << "se" << "\n";
    for (const auto& s : rep.stats) {
      os << std::left << std::setw(14) << s.stat << std::right << std::setw(10) << s.n << std::setw(14) << fmt(s.mean)
         << std::setw(14) << fmt(s.sd) << std::setw(14) << fmt(s.se) << "\n";
    }
  }
  if (!rep.checks.empty()) {
    os << "\n"
       << std::left << std::setw(18) << "check" << std::right << std::setw(10) << "n" << "  " << std::left
       << std::setw(16) << "verdict" << std::right << std::setw(14) << "measured" << std::setw(14) << "reference"
       << "  detail\n";
    for (const auto& c : rep.checks) {
      os << std::left << std::setw(18) << c.name << std::right << std::setw(10) << c.n << "  " << std::left
         << std::setw(16) << verdict_name(c.verdict) << std::right << std::setw(14) << fmt(c.measured)
         << std::setw(14) << fmt(c.reference) << "  " << (c.proxy ? "[proxy] " : "") << c.detail << "\n";
    }
  }
  return os.str();
}

std::string stats_csv(const ExperimentReport& rep) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "stat,n,reps,mean,sd,se,min,max\n";
  for (const auto& s : rep.stats) {
    os << s.stat << ',' << s.n << ',' << s.reps << ',' << s.mean << ',' << s.sd << ',' << s.se << ',' << s.min << ','
       << s.max << '\n';
  }
  return os.str();
}

}  // namespace surf
