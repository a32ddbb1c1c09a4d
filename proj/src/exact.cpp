#include "surf/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace surf::exact {

namespace {

std::uint64_t support_cut(const StepDistribution& d, std::uint64_t n) {
  const auto eff = d.effective_support();
  return eff ? std::min(*eff, n) : n;
}

// sum_{s=1}^{min(t, cut)} q[s] * x[t - s] with independent partial sums.
template <class Acc, class Q, class X>
Acc conv_at(const Q* q, const X* x, std::uint64_t t, std::uint64_t cut) {
  const std::uint64_t m = std::min(t, cut);
  Acc a0 = 0, a1 = 0, a2 = 0, a3 = 0;
  std::uint64_t s = 1;
  for (; s + 3 <= m; s += 4) {
    a0 += static_cast<Acc>(q[s]) * static_cast<Acc>(x[t - s]);
    a1 += static_cast<Acc>(q[s + 1]) * static_cast<Acc>(x[t - s - 1]);
    a2 += static_cast<Acc>(q[s + 2]) * static_cast<Acc>(x[t - s - 2]);
    a3 += static_cast<Acc>(q[s + 3]) * static_cast<Acc>(x[t - s - 3]);
  }
  for (; s <= m; ++s) a0 += static_cast<Acc>(q[s]) * static_cast<Acc>(x[t - s]);
  return (a0 + a1) + (a2 + a3);
}

// q_0..q_n in extended precision. A table whose double entries sum to 1 - eps
// would make the linearly growing size recursion drift by about eps n^2, so
// finite laws use their exact fractions or are renormalized.
std::vector<long double> pmf_prefix_ld(const StepDistribution& d, std::uint64_t n) {
  const auto q = d.pmf_prefix(n);
  std::vector<long double> out(q.begin(), q.end());
  if (const auto& rat = d.rational()) {
    for (std::uint64_t s = 1; s <= n && s <= rat->numerators.size(); ++s)
      out[s] = static_cast<long double>(rat->numerators[s - 1]) / static_cast<long double>(rat->denominator);
  } else if (const auto top = d.support_max(); top && *top <= n) {
    long double total = 0.0L;
    for (std::uint64_t s = 1; s <= *top; ++s) total += out[s];
    for (auto& v : out) v /= total;
  }
  return out;
}

// Tail sums past this index use the expansion of p_t for zipf.
constexpr std::uint64_t kZipfCut = std::uint64_t{1} << 20;

// For zipf:alpha, p_t = c t^{-alpha} (1 + u_t) with c = 1 / (alpha zeta(1+alpha))
// and alpha/(2t) <= u_t <= alpha/(2t) + alpha(1+alpha)/(12 t^2), from the
// Euler-Maclaurin bounds on zeta(1+alpha, t). The helpers return the midpoint
// and half-width of the resulting enclosure.
struct Enclosure {
  long double mid;
  long double half;
};

// sum_{t > kZipfCut} p_t^x
Enclosure zipf_power_tail(double alpha, double q1, double x) {
  const std::uint64_t from = kZipfCut + 1;
  const long double c = static_cast<long double>(q1) / alpha;
  const long double s = static_cast<long double>(alpha) * x;
  const long double a = hurwitz_zeta(static_cast<double>(s), from);
  const long double b = hurwitz_zeta(static_cast<double>(s + 1), from);
  const long double cc = hurwitz_zeta(static_cast<double>(s + 2), from);
  const long double k = alpha / 2.0L + alpha * (1.0L + alpha) / 12.0L;
  const long double base = a + x * alpha / 2.0L * b;
  const long double lo = base - x * x * k * k * cc;
  const long double hi = base + (x * alpha * (1.0L + alpha) / 12.0L + x * x * k * k) * cc;
  const long double scale = std::pow(c, static_cast<long double>(x));
  // hurwitz_zeta carries an absolute error below 1e-13 per call.
  return {scale * (lo + hi) / 2, scale * ((hi - lo) / 2 + 3e-13L)};
}

// sum_{i > kZipfCut} i p_{i+1}, for alpha > 2.
Enclosure zipf_index_tail(double alpha, double q1) {
  const std::uint64_t from = kZipfCut + 2;  // k = i + 1
  const long double c = static_cast<long double>(q1) / alpha;
  const long double z1 = hurwitz_zeta(alpha - 1.0, from);
  const long double z2 = hurwitz_zeta(alpha, from);
  const long double z3 = hurwitz_zeta(alpha + 1.0, from);
  // sum (k-1) k^{-alpha} (1 + u_k)
  const long double lo = (z1 - z2) + alpha / 2.0L * (z2 - z3);
  const long double hi = lo + alpha * (1.0L + alpha) / 12.0L * z3;
  return {c * (lo + hi) / 2, c * ((hi - lo) / 2 + 3e-13L)};
}
}  // namespace

std::vector<double> renewal_sequence(const StepDistribution& d, std::uint64_t n) {
  const auto q = d.pmf_prefix(n);
  const auto cut = support_cut(d, n);
  std::vector<double> r(n + 1, 0.0);
  r[0] = 1.0;
  for (std::uint64_t t = 1; t <= n; ++t) r[t] = conv_at<double>(q.data(), r.data(), t, cut);
  return r;
}

SizeSeries expected_size_series(const StepDistribution& d, std::uint64_t n) {
  const auto q = pmf_prefix_ld(d, n);
  const auto cut = support_cut(d, n);
  std::vector<long double> acc(n + 1, 0.0L);
  acc[0] = 1.0L;
  for (std::uint64_t t = 1; t <= n; ++t) acc[t] = 1.0L + conv_at<long double>(q.data(), acc.data(), t, cut);
  SizeSeries out;
  out.rhat.resize(n + 1);
  out.r_exclusive.resize(n + 1);
  for (std::uint64_t t = 0; t <= n; ++t) {
    out.rhat[t] = static_cast<double>(acc[t]);
    out.r_exclusive[t] = static_cast<double>(acc[t] - 1.0L);
  }
  return out;
}

double expected_size_rooted(const StepDistribution& d, std::span<const double> rhat, std::int64_t i) {
  if (i > 0) throw std::invalid_argument("expected_size_rooted: root id must be <= 0");
  if (rhat.empty()) throw std::invalid_argument("expected_size_rooted: empty series");
  const auto n = static_cast<std::uint64_t>(rhat.size() - 1);
  const auto shift = static_cast<std::uint64_t>(-i);
  long double acc = 0.0L;
  for (std::uint64_t j = 1; j <= n; ++j) acc += static_cast<long double>(d.pmf(j + shift)) * rhat[n - j];
  return static_cast<double>(acc);
}

double expected_size_rooted(const StepDistribution& d, std::uint64_t n, std::int64_t i) {
  const auto series = expected_size_series(d, n);
  return expected_size_rooted(d, series.rhat, i);
}

std::vector<double> profile_expectations(const StepDistribution& d, std::uint64_t n, std::uint32_t kmax) {
  if (kmax == 0) return {};
  const auto q = d.pmf_prefix(n);
  const auto cut = support_cut(d, n);
  // E N_k(n) = sum_j f_{k-1}(j) P{Z <= n - j}, with f_{k-1} the (k-1)-fold
  // convolution of q restricted to [0, n].
  std::vector<double> cdf(n + 1, 0.0);
  for (std::uint64_t m = 0; m <= n; ++m) cdf[m] = 1.0 - d.tail(m + 1);

  std::vector<double> out(kmax, 0.0);
  std::vector<double> f(n + 1, 0.0);
  std::vector<double> next(n + 1, 0.0);
  f[0] = 1.0;  // f_0 = delta_0
  for (std::uint32_t k = 1; k <= kmax; ++k) {
    long double acc = 0.0L;
    for (std::uint64_t j = 0; j <= n; ++j) {
      if (f[j] != 0.0) acc += static_cast<long double>(f[j]) * cdf[n - j];
    }
    out[k - 1] = static_cast<double>(acc);
    if (k == kmax) break;
    for (std::uint64_t m = 0; m <= n; ++m) next[m] = conv_at<double>(q.data(), f.data(), m, cut);
    std::swap(f, next);
  }
  return out;
}

double profile_expectation(const StepDistribution& d, std::uint64_t n, std::uint32_t k) {
  if (k == 0) throw std::invalid_argument("profile_expectation: k must be >= 1");
  return profile_expectations(d, n, k).back();
}

std::vector<double> expected_leaves_series(const StepDistribution& d, std::span<const double> r) {
  if (r.empty()) return {};
  const std::uint64_t n = r.size() - 1;
  // no_child[k] = prod_{s=1}^k (1 - q_s)
  std::vector<double> no_child(n + 1, 1.0);
  long double prod = 1.0L;
  for (std::uint64_t k = 1; k <= n; ++k) {
    prod *= 1.0L - static_cast<long double>(d.pmf(k));
    no_child[k] = static_cast<double>(prod);
  }
  std::vector<double> el(n + 1, 0.0);
  for (std::uint64_t m = 1; m <= n; ++m) {
    // sum_{t=1}^m r_t no_child[m - t] = sum_{u=0}^{m-1} no_child[u] r_{m-u}
    long double acc = 0.0L;
    double a0 = 0, a1 = 0;
    std::uint64_t u = 0;
    for (; u + 1 < m; u += 2) {
      a0 += no_child[u] * r[m - u];
      a1 += no_child[u + 1] * r[m - u - 1];
    }
    for (; u < m; ++u) a0 += no_child[u] * r[m - u];
    acc = static_cast<long double>(a0) + a1;
    el[m] = static_cast<double>(acc);
  }
  return el;
}

LeavesResult expected_leaves(const StepDistribution& d, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("expected_leaves: n must be >= 1");
  const auto r = renewal_sequence(d, n);
  long double prod = 1.0L;
  std::vector<double> no_child(n + 1, 1.0);
  for (std::uint64_t k = 1; k <= n; ++k) {
    prod *= 1.0L - static_cast<long double>(d.pmf(k));
    no_child[k] = static_cast<double>(prod);
  }
  long double el = 0.0L;
  long double size = 0.0L;
  for (std::uint64_t t = 1; t <= n; ++t) {
    el += static_cast<long double>(r[t]) * no_child[n - t];
    size += r[t];
  }
  LeavesResult out;
  out.value = static_cast<double>(el);
  out.ratio = size > 0 ? static_cast<double>(el / size) : 0.0;
  const double qmax = d.q_max();
  out.bracket_lo = qmax < 1.0 ? std::exp(-1.0 / (1.0 - qmax)) : 0.0;
  out.bracket_hi = std::exp(-1.0);
  return out;
}

TreesResult expected_trees(const StepDistribution& d, std::uint64_t n, double epsilon, std::uint64_t max_roots) {
  if (n == 0) throw std::invalid_argument("expected_trees: n must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("expected_trees: epsilon must be positive");
  TreesResult out;
  long double var = 0.0L;
  for (std::uint64_t t = 1; t <= n; ++t) {
    const long double p = d.tail(t);
    var += p * (1.0L - p);
  }
  out.eo = d.truncated_mean(n);
  out.var_o = static_cast<double>(var);

  // Root i = 1 - j gets children t with Z_t = t - i, i.e. steps j..j+n-1.
  if (const auto support = d.support_max()) {
    long double em = 0.0L;
    for (std::uint64_t j = 1; j <= *support; ++j) {
      long double none = 1.0L;
      const std::uint64_t last = std::min(*support, j + n - 1);
      for (std::uint64_t u = j; u <= last; ++u) none *= 1.0L - static_cast<long double>(d.pmf(u));
      em += 1.0L - none;
    }
    out.em = static_cast<double>(em);
    out.em_error = static_cast<double>(*support) * std::numeric_limits<double>::epsilon();
    out.converged = true;
    out.roots_summed = *support;
    return out;
  }

  // Unbounded support with q nonincreasing: the term for root 1 - j lies in
  // [x_j - x_j^2 / 2, x_j] with x_j = p_j - p_{j+n}, and
  // sum_{j > J} x_j = sum_{u=J+1}^{J+n} p_u.
  std::vector<long double> window(n);
  long double log_none = 0.0L;  // sum_{u=j}^{j+n-1} log(1 - q_u)
  for (std::uint64_t u = 1; u <= n; ++u) {
    window[(u - 1) % n] = std::log1p(-static_cast<long double>(d.pmf(u)));
    log_none += window[(u - 1) % n];
  }
  long double partial = 0.0L;
  const std::uint64_t check_every = std::max<std::uint64_t>(n, 4096);
  for (std::uint64_t j = 1;; ++j) {
    partial += -std::expm1(log_none);
    const std::uint64_t done = j;
    if (done % check_every == 0 || done >= max_roots) {
      long double rest = 0.0L;
      for (std::uint64_t u = done + 1; u <= done + n; ++u) rest += d.tail(u);
      const long double x_next = static_cast<long double>(d.tail(done + 1)) - d.tail(done + 1 + n);
      const long double second_order = 0.25L * x_next * rest;
      // Drift of the sliding log-sum plus accumulation error of the partial sum.
      const long double rounding =
          4.0L * static_cast<long double>(done) * std::numeric_limits<long double>::epsilon() * (partial + 1.0L);
      const long double error = second_order + rounding;
      if (error <= epsilon || done >= max_roots) {
        out.em = static_cast<double>(partial + rest - second_order);
        out.em_error = static_cast<double>(error);
        out.converged = error <= epsilon;
        out.roots_summed = done;
        return out;
      }
    }
    // Slide the window from [j, j+n-1] to [j+1, j+n].
    const std::uint64_t slot = (j - 1) % n;
    log_none -= window[slot];
    window[slot] = std::log1p(-static_cast<long double>(d.pmf(j + n)));
    log_none += window[slot];
  }
}

double expected_degree(const StepDistribution& d, std::uint64_t n, std::int64_t i) {
  if (i <= 0) {
    const auto a = static_cast<std::uint64_t>(1 - i);
    return d.tail(a) - d.tail(a + n);
  }
  const auto v = static_cast<std::uint64_t>(i);
  if (v > n) return 0.0;
  return 1.0 - d.tail(n - v + 1);
}

double degree_variance_limit(const StepDistribution& d) {
  long double sq = 0.0L;
  const std::uint64_t stop = d.effective_support().value_or(std::uint64_t{1} << 24);
  for (std::uint64_t t = 1; t <= stop; ++t) {
    const long double q = d.pmf(t);
    sq += q * q;
  }
  return static_cast<double>(1.0L - sq);
}

double survival_probability(const StepDistribution& d) {
  const auto info = d.mean_info();
  return info.finite ? 1.0 / *info.value : 0.0;
}

BlockSurvival block_survival(const StepDistribution& d, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("block_survival: n must be >= 1");
  long double prod = 1.0L;
  for (std::uint64_t i = 1; i + 1 <= n; ++i) prod *= 1.0L - static_cast<long double>(d.tail(i + 1));
  BlockSurvival out;
  out.exact = static_cast<double>(prod);
  const auto info = d.mean_info();
  const double q1 = d.pmf(1);
  if (info.finite && q1 > 0.0) out.lower_bound = std::exp(-*info.value / q1);
  return out;
}

HeightBound bound_height(const StepDistribution& d, std::uint64_t n, std::uint64_t k) {
  if (n == 0) throw std::invalid_argument("bound_height: n must be >= 1");
  HeightBound out;
  const double pn = d.tail(n);
  if (pn > 0.0) {
    out.mean_bound = (2.0 + std::log(static_cast<double>(n))) / pn;
  } else {
    out.mean_bound = std::numeric_limits<double>::infinity();
    out.finite = false;
  }
  long double sum = 0.0L;
  for (std::uint64_t t = 1; t <= n && sum < 1.0L; ++t) {
    sum += std::exp(-static_cast<long double>(k) * d.tail(t));
  }
  out.tail_bound = static_cast<double>(std::min(1.0L, sum));
  return out;
}

DegreeBounds bound_degrees(const StepDistribution& d, std::uint64_t n, double x, double tolerance) {
  if (!(x > 0.0)) throw std::invalid_argument("bound_degrees: x must be positive");
  DegreeBounds out;
  out.positive_tail = static_cast<double>(n) * std::exp(x - 1.0 - x * std::log(x));
  const double prefactor = std::pow(std::numbers::e / x, x);

  auto finish = [&](long double sum, long double err) {
    out.root_series = SeriesStatus::converged;
    out.root_series_error = static_cast<double>(prefactor * err);
    out.root_tail = static_cast<double>(prefactor * (sum + err));
  };

  switch (d.family()) {
    case Family::constant:
    case Family::table: {
      long double sum = 0.0L;
      for (std::uint64_t t = 1; t <= *d.support_max(); ++t) sum += std::pow(static_cast<long double>(d.tail(t)), x);
      finish(sum, 0.0L);
      return out;
    }
    case Family::geometric: {
      const double theta = d.params()[0];
      if (theta == 1.0) {
        finish(1.0L, 0.0L);
      } else {
        finish(1.0L / (1.0L - std::pow(1.0L - theta, static_cast<long double>(x))), 0.0L);
      }
      return out;
    }
    case Family::logheavy:
      // p_t ~ 1 / (c log t): sum_t p_t^x diverges for every x.
      out.root_series = SeriesStatus::divergent;
      return out;
    case Family::zipf: {
      const double alpha = d.params()[0];
      if (alpha * x <= 1.0) {
        out.root_series = SeriesStatus::divergent;
        return out;
      }
      if (alpha * x < 1.01) {
        out.root_series = SeriesStatus::uncertified;
        return out;
      }
      long double sum = 0.0L;
      for (std::uint64_t t = 1; t <= kZipfCut; ++t) sum += std::pow(static_cast<long double>(d.tail(t)), x);
      const auto [mid, half] = zipf_power_tail(alpha, d.pmf(1), x);
      sum += mid;
      if (half > tolerance) {
        out.root_series = SeriesStatus::uncertified;
        out.root_series_error = static_cast<double>(prefactor * half);
        return out;
      }
      finish(sum - half, half);
      return out;
    }
  }
  return out;
}

ChernoffBounds bound_chernoff_M(double em, double x) {
  if (!(em > 0.0) || !(x > 0.0)) throw std::invalid_argument("bound_chernoff_M: EM and x must be positive");
  ChernoffBounds out;
  const double base = (em + x) * std::log(em / (em + x));
  out.upper = std::exp(base - x);
  out.upper_standard = std::exp(base + x);
  out.lower = std::exp(-x * x / (2.0 * em));
  return out;
}

Certified renewal_index_scale(const StepDistribution& d) {
  Certified out;
  switch (d.family()) {
    case Family::constant:
    case Family::table: {
      long double sum = 0.0L;
      for (std::uint64_t i = 1; i < *d.support_max(); ++i) sum += static_cast<long double>(i) * d.tail(i + 1);
      out.value = static_cast<double>(sum);
      return out;
    }
    case Family::geometric: {
      const double theta = d.params()[0];
      out.value = (1.0 - theta) / (theta * theta);
      return out;
    }
    case Family::logheavy:
      out.finite = false;
      out.value = std::numeric_limits<double>::infinity();
      return out;
    case Family::zipf: {
      const double alpha = d.params()[0];
      if (alpha <= 2.0) {
        out.finite = false;
        out.value = std::numeric_limits<double>::infinity();
        return out;
      }
      long double sum = 0.0L;
      for (std::uint64_t i = 1; i <= kZipfCut; ++i) sum += static_cast<long double>(i) * d.tail(i + 1);
      const auto [mid, half] = zipf_index_tail(alpha, d.pmf(1));
      out.value = static_cast<double>(sum + mid);
      out.error = static_cast<double>(half);
      return out;
    }
  }
  return out;
}

ExactSeries exact_series(const StepDistribution& d, std::uint64_t n) {
  ExactSeries s;
  s.horizon = n;
  s.r = renewal_sequence(d, n);
  s.rhat = expected_size_series(d, n).rhat;
  s.m = d.truncated_means(n);
  s.el = expected_leaves_series(d, s.r);
  return s;
}

}  // namespace surf::exact
