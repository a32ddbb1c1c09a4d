#include "surf/dist.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "surf/errors.hpp"

namespace surf {

namespace {

constexpr std::uint64_t kTableLimit = std::uint64_t{1} << 20;
constexpr std::size_t kGuideBuckets = std::size_t{1} << 16;
constexpr double kTableTolerance = 1e-9;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_real(std::string_view token, std::string_view what) {
  token = trim(token);
  double value = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (token.empty() || ec != std::errc{} || ptr != last || !std::isfinite(value)) {
    throw SpecError("malformed number '" + std::string(token) + "' in " + std::string(what));
  }
  return value;
}

std::uint64_t parse_uint(std::string_view token, std::string_view what) {
  token = trim(token);
  std::uint64_t value = 0;
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), last, value);
  if (token.empty() || ec != std::errc{} || ptr != last) {
    throw SpecError("malformed integer '" + std::string(token) + "' in " + std::string(what));
  }
  return value;
}

struct Fraction {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
};

// Exact value of a decimal literal or `a/b`; none for exponent notation or
// more digits than fit in 64 bits.
std::optional<Fraction> parse_exact(std::string_view token) {
  token = trim(token);
  if (auto slash = token.find('/'); slash != std::string_view::npos) {
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    auto lhs = trim(token.substr(0, slash));
    auto rhs = trim(token.substr(slash + 1));
    auto r1 = std::from_chars(lhs.data(), lhs.data() + lhs.size(), a);
    auto r2 = std::from_chars(rhs.data(), rhs.data() + rhs.size(), b);
    if (r1.ec != std::errc{} || r1.ptr != lhs.data() + lhs.size() || r2.ec != std::errc{} ||
        r2.ptr != rhs.data() + rhs.size() || b == 0) {
      return std::nullopt;
    }
    const auto g = std::gcd(a, b);
    return Fraction{a / g, b / g};
  }
  std::uint64_t num = 0;
  std::uint64_t den = 1;
  bool seen_point = false;
  bool any_digit = false;
  for (char c : token) {
    if (c == '.' && !seen_point) {
      seen_point = true;
      continue;
    }
    if (c < '0' || c > '9') return std::nullopt;
    any_digit = true;
    if (num > (std::numeric_limits<std::uint64_t>::max() - 9) / 10) return std::nullopt;
    num = num * 10 + static_cast<std::uint64_t>(c - '0');
    if (seen_point) {
      if (den > std::numeric_limits<std::uint64_t>::max() / 10) return std::nullopt;
      den *= 10;
    }
  }
  if (!any_digit) return std::nullopt;
  const auto g = std::gcd(num, den);
  return Fraction{num / std::max<std::uint64_t>(g, 1), den / std::max<std::uint64_t>(g, 1)};
}

// sum_{k >= n} k^{-s}, Euler-Maclaurin through the B_6 term. Only used for
// n >= 2^20 where the next correction is below 1e-40.
long double zipf_em_tail(long double s, long double n) {
  const long double a = std::pow(n, -s);
  return n * a / (s - 1.0L) + a / 2.0L + s * a / (12.0L * n) -
         s * (s + 1.0L) * (s + 2.0L) * a / (720.0L * n * n * n) +
         s * (s + 1.0L) * (s + 2.0L) * (s + 3.0L) * (s + 4.0L) * a /
             (30240.0L * n * n * n * n * n);
}

long double logheavy_weight(long double k) {
  const long double x = k + 1.0L;
  const long double l = std::log(x);
  return 1.0L / (x * l * l);
}

// sum_{k >= n} 1 / ((k+1) log^2(k+1)) for large n via Euler-Maclaurin on
// f(x) = 1/(x log^2 x) from x = n + 1.
long double logheavy_em_tail(long double n) {
  const long double x = n + 1.0L;
  const long double l = std::log(x);
  const long double f = 1.0L / (x * l * l);
  const long double df = -(l + 2.0L) / (x * x * l * l * l);
  return 1.0L / l + f / 2.0L - df / 12.0L;
}

}  // namespace

std::string_view family_name(Family f) noexcept {
  switch (f) {
    case Family::constant: return "const";
    case Family::table: return "table";
    case Family::geometric: return "geom";
    case Family::zipf: return "zipf";
    case Family::logheavy: return "logheavy";
  }
  return "unknown";
}

double hurwitz_zeta(double s, std::uint64_t n) {
  if (!(s > 1.0)) throw SpecError("hurwitz_zeta requires s > 1");
  if (n == 0) throw SpecError("hurwitz_zeta requires n >= 1");
  if (n >= kTableLimit) return static_cast<double>(zipf_em_tail(s, static_cast<long double>(n)));
  long double acc = zipf_em_tail(s, static_cast<long double>(kTableLimit));
  for (std::uint64_t k = kTableLimit - 1; k >= n; --k) {
    acc += std::pow(static_cast<long double>(k), -static_cast<long double>(s));
    if (k == 1) break;
  }
  return static_cast<double>(acc);
}

struct StepDistribution::Impl {
  Family family = Family::constant;
  std::string spec;
  std::vector<double> params;

  std::uint64_t k = 1;      // constant
  double theta = 1.0;       // geometric
  double rho = 0.0;         // 1 - theta
  double log_rho = 0.0;     // log1p(-theta)
  long double s = 2.0L;     // zipf exponent 1 + alpha
  long double norm = 1.0L;  // zipf / logheavy normalization

  std::vector<double> q;  // finite support: q[n], n in [0, support]

  // tail[n] = p_n for n in [0, T + 1]; tail[0] = tail[1] = 1.
  std::vector<double> tail;
  std::uint64_t table_size = 0;  // T
  double tail_end = 0.0;         // p_{T+1}
  std::vector<std::uint32_t> guide;

  std::optional<std::uint64_t> support;
  std::optional<std::uint64_t> effective_support;
  std::uint64_t period = 1;
  std::optional<RationalPmf> rational;
  MeanInfo mean;
  double q_max = 1.0;

  double analytic_tail(std::uint64_t n) const {
    const auto x = static_cast<long double>(n);
    switch (family) {
      case Family::zipf: return static_cast<double>(zipf_em_tail(s, x) / norm);
      case Family::logheavy: return static_cast<double>(logheavy_em_tail(x) / norm);
      case Family::geometric: return std::pow(rho, static_cast<double>(n - 1));
      default: return 0.0;
    }
  }

  void build_guide() {
    guide.assign(kGuideBuckets + 1, 0);
    guide[0] = static_cast<std::uint32_t>(table_size);
    std::uint64_t n = 1;
    for (std::size_t j = kGuideBuckets; j >= 1; --j) {
      const double u = static_cast<double>(j) / static_cast<double>(kGuideBuckets);
      while (n < table_size && tail[n + 1] >= u) ++n;
      guide[j] = static_cast<std::uint32_t>(n);
    }
  }
};

StepDistribution::StepDistribution(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

StepDistribution StepDistribution::constant(std::uint64_t k) {
  if (k == 0) throw SpecError("const step must be a positive integer");
  if (k >= kSaturatedStep) throw SpecError("const step too large");
  auto impl = std::make_shared<Impl>();
  impl->family = Family::constant;
  impl->spec = "const:" + std::to_string(k);
  impl->params = {static_cast<double>(k)};
  impl->k = k;
  impl->support = k;
  impl->effective_support = k;
  impl->period = k;
  if (k <= kTableLimit) {
    RationalPmf r{std::vector<std::uint64_t>(k, 0), 1};
    r.numerators.back() = 1;
    impl->rational = std::move(r);
  }
  impl->mean = {true, static_cast<double>(k), true};
  impl->q_max = 1.0;
  impl->table_size = k;
  return StepDistribution(std::move(impl));
}

namespace {

std::shared_ptr<StepDistribution::Impl> finite_impl(std::vector<double> probs) {
  if (probs.empty()) throw SpecError("table needs at least one probability");
  long double total = 0.0L;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw SpecError("table probabilities must be nonnegative");
    total += p;
  }
  if (std::fabs(static_cast<double>(total) - 1.0) > kTableTolerance) {
    std::ostringstream os;
    os << "table probabilities sum to " << static_cast<double>(total) << ", expected 1";
    throw SpecError(os.str());
  }
  std::uint64_t support = probs.size();
  while (support > 0 && probs[support - 1] == 0.0) --support;

  auto impl = std::make_shared<StepDistribution::Impl>();
  impl->family = Family::table;
  impl->params = probs;
  impl->q.assign(support + 1, 0.0);
  for (std::uint64_t n = 1; n <= support; ++n) impl->q[n] = probs[n - 1];
  impl->support = support;
  impl->effective_support = support;
  impl->table_size = support;

  impl->tail.assign(support + 2, 0.0);
  long double acc = 0.0L;
  for (std::uint64_t n = support; n >= 1; --n) {
    acc += impl->q[n];
    impl->tail[n] = static_cast<double>(acc);
  }
  impl->tail[0] = impl->tail[1] = 1.0;
  impl->tail_end = 0.0;

  std::uint64_t g = 0;
  long double mean = 0.0L;
  long double second = 0.0L;
  double qmax = 0.0;
  for (std::uint64_t n = 1; n <= support; ++n) {
    if (impl->q[n] > 0.0) g = std::gcd(g, n);
    mean += static_cast<long double>(n) * impl->q[n];
    second += static_cast<long double>(n) * static_cast<long double>(n) * impl->q[n];
    qmax = std::max(qmax, impl->q[n]);
  }
  impl->period = g;
  impl->mean = {true, static_cast<double>(mean), true};
  impl->q_max = qmax;
  impl->build_guide();
  return impl;
}

}  // namespace

StepDistribution StepDistribution::table(std::vector<double> probabilities) {
  auto impl = finite_impl(std::move(probabilities));
  std::ostringstream os;
  os.precision(17);
  os << "table:";
  for (std::size_t i = 0; i < impl->params.size(); ++i) os << (i ? "," : "") << impl->params[i];
  impl->spec = os.str();
  return StepDistribution(std::move(impl));
}

StepDistribution StepDistribution::geometric(double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw SpecError("geom theta must lie in (0, 1]");
  auto impl = std::make_shared<Impl>();
  impl->family = Family::geometric;
  std::ostringstream os;
  os.precision(17);
  os << "geom:" << theta;
  impl->spec = os.str();
  impl->params = {theta};
  impl->theta = theta;
  impl->rho = 1.0 - theta;
  impl->log_rho = std::log1p(-theta);
  impl->mean = {true, 1.0 / theta, true};
  impl->q_max = theta;
  impl->period = 1;

  if (theta == 1.0) {
    impl->support = 1;
    impl->effective_support = 1;
    impl->table_size = 1;
    impl->tail = {1.0, 1.0, 0.0};
    impl->tail_end = 0.0;
    impl->build_guide();
    return StepDistribution(std::move(impl));
  }
  // q_n = theta rho^{n-1} underflows past this index.
  const double denorm_min = std::numeric_limits<double>::denorm_min();
  auto eff = static_cast<std::uint64_t>(
      std::ceil((std::log(denorm_min) - std::log(theta)) / impl->log_rho)) + 2;
  impl->effective_support = eff;

  // Table until p_n drops below 1e-300 or the size limit.
  std::uint64_t t = 1;
  const double cutoff = 1e-300;
  while (t < kTableLimit && std::pow(impl->rho, static_cast<double>(t)) >= cutoff) ++t;
  impl->table_size = t;
  impl->tail.resize(t + 2);
  impl->tail[0] = 1.0;
  for (std::uint64_t n = 1; n <= t + 1; ++n) {
    impl->tail[n] = std::pow(impl->rho, static_cast<double>(n - 1));
  }
  impl->tail_end = impl->tail[t + 1];
  impl->build_guide();
  return StepDistribution(std::move(impl));
}

namespace {

template <class Weight>
void fill_unbounded_table(StepDistribution::Impl& impl, Weight weight, long double em_tail_at_end) {
  const std::uint64_t t = kTableLimit;
  std::vector<long double> suffix(t + 2);
  suffix[t + 1] = em_tail_at_end;
  for (std::uint64_t n = t; n >= 1; --n) suffix[n] = suffix[n + 1] + weight(static_cast<long double>(n));
  impl.norm = suffix[1];
  impl.table_size = t;
  impl.tail.resize(t + 2);
  impl.tail[0] = 1.0;
  for (std::uint64_t n = 1; n <= t + 1; ++n) impl.tail[n] = static_cast<double>(suffix[n] / impl.norm);
  impl.tail[1] = 1.0;
  impl.tail_end = impl.tail[t + 1];
  impl.q_max = static_cast<double>(weight(1.0L) / impl.norm);
  impl.build_guide();
}

}  // namespace

StepDistribution StepDistribution::zipf(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw SpecError("zipf alpha must be positive");
  auto impl = std::make_shared<Impl>();
  impl->family = Family::zipf;
  std::ostringstream os;
  os.precision(17);
  os << "zipf:" << alpha;
  impl->spec = os.str();
  impl->params = {alpha};
  impl->s = 1.0L + static_cast<long double>(alpha);
  const long double s = impl->s;
  fill_unbounded_table(
      *impl, [s](long double n) { return std::pow(n, -s); },
      zipf_em_tail(s, static_cast<long double>(kTableLimit + 1)));
  if (alpha > 1.0) {
    const double zeta_alpha = hurwitz_zeta(alpha, 1);
    impl->mean = {true, static_cast<double>(zeta_alpha / impl->norm), alpha > 2.0};
  } else {
    impl->mean = {false, std::nullopt, false};
  }
  return StepDistribution(std::move(impl));
}

StepDistribution StepDistribution::logheavy() {
  auto impl = std::make_shared<Impl>();
  impl->family = Family::logheavy;
  impl->spec = "logheavy";
  fill_unbounded_table(*impl, logheavy_weight,
                       logheavy_em_tail(static_cast<long double>(kTableLimit + 1)));
  impl->mean = {false, std::nullopt, false};
  return StepDistribution(std::move(impl));
}

StepDistribution StepDistribution::parse(std::string_view spec) {
  spec = trim(spec);
  const auto colon = spec.find(':');
  const auto family = trim(spec.substr(0, colon));
  const std::string_view args = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  const std::string full(spec);

  if (family == "logheavy") {
    if (colon != std::string_view::npos && !trim(args).empty()) {
      throw SpecError("logheavy takes no parameters: '" + full + "'");
    }
    return logheavy();
  }
  if (colon == std::string_view::npos) {
    throw SpecError("distribution spec must look like family:params, got '" + full + "'");
  }
  if (family == "const") {
    return constant(parse_uint(args, full));
  }
  if (family == "geom") {
    return geometric(parse_real(args, full));
  }
  if (family == "zipf") {
    return zipf(parse_real(args, full));
  }
  if (family == "table") {
    std::vector<double> probs;
    std::vector<std::optional<Fraction>> exact;
    std::size_t start = 0;
    while (true) {
      const auto comma = args.find(',', start);
      const auto token = trim(args.substr(start, comma == std::string_view::npos ? args.npos : comma - start));
      if (token.empty()) throw SpecError("empty table entry in '" + full + "'");
      if (!token.empty() && token.front() == '-') throw SpecError("table probabilities must be nonnegative");
      auto fr = parse_exact(token);
      if (fr) {
        probs.push_back(static_cast<double>(fr->num) / static_cast<double>(fr->den));
      } else {
        probs.push_back(parse_real(token, full));
      }
      exact.push_back(fr);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    auto impl = finite_impl(probs);
    impl->spec = full;

    // Common denominator for the exact oracle, when it fits in 64 bits.
    bool ok = std::all_of(exact.begin(), exact.end(), [](const auto& f) { return f.has_value(); });
    unsigned __int128 lcm = 1;
    if (ok) {
      for (const auto& f : exact) {
        const auto g = std::gcd(static_cast<std::uint64_t>(lcm), f->den);
        lcm = lcm / g * f->den;
        if (lcm > std::numeric_limits<std::uint64_t>::max() / 2) {
          ok = false;
          break;
        }
      }
    }
    if (ok) {
      RationalPmf r;
      r.denominator = static_cast<std::uint64_t>(lcm);
      for (std::uint64_t n = 1; n <= *impl->support; ++n) {
        const auto& f = exact[n - 1];
        r.numerators.push_back(static_cast<std::uint64_t>(lcm / f->den * f->num));
      }
      impl->rational = std::move(r);
    }
    return StepDistribution(std::move(impl));
  }
  throw SpecError("unknown distribution family '" + std::string(family) + "'");
}

Family StepDistribution::family() const noexcept { return impl_->family; }
const std::string& StepDistribution::spec() const noexcept { return impl_->spec; }
const std::vector<double>& StepDistribution::params() const noexcept { return impl_->params; }
std::optional<std::uint64_t> StepDistribution::support_max() const noexcept { return impl_->support; }
std::optional<std::uint64_t> StepDistribution::effective_support() const noexcept {
  return impl_->effective_support;
}
std::uint64_t StepDistribution::period() const noexcept { return impl_->period; }
double StepDistribution::q_max() const { return impl_->q_max; }
MeanInfo StepDistribution::mean_info() const { return impl_->mean; }
std::uint64_t StepDistribution::table_size() const noexcept { return impl_->table_size; }

const std::optional<RationalPmf>& StepDistribution::rational() const noexcept {
  return impl_->rational;
}

double StepDistribution::pmf(std::uint64_t n) const {
  const Impl& d = *impl_;
  if (n == 0) return 0.0;
  switch (d.family) {
    case Family::constant: return n == d.k ? 1.0 : 0.0;
    case Family::table: return n < d.q.size() ? d.q[n] : 0.0;
    case Family::geometric:
      if (d.theta == 1.0) return n == 1 ? 1.0 : 0.0;
      return d.theta * std::pow(d.rho, static_cast<double>(n - 1));
    case Family::zipf:
      return static_cast<double>(std::pow(static_cast<long double>(n), -d.s) / d.norm);
    case Family::logheavy:
      return static_cast<double>(logheavy_weight(static_cast<long double>(n)) / d.norm);
  }
  return 0.0;
}

double StepDistribution::tail(std::uint64_t n) const {
  const Impl& d = *impl_;
  if (n <= 1) return 1.0;
  switch (d.family) {
    case Family::constant: return n <= d.k ? 1.0 : 0.0;
    case Family::table: return n < d.tail.size() ? d.tail[n] : 0.0;
    case Family::geometric:
      if (d.theta == 1.0) return 0.0;
      return std::pow(d.rho, static_cast<double>(n - 1));
    case Family::zipf:
    case Family::logheavy:
      return n < d.tail.size() ? d.tail[n] : d.analytic_tail(n);
  }
  return 0.0;
}

double StepDistribution::truncated_mean(std::uint64_t n) const {
  const Impl& d = *impl_;
  switch (d.family) {
    case Family::constant: return static_cast<double>(std::min(n, d.k));
    case Family::geometric:
      if (d.theta == 1.0) return n == 0 ? 0.0 : 1.0;
      if (d.theta >= 1e-3) return (1.0 - std::pow(d.rho, static_cast<double>(n))) / d.theta;
      return -std::expm1(static_cast<double>(n) * d.log_rho) / d.theta;
    default: {
      long double acc = 0.0L;
      const std::uint64_t stop = d.support ? std::min(n, *d.support) : n;
      for (std::uint64_t t = 1; t <= stop; ++t) acc += tail(t);
      return static_cast<double>(acc);
    }
  }
}

std::vector<double> StepDistribution::truncated_means(std::uint64_t n) const {
  std::vector<double> m(n + 1, 0.0);
  long double acc = 0.0L;
  for (std::uint64_t t = 1; t <= n; ++t) {
    acc += tail(t);
    m[t] = static_cast<double>(acc);
  }
  return m;
}

std::vector<double> StepDistribution::pmf_prefix(std::uint64_t n) const {
  std::vector<double> q(n + 1, 0.0);
  const std::uint64_t stop = impl_->effective_support ? std::min(n, *impl_->effective_support) : n;
  for (std::uint64_t t = 1; t <= stop; ++t) q[t] = pmf(t);
  return q;
}

std::uint64_t StepDistribution::sample(Rng& rng) const {
  const Impl& d = *impl_;
  if (d.family == Family::constant) return d.k;
  const double v = rng.uniform_pos();
  if (v <= d.tail_end) return sample_beyond_table(v, rng);
  auto j = static_cast<std::size_t>(v * static_cast<double>(kGuideBuckets));
  if (j >= kGuideBuckets) j = kGuideBuckets - 1;
  std::uint64_t lo = d.guide[j + 1];
  std::uint64_t hi = d.guide[j];
  const double* tail = d.tail.data();
  // Largest n in [lo, hi] with p_n >= v; p_lo >= v holds by construction.
  while (hi - lo > 8) {
    const std::uint64_t mid = lo + (hi - lo + 1) / 2;
    if (tail[mid] >= v) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  while (lo < hi && tail[lo + 1] >= v) ++lo;
  return lo;
}

void StepDistribution::sample_into(Rng& rng, std::span<std::uint64_t> out) const {
  for (auto& z : out) z = sample(rng);
}

std::uint64_t StepDistribution::sample_beyond_table(double v, Rng& rng) const {
  const Impl& d = *impl_;
  auto saturate = [&rng] { return kSaturatedStep + (rng.next() >> 3); };
  if (d.family == Family::geometric) {
    const double z = 1.0 + std::floor(std::log(v) / d.log_rho);
    if (!(z < static_cast<double>(kSaturatedStep))) return saturate();
    return std::max<std::uint64_t>(static_cast<std::uint64_t>(z), d.table_size + 1);
  }
  // p(lo) >= v > p(hi).
  std::uint64_t lo = d.table_size + 1;
  std::uint64_t hi = 2 * lo;
  while (d.analytic_tail(hi) >= v) {
    lo = hi;
    if (hi >= kSaturatedStep / 2) return saturate();
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (d.analytic_tail(mid) >= v) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace surf
