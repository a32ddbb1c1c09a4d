#include "surf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "surf/errors.hpp"
#include "surf/forest.hpp"
#include "surf/parallel.hpp"

namespace surf::oracle {

namespace {

using u128 = unsigned __int128;

constexpr std::uint64_t kChunk = 1 << 16;

u128 gcd128(u128 a, u128 b) {
  while (b != 0) {
    const u128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

std::string to_string128(u128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v != 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

template <class W>
struct Accumulator {
  W total{};
  W m{}, o{}, l{}, h{}, h0{};
  std::vector<W> r, size_root, deg_root, deg_pos, dist_m, dist_o, dist_l, dist_h;

  Accumulator(std::uint64_t n, std::uint64_t roots)
      : r(n + 1), size_root(roots), deg_root(roots), deg_pos(n), dist_m(n + 1), dist_o(n + 1), dist_l(n + 1),
        dist_h(n + 1) {}

  void add(const Forest& f, const ForestStats& st, W w) {
    total += w;
    m += w * static_cast<W>(st.num_trees);
    o += w * static_cast<W>(st.root_hits);
    l += w * static_cast<W>(st.leaves_of_zero);
    h += w * static_cast<W>(st.height);
    h0 += w * static_cast<W>(st.height_of_zero);
    dist_m[st.num_trees] += w;
    dist_o[st.root_hits] += w;
    dist_l[st.leaves_of_zero] += w;
    dist_h[st.height] += w;
    const auto colors = f.colors();
    for (std::size_t t = 0; t < colors.size(); ++t) {
      if (colors[t] == 0) r[t + 1] += w;
    }
    for (const auto& [root, size] : st.tree_sizes) size_root[static_cast<std::size_t>(-root)] += w * static_cast<W>(size);
    for (const auto& [root, deg] : st.root_degrees) deg_root[static_cast<std::size_t>(-root)] += w * static_cast<W>(deg);
    for (std::size_t t = 0; t < st.degrees.size(); ++t) deg_pos[t] += w * static_cast<W>(st.degrees[t]);
  }

  static void merge_vec(std::vector<W>& a, const std::vector<W>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  }

  void merge(const Accumulator& b) {
    total += b.total;
    m += b.m;
    o += b.o;
    l += b.l;
    h += b.h;
    h0 += b.h0;
    merge_vec(r, b.r);
    merge_vec(size_root, b.size_root);
    merge_vec(deg_root, b.deg_root);
    merge_vec(deg_pos, b.deg_pos);
    merge_vec(dist_m, b.dist_m);
    merge_vec(dist_o, b.dist_o);
    merge_vec(dist_l, b.dist_l);
    merge_vec(dist_h, b.dist_h);
  }
};

template <class W>
Value make_value(W num, W total) {
  Value v;
  v.value = static_cast<long double>(num) / static_cast<long double>(total);
  if constexpr (std::is_same_v<W, u128>) {
    const u128 g = num == 0 ? total : gcd128(num, total);
    const u128 p = num / g;
    const u128 q = total / g;
    v.rational = q == 1 ? to_string128(p) : to_string128(p) + "/" + to_string128(q);
  }
  return v;
}

template <class W>
std::vector<Value> make_values(const std::vector<W>& nums, W total) {
  std::vector<Value> out;
  out.reserve(nums.size());
  for (const auto& x : nums) out.push_back(make_value(x, total));
  return out;
}

template <class W>
void run(const std::vector<std::uint64_t>& values, const std::vector<W>& weights, std::uint64_t n,
         std::uint64_t sequences, unsigned threads, EnumerationResult& out) {
  const std::uint64_t s = values.size();
  const std::uint64_t roots = out.max_step;
  const std::uint64_t chunks = (sequences + kChunk - 1) / kChunk;
  std::vector<Accumulator<W>> parts(chunks, Accumulator<W>(n, roots));

  parallel_for(chunks, threads, [&](std::uint64_t c) {
    auto& acc = parts[c];
    const std::uint64_t begin = c * kChunk;
    const std::uint64_t end = std::min(sequences, begin + kChunk);
    // Odometer digits, z_1 most significant.
    std::vector<std::uint64_t> digit(n);
    std::uint64_t x = begin;
    for (std::uint64_t k = n; k-- > 0;) {
      digit[k] = x % s;
      x /= s;
    }
    std::vector<std::uint64_t> steps(n);
    for (std::uint64_t idx = begin; idx < end; ++idx) {
      W w = W(1);
      for (std::uint64_t k = 0; k < n; ++k) {
        steps[k] = values[digit[k]];
        w *= weights[digit[k]];
      }
      const Forest f(steps);
      acc.add(f, compute_stats(f), w);
      for (std::uint64_t k = n; k-- > 0;) {
        if (++digit[k] < s) break;
        digit[k] = 0;
      }
    }
  });

  Accumulator<W> acc(n, roots);
  for (const auto& p : parts) acc.merge(p);
  const W total = acc.total;

  out.em = make_value(acc.m, total);
  out.eo = make_value(acc.o, total);
  out.el = make_value(acc.l, total);
  out.eh = make_value(acc.h, total);
  out.eh_zero = make_value(acc.h0, total);
  acc.r[0] = total;
  out.r = make_values(acc.r, total);
  std::vector<W> rhat(n + 1);
  rhat[0] = total;
  for (std::uint64_t t = 1; t <= n; ++t) rhat[t] = rhat[t - 1] + acc.r[t];
  out.rhat = make_values(rhat, total);
  out.size_by_root = make_values(acc.size_root, total);
  out.degree_root = make_values(acc.deg_root, total);
  out.degree_positive = make_values(acc.deg_pos, total);
  out.dist_m = make_values(acc.dist_m, total);
  out.dist_o = make_values(acc.dist_o, total);
  out.dist_l = make_values(acc.dist_l, total);
  out.dist_h = make_values(acc.dist_h, total);
}

nlohmann::ordered_json value_json(const Value& v) {
  nlohmann::ordered_json j;
  j["value"] = static_cast<double>(v.value);
  if (!v.rational.empty()) j["rational"] = v.rational;
  return j;
}

nlohmann::ordered_json values_json(const std::vector<Value>& vs) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& v : vs) arr.push_back(value_json(v));
  return arr;
}

}  // namespace

EnumerationResult enumerate_exact(const StepDistribution& d, std::uint64_t n, std::uint64_t budget,
                                  unsigned threads) {
  const auto support = d.support_max();
  if (!support) throw SpecError("oracle: '" + d.spec() + "' has unbounded support");
  if (n == 0) throw SpecError("oracle: n must be >= 1");

  std::vector<std::uint64_t> values;
  for (std::uint64_t k = 1; k <= *support; ++k) {
    if (d.pmf(k) > 0.0) values.push_back(k);
  }
  const std::uint64_t s = values.size();
  std::uint64_t sequences = 1;
  for (std::uint64_t k = 0; k < n; ++k) {
    if (sequences > budget / s) {
      throw BudgetError("oracle: " + std::to_string(s) + "^" + std::to_string(n) + " sequences exceed the budget of " +
                        std::to_string(budget));
    }
    sequences *= s;
  }

  EnumerationResult out;
  out.spec = d.spec();
  out.horizon = n;
  out.support = s;
  out.max_step = *support;
  out.sequences = sequences;

  // Exact mode needs every accumulated sum (at most total weight times
  // n + max_step) to fit in 128 bits.
  const auto& rat = d.rational();
  if (rat) {
    std::uint64_t mass = 0;
    for (auto v : values) mass += rat->numerators[v - 1];
    const double bits = static_cast<double>(n) * std::log2(static_cast<double>(mass)) +
                        std::log2(static_cast<double>(n + *support + 1)) + 1.0;
    if (bits < 126.0) {
      std::vector<u128> weights;
      for (auto v : values) weights.push_back(rat->numerators[v - 1]);
      out.exact = true;
      run<u128>(values, weights, n, sequences, threads, out);
      return out;
    }
  }
  std::vector<long double> weights;
  for (auto v : values) weights.push_back(d.pmf(v));
  run<long double>(values, weights, n, sequences, threads, out);
  return out;
}

nlohmann::ordered_json to_json(const EnumerationResult& res) {
  nlohmann::ordered_json j;
  j["spec"] = res.spec;
  j["n"] = res.horizon;
  j["support"] = res.support;
  j["max_step"] = res.max_step;
  j["sequences"] = res.sequences;
  j["arithmetic"] = res.exact ? "rational" : "extended";
  j["EM"] = value_json(res.em);
  j["EO"] = value_json(res.eo);
  j["EL"] = value_json(res.el);
  j["EH"] = value_json(res.eh);
  j["EH0"] = value_json(res.eh_zero);
  j["r"] = values_json(res.r);
  j["Rhat"] = values_json(res.rhat);
  auto sizes = nlohmann::ordered_json::array();
  auto degs = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < res.size_by_root.size(); ++k) {
    auto e = value_json(res.size_by_root[k]);
    e["root"] = -static_cast<std::int64_t>(k);
    sizes.push_back(e);
    auto g = value_json(res.degree_root[k]);
    g["root"] = -static_cast<std::int64_t>(k);
    degs.push_back(g);
  }
  j["ES_root"] = sizes;
  j["ED_root"] = degs;
  j["ED_vertex"] = values_json(res.degree_positive);
  j["distributions"] = {{"M", values_json(res.dist_m)},
                        {"O", values_json(res.dist_o)},
                        {"L", values_json(res.dist_l)},
                        {"H", values_json(res.dist_h)}};
  return j;
}

}  // namespace surf::oracle
