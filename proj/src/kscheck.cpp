#include "ddpbench/kscheck.hpp"

#include <algorithm>
#include <cmath>

#include "ddpbench/errors.hpp"
#include "ddpbench/gadgets.hpp"

namespace ddpbench {

namespace {

unsigned bits_for(std::uint64_t v) {
  unsigned w = 1;
  while (w < 64 && (v >> w) != 0) ++w;
  return w;
}

bool has_real_pmf(Family f) {
  return f == Family::kDiscreteLaplace || f == Family::kDiscreteGaussian ||
         f == Family::kTruncatedDiscreteLaplace || f == Family::kTruncatedDiscreteGaussian;
}

}  // namespace

double ks_constant(double alpha, bool standard) {
  if (!(alpha > 0 && alpha < 1)) throw ConfigError("alpha must be in (0,1)");
  if (standard) return std::sqrt(-std::log(alpha / 2) / 2);
  return std::sqrt(-std::log(alpha / 2 * 0.5));
}

CheckTable build_table(const DistSpec& dist, std::uint64_t n, std::int64_t N, double alpha,
                       bool standard_constant, bool tie_aware) {
  if (N < 2) throw ConfigError("check table needs N >= 2");
  if (n < 1) throw ConfigError("check table needs n >= 1");
  if (!dist.discrete()) throw ConfigError("check table needs a discrete target");
  validate(dist);
  CheckTable t;
  t.N = N;
  t.n = n;
  t.alpha = alpha;
  t.standard_constant = standard_constant;
  t.tie_aware = tie_aware;
  t.c_alpha = ks_constant(alpha, standard_constant);
  const std::size_t L = static_cast<std::size_t>(2 * N - 1);
  t.F.resize(L);
  if (has_real_pmf(dist.family)) {
    ensure_precision();
    // Mass below -(N-1), then running sums over the table range.
    std::vector<Real> mass = pmf_real_range(dist, 1 - N, N - 1);
    Real below = 0;
    if (!(dist.N > 0 && dist.N <= N)) {
      Real inside = 0;
      for (const Real& v : mass) inside += v;
      below = (1 - inside) / 2;  // symmetric families
    }
    Real acc = below;
    for (std::size_t k = 0; k < L; ++k) {
      acc += mass[k];
      Real v = round(acc * Real(n));
      t.F[k] = static_cast<std::uint64_t>(std::min(v, Real(n)));
    }
  } else {
    for (std::size_t k = 0; k < L; ++k) {
      double c = cdf(dist, static_cast<double>(static_cast<std::int64_t>(k) + 1 - N));
      t.F[k] = static_cast<std::uint64_t>(std::llround(std::min(1.0, c) * double(n)));
    }
  }
  const double nd = double(n), Ld = double(L);
  t.threshold = static_cast<std::uint64_t>(std::llround(t.c_alpha * nd * std::sqrt((nd + Ld) / (nd * Ld))));
  return t;
}

namespace {

std::uint64_t statistic(const std::vector<std::uint64_t>& obs,
                        const std::vector<std::uint64_t>& obsm, bool tie_aware) {
  const std::size_t n = obs.size();
  std::uint64_t D = 0;
  auto dist = [](std::uint64_t a, std::uint64_t b) { return a > b ? a - b : b - a; };
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t i = k + 1;
    if (!tie_aware) {
      D = std::max(D, dist(i, obs[k]));
      continue;
    }
    bool end = k + 1 == n || obs[k] != obs[k + 1];
    bool start = k == 0 || obs[k] != obs[k - 1];
    if (end) D = std::max(D, dist(i, obs[k]));
    if (start) D = std::max(D, dist(i - 1, obsm[k]));
  }
  return D;
}

}  // namespace

SecretBit check(Engine& e, const std::vector<SecretWord>& samples, const CheckTable& table,
                CheckTrace* trace) {
  const std::size_t n = samples.size();
  if (n == 0) throw DomainError("empty batch");
  if (n != table.n) throw ShapeError("batch size differs from the table's n");
  const std::size_t w = samples[0].width();
  const std::size_t L = table.length();
  const unsigned Wo = bits_for(table.n);
  const unsigned Wc = bits_for(std::max<std::uint64_t>(table.n, table.threshold)) + 2;

  // Lookup: one-hot equality against every table index, masked public entries.
  std::vector<SecretWord> key(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (samples[i].width() != w) throw ShapeError("samples must share a width");
    SecretWord obs(Wo), obsm(Wo);
    for (unsigned b = 0; b < Wo; ++b) obs[b] = obsm[b] = e.constant(false);
    for (std::size_t k = 0; k < L; ++k) {
      const std::int64_t y = static_cast<std::int64_t>(k) + 1 - table.N;
      const std::uint64_t mask = (w >= 64) ? ~0ull : ((std::uint64_t{1} << w) - 1);
      SecretBit hit = eq_const(e, samples[i], static_cast<std::uint64_t>(y) & mask);
      const std::uint64_t f = table.F[k];
      const std::uint64_t fm = k > 0 ? table.F[k - 1] : 0;
      for (unsigned b = 0; b < Wo; ++b) {
        if ((f >> b) & 1) obs[b] = e.xor_(obs[b], hit);
        if (table.tie_aware && ((fm >> b) & 1)) obsm[b] = e.xor_(obsm[b], hit);
      }
    }
    // Sort key: obs in the high bits, obs(y-1) below it.
    if (table.tie_aware) {
      SecretWord k2(2 * Wo);
      for (unsigned b = 0; b < Wo; ++b) {
        k2[b] = obsm[b];
        k2[Wo + b] = obs[b];
      }
      key[i] = k2;
    } else {
      key[i] = obs;
    }
  }
  if (trace) {
    trace->obs.clear();
    for (const auto& k : key) trace->obs.push_back(e.reconstruct_unsigned(k) >> (table.tie_aware ? Wo : 0));
  }
  oblivious_sort(e, key, false);

  auto high = [&](const SecretWord& k) {
    if (!table.tie_aware) return k;
    SecretWord h(Wo);
    for (unsigned b = 0; b < Wo; ++b) h[b] = k[Wo + b];
    return h;
  };
  auto low = [&](const SecretWord& k) { return low_bits(k, Wo); };
  auto absdiff = [&](std::uint64_t i, const SecretWord& v) {
    SecretWord d = sub(e, e.constant_word(static_cast<std::int64_t>(i), Wc), zero_extend(e, v, Wc));
    return abs_value(e, d);
  };

  SecretWord D = e.constant_word(0, Wc);
  auto take_max = [&](const SecretWord& d) { D = mux(e, lt(e, D, d), d, D); };
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t i = k + 1;
    SecretWord o = high(key[k]);
    if (!table.tie_aware) {
      take_max(absdiff(i, o));
      continue;
    }
    SecretBit end = k + 1 == n ? e.constant(true) : e.not_(eq(e, o, high(key[k + 1])));
    SecretBit start = k == 0 ? e.constant(true) : e.not_(eq(e, o, high(key[k - 1])));
    take_max(and_bit(e, end, absdiff(i, o)));
    take_max(and_bit(e, start, absdiff(i - 1, low(key[k]))));
  }
  if (trace) {
    trace->sorted.clear();
    for (const auto& k : key) trace->sorted.push_back(e.reconstruct_unsigned(high(k)));
    trace->D = e.reconstruct_unsigned(D);
  }
  return le(e, e.constant_word(static_cast<std::int64_t>(table.threshold), Wc), D);
}

KsResult ks_oracle(const std::vector<std::int64_t>& samples, const CheckTable& table) {
  if (samples.empty()) throw DomainError("empty batch");
  std::vector<std::pair<std::uint64_t, std::uint64_t>> v;
  v.reserve(samples.size());
  for (std::int64_t y : samples) {
    if (y <= -table.N || y >= table.N) throw RangeError("sample outside (-N, N)");
    v.emplace_back(table.at(y), table.tie_aware ? table.below(y) : 0);
  }
  std::sort(v.begin(), v.end());
  std::vector<std::uint64_t> obs, obsm;
  for (auto& [a, b] : v) {
    obs.push_back(a);
    obsm.push_back(b);
  }
  KsResult r;
  std::uint64_t D = statistic(obs, obsm, table.tie_aware);
  r.statistic = double(D);
  r.threshold = double(table.threshold);
  r.reject = D >= table.threshold;
  return r;
}

KsResult ks_oracle(const std::vector<double>& samples, const DistSpec& dist, double alpha) {
  if (samples.empty()) throw DomainError("empty batch");
  std::vector<double> s(samples);
  std::sort(s.begin(), s.end());
  const double n = double(s.size());
  double D = 0;
  const bool disc = dist.discrete();
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;
    double F = cdf(dist, s[i]);
    double Fm = disc ? cdf(dist, s[i] - 1) : F;
    D = std::max(D, std::fabs(double(j) / n - F));
    D = std::max(D, std::fabs(double(i) / n - Fm));
    i = j;
  }
  KsResult r;
  r.statistic = D;
  r.threshold = ks_constant(alpha, true) / std::sqrt(n);
  r.reject = D > r.threshold;
  return r;
}

}  // namespace ddpbench
