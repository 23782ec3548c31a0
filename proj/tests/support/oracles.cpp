#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "ddpbench/dist.hpp"
#include "ddpbench/kscheck.hpp"
#include "ddpbench/protocols.hpp"

namespace ddpbench::oracle {

std::vector<bool> digits(const Real& p, unsigned l) {
  ensure_precision();
  Real v = floor(p * pow2(static_cast<long>(l)));
  std::vector<bool> d(l);
  for (unsigned j = l; j-- > 0;) {
    Real half = floor(v / 2);
    d[j] = (v - 2 * half) != 0;
    v = half;
  }
  return d;
}

bool odo_coin(TapeBits& tape, const std::vector<bool>& d) {
  // Comparing U against p digit by digit: the most significant differing
  // digit decides; scanning upward lets later digits override.
  bool x = false;
  for (std::size_t j = d.size(); j-- > 0;) {
    bool b = tape.next();
    if (b != d[j]) x = !b;
  }
  return x;
}

std::vector<bool> Coins::ostack_call(const std::vector<bool>& pattern) {
  std::vector<bool> out;
  std::size_t k = 0;
  for (std::size_t it = 0; it < u_; ++it) {
    bool b = tape_.next();
    bool p = pattern[k % pattern.size()];
    if (b != p) {
      if (out.size() < g_) out.push_back(!b);
      k = 0;
    } else {
      ++k;
    }
  }
  if (out.size() < g_) throw Unfilled{};
  return out;
}

std::vector<bool> Coins::draw(const Real& bias, std::size_t count) {
  std::vector<bool> d = digits(bias, l_);
  std::vector<bool> out;
  if (!ostack_) {
    for (std::size_t i = 0; i < count; ++i) out.push_back(odo_coin(tape_, d));
    return out;
  }
  d.resize(bias_stack_size(l_), false);
  while (out.size() < count) {
    auto c = ostack_call(d);
    for (std::size_t i = 0; i < c.size() && out.size() < count; ++i) out.push_back(c[i]);
  }
  return out;
}

std::vector<bool> Coins::draw_periodic(unsigned a_log2, std::size_t count) {
  std::size_t a = std::size_t{1} << a_log2;
  std::vector<bool> pattern(2 * a, false);
  std::fill(pattern.begin() + static_cast<std::ptrdiff_t>(a), pattern.end(), true);
  std::vector<bool> out;
  while (out.size() < count) {
    auto c = ostack_call(pattern);
    for (std::size_t i = 0; i < c.size() && out.size() < count; ++i) out.push_back(c[i]);
  }
  return out;
}

std::vector<std::int64_t> laplace(TapeBits& tape, double t, unsigned kappa, std::size_t count,
                                  Coins& coins, int periodic_from) {
  ensure_precision();
  const Real q = exp(Real(-1) / Real(t));
  const Real N = pow2(static_cast<long>(kappa)) + 1;
  const Real zero_p = (1 - q) / (1 + q - 2 * pow(q, N));
  std::vector<bool> zero = coins.draw(zero_p, count);
  std::vector<std::int64_t> mag(count, 1);
  for (unsigned i = 0; i < kappa; ++i) {
    std::vector<bool> c;
    if (periodic_from >= 0 && static_cast<int>(i) >= periodic_from)
      c = coins.draw_periodic(i - static_cast<unsigned>(periodic_from), count);
    else
      c = coins.draw(1 / (1 + exp(pow2(static_cast<long>(i)) / Real(t))), count);
    for (std::size_t j = 0; j < count; ++j)
      if (c[j]) mag[j] += std::int64_t{1} << i;
  }
  std::vector<std::int64_t> out(count);
  for (std::size_t j = 0; j < count; ++j) {
    bool s = tape.next();
    out[j] = zero[j] ? 0 : (s ? -mag[j] : mag[j]);
  }
  return out;
}

namespace {

Result gaussian(TapeBits& tape, const ProtocolParams& p, Coins& coins) {
  Result r;
  std::vector<std::int64_t> x = laplace(tape, p.t, p.kappa, p.n_prime, coins);
  // Accept with exp(-(|x| - sigma^2/t)^2 / (2 sigma^2)), scaled to integers.
  std::uint64_t c = 1, k;
  double scale;
  if (p.sigma >= 1) {
    k = static_cast<std::uint64_t>(std::llround(p.sigma));
    scale = 2 * p.sigma * p.sigma;
  } else {
    c = static_cast<std::uint64_t>(std::ceil(1 / p.sigma));
    k = 1;
    scale = 2 * p.sigma * p.sigma * double(c * c);
  }
  std::vector<std::uint64_t> u(x.size());
  std::uint64_t umax = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    std::int64_t d = static_cast<std::int64_t>(c) * std::llabs(x[j]) - static_cast<std::int64_t>(k);
    u[j] = static_cast<std::uint64_t>(d * d);
  }
  std::uint64_t top = c << p.kappa;
  std::uint64_t far = top > k ? top - k : k - top;
  umax = std::max(k * k, far * far);
  unsigned width = 0;
  while (width < 64 && (umax >> width) != 0) ++width;
  std::vector<bool> acc(x.size(), true);
  for (unsigned i = 0; i < width; ++i) {
    ensure_precision();
    std::vector<bool> coin = coins.draw(exp(-pow2(static_cast<long>(i)) / Real(scale)), x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
      if ((u[j] >> i & 1) && !coin[j]) acc[j] = false;
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!acc[j]) continue;
    ++r.accepted;
    if (r.samples.size() < p.n) r.samples.push_back(x[j]);
  }
  if (r.samples.size() < p.n) r.rejection_abort = true;
  return r;
}

Result transform(TapeBits& tape, const ProtocolParams& p) {
  Result r;
  ensure_precision();
  const std::int64_t cap = std::int64_t{1} << p.kappa;
  const Real two_l = pow2(static_cast<long>(p.l));
  for (std::size_t j = 0; j < p.n; ++j) {
    Real U = 0;
    for (unsigned i = 0; i < p.l; ++i)
      if (tape.next()) U += pow2(static_cast<long>(i));
    Real y = -log((U + 1) / two_l);
    Real m = Real(p.t) * y;
    Real base = floor(m + Real(0.5));
    Real slack = (Real(p.t) + y + 2) * 2 / two_l;
    Real frac = m - floor(m);
    std::int64_t v = static_cast<std::int64_t>(base);
    std::int64_t alt = v;
    if (abs(frac - Real(0.5)) < slack) alt = frac < Real(0.5) ? v + 1 : v - 1;
    v = std::min(v, cap);
    alt = std::min(alt, cap);
    bool s = tape.next();
    r.samples.push_back(s ? -v : v);
    r.alternative.push_back(s ? -alt : alt);
  }
  return r;
}

std::int64_t clamp_sum(std::int64_t v, unsigned kappa) {
  const std::int64_t b = std::int64_t{1} << kappa;
  return std::clamp(v, -b, b);
}

Result dng(std::uint64_t seed, const ProtocolParams& p, bool laplace_target) {
  Result r;
  const std::int64_t lim = (std::int64_t{1} << (p.kappa + 1)) - 1;
  std::vector<std::mt19937_64> rngs;
  for (unsigned i = 0; i < p.m; ++i) rngs.emplace_back(dng_party_seed(seed, i));
  const DistSpec nb = DistSpec::negative_binomial(1.0 / p.m, std::exp(-p.epsilon_used / p.Delta));
  const double sd = std::sqrt(collusion_adjust(p.sigma * p.sigma / p.m, p.collusion_fraction));
  for (std::size_t j = 0; j < p.n; ++j) {
    std::int64_t sum = 0;
    for (unsigned i = 0; i < p.m; ++i) {
      if (laplace_target) {
        auto a = static_cast<std::int64_t>(sample(nb, rngs[i]));
        auto b = static_cast<std::int64_t>(sample(nb, rngs[i]));
        if (p.dng_words_per_sample == 2)
          sum += std::min(a, lim) - std::min(b, lim);
        else
          sum += std::clamp(a - b, -lim, lim);
      } else {
        sum += std::clamp(sample_discrete_gaussian(sd, 0, rngs[i]), -lim, lim);
      }
    }
    r.samples.push_back(clamp_sum(sum, p.kappa));
  }
  if (p.with_check) {
    DistSpec target = laplace_target
                          ? DistSpec::truncated_discrete_laplace(p.t, static_cast<std::int64_t>(p.N))
                          : DistSpec::truncated_discrete_gaussian(p.sigma, static_cast<std::int64_t>(p.N));
    CheckTable table = build_table(target, p.n, static_cast<std::int64_t>(p.N), p.alpha,
                                   p.standard_ks_constant, p.ks_tie_aware);
    r.check_reject = ks_oracle(r.samples, table).reject;
  }
  return r;
}

int star_start(const ProtocolParams& p) {
  double dl = std::log2(p.Delta);
  if (p.Delta < 1 || dl != std::floor(dl)) return -1;
  return static_cast<int>(p.snap_exponent) + static_cast<int>(dl);
}

}  // namespace

Result run(const ProtocolParams& p, std::uint64_t seed) {
  TapeBits tape(RandomTape::seeded(seed, p.m));
  const bool ostack = uses_ostack(p.protocol);
  Coins coins(tape, ostack, p.l, p.g, p.u);
  try {
    switch (p.protocol) {
      case ProtocolId::kOdoLaplace:
      case ProtocolId::kOstackLaplace: {
        Result r;
        r.samples = laplace(tape, p.t, p.kappa, p.n, coins);
        return r;
      }
      case ProtocolId::kOstackLaplaceStar: {
        Result r;
        r.samples = laplace(tape, p.t, p.kappa, p.n, coins, star_start(p));
        return r;
      }
      case ProtocolId::kOdoGaussian:
      case ProtocolId::kOstackGaussian:
        return gaussian(tape, p, coins);
      case ProtocolId::kTransLaplace:
        return transform(tape, p);
      case ProtocolId::kDngLaplace:
        return dng(seed, p, true);
      case ProtocolId::kDngGaussian:
        return dng(seed, p, false);
    }
  } catch (const Unfilled&) {
    Result r;
    r.unfilled = true;
    return r;
  }
  return {};
}

bool matches(const Result& r, const std::vector<std::int64_t>& mpc) {
  if (mpc.size() != r.samples.size()) return false;
  for (std::size_t j = 0; j < mpc.size(); ++j) {
    if (mpc[j] == r.samples[j]) continue;
    if (!r.alternative.empty() && mpc[j] == r.alternative[j]) continue;
    return false;
  }
  return true;
}

}  // namespace ddpbench::oracle
