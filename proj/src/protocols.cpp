#include "ddpbench/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ddpbench/dist.hpp"
#include "ddpbench/errors.hpp"
#include "ddpbench/gadgets.hpp"
#include "ddpbench/kscheck.hpp"

namespace ddpbench {

namespace {

unsigned bits_for(std::uint64_t v) {
  unsigned w = 1;
  while (w < 64 && (v >> w) != 0) ++w;
  return w;
}

std::vector<bool> const_bits(std::uint64_t v, unsigned width) {
  std::vector<bool> b(width);
  for (unsigned i = 0; i < width && i < 64; ++i) b[i] = (v >> i) & 1;
  return b;
}

SecretWord bit_word(const SecretBit& b) {
  SecretWord w(1);
  w[0] = b;
  return w;
}

// Clamp a signed word to [-bound, bound] and keep `width` bits.
SecretWord clamp_symmetric(Engine& e, const SecretWord& x, std::uint64_t bound, unsigned width) {
  const unsigned w = static_cast<unsigned>(x.width());
  SecretWord hi = e.constant_word(static_cast<std::int64_t>(bound), w);
  SecretWord lo = e.constant_word(-static_cast<std::int64_t>(bound), w);
  SecretBit over = lt(e, hi, x);
  SecretBit under = lt(e, x, lo);
  SecretWord y = mux(e, over, hi, x);
  y = mux(e, under, lo, y);
  return low_bits(y, width);
}

int periodic_start(const ProtocolParams& p) {
  double dl = std::log2(p.Delta);
  if (p.Delta < 1 || dl != std::floor(dl)) return -1;
  return static_cast<int>(p.snap_exponent) + static_cast<int>(dl);
}

}  // namespace

// --- Coins ----------------------------------------------------------------

CoinFactory::CoinFactory(Engine& e, CoinSourceKind kind, unsigned l, std::size_t g,
                         std::size_t u)
    : e_(e), kind_(kind), l_(l), g_(g), u_(u) {
  if (l == 0) throw ConfigError("bias length must be >= 1");
  if (kind == CoinSourceKind::kOstack && (g == 0 || u < g))
    throw ConfigError("Ostack coins need 0 < g <= u");
}

std::vector<SecretBit> CoinFactory::run_ostack(BitSource& src) {
  ++calls_;
  return ostack_sample(e_, g_, u_, src);
}

std::vector<SecretBit> CoinFactory::draw(const Real& bias, std::size_t count) {
  BiasSpec spec = BiasSpec::from_real(bias, l_);
  std::vector<SecretBit> out;
  out.reserve(count);
  if (kind_ == CoinSourceKind::kOdo) {
    for (std::size_t i = 0; i < count; ++i) out.push_back(odo_coin(e_, spec));
    return out;
  }
  const std::size_t cycle = bias_stack_size(l_);
  while (out.size() < count) {
    BiasStack src(e_, spec, cycle);
    auto coins = run_ostack(src);
    std::size_t take = std::min(coins.size(), count - out.size());
    out.insert(out.end(), coins.begin(), coins.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return out;
}

std::vector<SecretBit> CoinFactory::draw_periodic(unsigned a_log2, std::size_t count) {
  if (kind_ != CoinSourceKind::kOstack) throw ConfigError("periodic coins need Ostack");
  std::vector<SecretBit> out;
  out.reserve(count);
  while (out.size() < count) {
    PeriodicBiasSource src(e_, a_log2);
    auto coins = run_ostack(src);
    std::size_t take = std::min(coins.size(), count - out.size());
    out.insert(out.end(), coins.begin(), coins.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return out;
}

// --- Geometric and Laplace ----------------------------------------------------

std::vector<SecretWord> geometric_bits(Engine& e, double t, unsigned kappa, std::size_t count,
                                       CoinFactory& coins, int periodic_from) {
  if (!(t > 0)) throw ConfigError("scale t must be positive");
  std::vector<SecretWord> out(count, SecretWord(kappa));
  (void)e;
  for (unsigned i = 0; i < kappa; ++i) {
    std::vector<SecretBit> c;
    if (periodic_from >= 0 && static_cast<int>(i) >= periodic_from)
      c = coins.draw_periodic(i - static_cast<unsigned>(periodic_from), count);
    else
      c = coins.draw(geometric_bit_bias(i, t), count);
    for (std::size_t j = 0; j < count; ++j) out[j][i] = c[j];
  }
  return out;
}

SecretWord geometric_bits(Engine& e, double t, unsigned kappa, CoinFactory& coins) {
  return geometric_bits(e, t, kappa, 1, coins)[0];
}

LaplaceDraws laplace_draws(Engine& e, double t, unsigned kappa, std::size_t count,
                           CoinFactory& coins, int periodic_from) {
  const std::uint64_t N = (std::uint64_t{1} << kappa) + 1;
  const unsigned w = kappa + 2;
  std::vector<SecretBit> zero = coins.draw(laplace_zero_bias(t, N), count);
  std::vector<SecretWord> geo = geometric_bits(e, t, kappa, count, coins, periodic_from);
  std::vector<SecretBit> sign(count);
  for (auto& s : sign) s = e.urbit();
  LaplaceDraws d;
  d.values.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    SecretWord mag = add_const(e, zero_extend(e, geo[j], w), 1);
    SecretWord v = cond_negate(e, mag, sign[j]);
    d.values.push_back(and_bit(e, e.not_(zero[j]), v));
  }
  return d;
}

// --- Rejection ------------------------------------------------------------

std::vector<SecretBit> bern_exp(Engine& e, const std::vector<SecretWord>& u, double r,
                                CoinFactory& coins) {
  if (!(r > 0)) throw ConfigError("bern_exp scale must be positive");
  if (u.empty()) return {};
  const std::size_t w = u[0].width();
  for (const auto& x : u)
    if (x.width() != w) throw ShapeError("bern_exp words must share a width");
  std::vector<SecretBit> out(u.size(), e.constant(true));
  std::vector<bool> first(u.size(), true);
  ensure_precision();
  for (std::size_t i = 0; i < w; ++i) {
    Real bias = exp(-pow2(static_cast<long>(i)) / Real(r));
    std::vector<SecretBit> c = coins.draw(bias, u.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
      // Factor is 1 unless u_i = 1 and the coin is 0.
      SecretBit fail = e.and_(u[j][i], e.not_(c[j]));
      SecretBit factor = e.not_(fail);
      out[j] = first[j] ? factor : e.and_(out[j], factor);
      first[j] = false;
    }
  }
  return out;
}

SecretBit bern_exp(Engine& e, const SecretWord& u, double r, CoinFactory& coins) {
  return bern_exp(e, std::vector<SecretWord>{u}, r, coins)[0];
}

namespace {

struct Compacted {
  std::vector<SecretWord> values;
  SecretWord dropped;  // count of keep = 0 entries
};

Compacted compact_impl(Engine& e, const std::vector<SecretWord>& values,
                       const std::vector<SecretBit>& keep, std::size_t out) {
  const std::size_t n = values.size();
  if (keep.size() != n) throw ShapeError("compact: keep/value length mismatch");
  if (out > n) throw ShapeError("compact: output longer than input");
  const unsigned W = bits_for(n);
  // Exclusive prefix count of dropped entries.
  std::vector<SecretWord> off(n);
  SecretWord run = e.constant_word(0, W);
  for (std::size_t j = 0; j < n; ++j) {
    off[j] = run;
    run = add(e, run, zero_extend(e, bit_word(e.not_(keep[j])), W));
  }
  std::vector<SecretWord> val(values);
  std::vector<SecretBit> valid(keep);
  for (unsigned b = 0; b < W; ++b) {
    const std::size_t s = std::size_t{1} << b;
    if (s >= n) break;
    std::vector<SecretBit> mv(n);
    for (std::size_t i = 0; i < n; ++i) mv[i] = e.and_(valid[i], off[i][b]);
    for (std::size_t i = 0; i < n; ++i) {
      SecretBit stay = e.and_(valid[i], e.not_(mv[i]));
      if (i + s < n) {
        const SecretBit& recv = mv[i + s];
        val[i] = mux(e, recv, val[i + s], val[i]);
        SecretWord rest_src(W - b - 1), rest_dst(W - b - 1);
        for (unsigned k = b + 1; k < W; ++k) {
          rest_src[k - b - 1] = off[i + s][k];
          rest_dst[k - b - 1] = off[i][k];
        }
        if (rest_src.width() > 0) {
          SecretWord r = mux(e, recv, rest_src, rest_dst);
          for (unsigned k = b + 1; k < W; ++k) off[i][k] = r[k - b - 1];
        }
        valid[i] = e.xor_(recv, stay);
      } else {
        valid[i] = stay;
      }
    }
  }
  Compacted c;
  c.values.assign(val.begin(), val.begin() + static_cast<std::ptrdiff_t>(out));
  c.dropped = run;
  return c;
}

}  // namespace

std::vector<SecretWord> compact(Engine& e, const std::vector<SecretWord>& values,
                                const std::vector<SecretBit>& keep, std::size_t out) {
  return compact_impl(e, values, keep, out).values;
}

namespace {

SecretBatch gaussian_common(Engine& e, const ProtocolParams& p, CoinFactory& coins) {
  if (p.n_prime < p.n) throw ConfigError("n' must be >= n");
  const unsigned kappa = p.kappa;
  LaplaceDraws x = laplace_draws(e, p.t, kappa, p.n_prime, coins);
  RejectionGeometry rg = rejection_geometry(p.sigma, kappa);
  const std::uint64_t top = rg.c << kappa;
  const unsigned wa = bits_for(top) + 1;
  const std::uint64_t dmax = std::max(rg.k, top > rg.k ? top - rg.k : rg.k - top);
  const unsigned wd = bits_for(dmax);
  std::vector<SecretWord> u(p.n_prime);
  for (std::size_t j = 0; j < p.n_prime; ++j) {
    SecretWord a = zero_extend(e, low_bits(abs_value(e, x.values[j]), kappa + 1), wa);
    if (rg.c != 1) a = mul_const_unsigned(e, a, const_bits(rg.c, bits_for(rg.c)), wa);
    SecretWord d = sub(e, zero_extend(e, a, wa + 1),
                       e.constant_word(static_cast<std::int64_t>(rg.k), wa + 1));
    SecretWord ad = low_bits(abs_value(e, d), wd);
    u[j] = mul_unsigned(e, ad, ad, rg.width);
  }
  std::vector<SecretBit> acc = bern_exp(e, u, rg.r, coins);
  Compacted c = compact_impl(e, x.values, acc, p.n);
  // Reveal only whether at least n proposals were accepted.
  SecretBit short_of_n = uge_const(e, c.dropped, p.n_prime - p.n + 1);
  SecretBatch out;
  out.proposals = p.n_prime;
  std::uint64_t dropped = e.reconstruct_unsigned(c.dropped);
  out.accepted = p.n_prime - dropped;
  if (e.open(short_of_n)) throw AbortRejection("fewer than n proposals accepted");
  out.words = std::move(c.values);
  return out;
}

}  // namespace

// --- Protocols ------------------------------------------------------------------

SecretBatch odo_laplace(Engine& e, const ProtocolParams& p) {
  CoinFactory coins(e, CoinSourceKind::kOdo, p.l);
  SecretBatch b;
  b.words = laplace_draws(e, p.t, p.kappa, p.n, coins).values;
  return b;
}

SecretBatch ostack_laplace(Engine& e, const ProtocolParams& p) {
  CoinFactory coins(e, CoinSourceKind::kOstack, p.l, p.g, p.u);
  SecretBatch b;
  b.words = laplace_draws(e, p.t, p.kappa, p.n, coins).values;
  return b;
}

SecretBatch ostack_laplace_star(Engine& e, const ProtocolParams& p) {
  CoinFactory coins(e, CoinSourceKind::kOstack, p.l, p.g, p.u);
  SecretBatch b;
  b.words = laplace_draws(e, p.t, p.kappa, p.n, coins, periodic_start(p)).values;
  return b;
}

SecretBatch odo_gaussian(Engine& e, const ProtocolParams& p) {
  CoinFactory coins(e, CoinSourceKind::kOdo, p.l);
  return gaussian_common(e, p, coins);
}

SecretBatch ostack_gaussian(Engine& e, const ProtocolParams& p) {
  CoinFactory coins(e, CoinSourceKind::kOstack, p.l, p.g, p.u);
  return gaussian_common(e, p, coins);
}

SecretBatch transform_laplace(Engine& e, const ProtocolParams& p) {
  const unsigned l = p.l, kappa = p.kappa, w = kappa + 2;
  const std::uint64_t cap = std::uint64_t{1} << kappa;
  ensure_precision();
  // round(t * 2^l) as an unsigned constant.
  Real tr = round(Real(p.t) * pow2(static_cast<long>(l)));
  std::vector<bool> tbits = fixed_bits(tr, 0, static_cast<unsigned>(log2_of(tr + 1)) + 2);
  while (!tbits.empty() && !tbits.back()) tbits.pop_back();
  SecretBatch b;
  b.words.reserve(p.n);
  for (std::size_t j = 0; j < p.n; ++j) {
    // u = (U + 1) / 2^l in (0, 1].
    SecretWord U(l);
    for (unsigned i = 0; i < l; ++i) U[i] = e.urbit();
    FixedPoint u;
    u.integer_bits = 1;
    u.fraction_bits = l;
    u.word = add_const(e, zero_extend(e, U, l + 1), 1);
    FixedPoint ln = fix_ln(e, u, l);
    // y = -ln u >= 0; magnitude = round(t * y) from 2l fraction bits.
    SecretWord y = neg(e, ln.word);
    const std::size_t yw = y.width() - 1;  // drop the sign bit
    const std::size_t pw = yw + tbits.size();
    SecretWord prod = mul_const_unsigned(e, low_bits(y, yw), tbits, pw);
    std::vector<bool> half(2 * l);
    half[2 * l - 1] = true;
    prod = add_const(e, prod, half);
    SecretWord ip(pw - 2 * l);
    for (std::size_t i = 0; i < ip.width(); ++i) ip[i] = prod[2 * l + i];
    SecretWord ipx = zero_extend(e, ip, std::max<std::size_t>(ip.width(), w) + 1);
    SecretBit over = uge_const(e, ipx, cap + 1);
    SecretWord mag = mux(e, over, e.constant_word(static_cast<std::int64_t>(cap), w),
                         zero_extend(e, low_bits(ipx, std::min<std::size_t>(ipx.width(), w)), w));
    SecretBit s = e.urbit();
    b.words.push_back(cond_negate(e, mag, s));
  }
  return b;
}

// --- Distributed generation -------------------------------------------------------

std::uint64_t dng_party_seed(std::uint64_t tape_seed, unsigned party) {
  std::seed_seq seq{static_cast<std::uint32_t>(tape_seed), static_cast<std::uint32_t>(tape_seed >> 32),
                    party, 0xd46u};
  std::uint64_t out[1];
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  out[0] = (std::uint64_t{words[0]} << 32) | words[1];
  return out[0];
}

std::vector<std::int64_t> dng_local_words(DngTarget target, const ProtocolParams& p,
                                          std::mt19937_64& rng) {
  const std::int64_t lim = (std::int64_t{1} << (p.kappa + 1)) - 1;
  auto clip = [&](std::int64_t v) { return std::clamp(v, -lim, lim); };
  if (target == DngTarget::kDiscreteLaplace) {
    DistSpec nb = DistSpec::negative_binomial(1.0 / p.m, std::exp(-p.epsilon_used / p.Delta));
    auto y1 = static_cast<std::int64_t>(sample(nb, rng));
    auto y2 = static_cast<std::int64_t>(sample(nb, rng));
    if (p.dng_words_per_sample == 2) return {std::min(y1, lim), std::min(y2, lim)};
    return {clip(y1 - y2)};
  }
  double var = collusion_adjust(p.sigma * p.sigma / p.m, p.collusion_fraction);
  return {clip(sample_discrete_gaussian(std::sqrt(var), 0, rng))};
}

SecretBatch dng_sample(Engine& e, DngTarget target, const ProtocolParams& p) {
  if (p.dng_words_per_sample != 1 &&
      !(p.dng_words_per_sample == 2 && target == DngTarget::kDiscreteLaplace))
    throw ConfigError("unsupported partials-per-sample setting");
  const unsigned m = e.parties();
  if (m != p.m) throw ConfigError("engine party count differs from params.m");
  const unsigned w = p.kappa + 2;
  const unsigned ws = w + bits_for(m);
  const std::uint64_t bound = std::uint64_t{1} << p.kappa;
  std::vector<std::mt19937_64> rngs;
  for (unsigned i = 0; i < m; ++i) rngs.emplace_back(dng_party_seed(e.tape().seed(), i));
  SecretBatch b;
  b.words.reserve(p.n);
  for (std::size_t j = 0; j < p.n; ++j) {
    SecretWord sum = e.constant_word(0, ws);
    for (unsigned i = 0; i < m; ++i) {
      auto vals = dng_local_words(target, p, rngs[i]);
      SecretWord a = sign_extend(e.input_secret_word(i, vals[0], w), ws);
      sum = add(e, sum, a);
      if (vals.size() == 2) sum = sub(e, sum, sign_extend(e.input_secret_word(i, vals[1], w), ws));
    }
    b.words.push_back(clamp_symmetric(e, sum, bound, w));
  }
  if (p.with_check) {
    DistSpec target_dist =
        target == DngTarget::kDiscreteLaplace
            ? DistSpec::truncated_discrete_laplace(p.t, static_cast<std::int64_t>(p.N))
            : DistSpec::truncated_discrete_gaussian(p.sigma, static_cast<std::int64_t>(p.N));
    CheckTable table = build_table(target_dist, p.n, static_cast<std::int64_t>(p.N), p.alpha,
                                   p.standard_ks_constant, p.ks_tie_aware);
    SecretBit reject = check(e, b.words, table);
    if (e.open(reject)) throw CheckRejected("aggregated noise failed the KS check");
  }
  return b;
}

// --- Dispatch ---------------------------------------------------------------------

SecretBatch run_secret(Engine& e, const ProtocolParams& p) {
  switch (p.protocol) {
    case ProtocolId::kOdoLaplace: return odo_laplace(e, p);
    case ProtocolId::kOstackLaplace: return ostack_laplace(e, p);
    case ProtocolId::kOstackLaplaceStar: return ostack_laplace_star(e, p);
    case ProtocolId::kDngLaplace: return dng_sample(e, DngTarget::kDiscreteLaplace, p);
    case ProtocolId::kTransLaplace: return transform_laplace(e, p);
    case ProtocolId::kOdoGaussian: return odo_gaussian(e, p);
    case ProtocolId::kOstackGaussian: return ostack_gaussian(e, p);
    case ProtocolId::kDngGaussian: return dng_sample(e, DngTarget::kDiscreteGaussian, p);
  }
  throw ConfigError("unknown protocol");
}

SampleBatch run_protocol(Engine& e, const ProtocolParams& p) {
  SecretBatch s = run_secret(e, p);
  SampleBatch b;
  b.protocol = p.protocol;
  b.params = p;
  b.proposals = s.proposals;
  b.accepted = s.accepted;
  b.check_ran = p.with_check && uses_dng(p.protocol);
  b.samples.reserve(s.words.size());
  for (const auto& w : s.words) b.samples.push_back(e.reconstruct(w));
  b.ledger = e.ledger();
  return b;
}

SampleBatch run_protocol(const ProtocolParams& p, std::uint64_t seed) {
  Engine e(p.m, seed);
  return run_protocol(e, p);
}

}  // namespace ddpbench
