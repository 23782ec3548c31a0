#include "ddpbench/coins.hpp"

#include <cmath>
#include <limits>

#include "ddpbench/gadgets.hpp"

namespace ddpbench {

BiasSpec BiasSpec::from_real(const Real& p, unsigned l) {
  ensure_precision();
  if (p < 0 || p > 1) throw ConfigError("bias outside [0,1]");
  if (p >= 1) return BiasSpec{std::vector<bool>(l, true)};
  return BiasSpec{binary_expansion(p, l)};
}

Real BiasSpec::value() const {
  ensure_precision();
  Real v = 0;
  for (unsigned j = 0; j < bits.size(); ++j)
    if (bits[j]) v += pow2(-static_cast<long>(j) - 1);
  return v;
}

double BiasSpec::value_double() const { return static_cast<double>(value()); }

SecretBit odo_coin(Engine& e, const BiasSpec& bias) {
  if (bias.bits.empty()) throw ConfigError("bias expansion must have l >= 1");
  SecretBit x = e.constant(false);
  for (std::size_t j = bias.bits.size(); j-- > 0;) {
    SecretBit b = e.urbit();
    SecretBit t = e.xor_const(b, bias.bits[j]);
    x = mux(e, t, e.not_(b), x);
  }
  return x;
}

std::size_t bias_stack_size(std::size_t l) {
  std::size_t r = 3;
  while (r < l) r = 2 * r + 3;  // 3(2^(i+1)-1) = 2*3(2^i-1) + 3
  return r;
}

// ---------------------------------------------------------------------------
// BiasStack

BiasStack::PBit BiasStack::p_and(const PBit& a, const PBit& b) {
  if (a.pub) return a.val ? b : PBit{};
  if (b.pub) return b.val ? a : PBit{};
  return PBit{false, false, e_.and_(a.s, b.s)};
}

BiasStack::PBit BiasStack::p_xor(const PBit& a, const PBit& b) {
  if (a.pub && b.pub) return PBit{true, a.val != b.val, {}};
  if (a.pub) return PBit{false, false, e_.xor_const(b.s, a.val)};
  if (b.pub) return PBit{false, false, e_.xor_const(a.s, b.val)};
  return PBit{false, false, e_.xor_(a.s, b.s)};
}

BiasStack::PBit BiasStack::p_not(const PBit& a) {
  if (a.pub) return PBit{true, !a.val, {}};
  return PBit{false, false, e_.not_(a.s)};
}

BiasStack::PBit BiasStack::p_mux(const PBit& c, const PBit& a, const PBit& b) {
  return p_xor(b, p_and(c, p_xor(a, b)));
}

SecretBit BiasStack::p_secret(const PBit& a) {
  return a.pub ? e_.constant(a.val) : a.s;
}

BiasStack::BiasStack(Engine& e, const BiasSpec& bias, std::size_t cycle)
    : e_(e), digits_(bias.bits) {
  if (cycle < digits_.size()) throw ConfigError("cycle shorter than expansion");
  if (cycle == 0) throw ConfigError("empty bias stack");
  // Pick the two-level shape with the lowest steady-state AND count.
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t sa = 1; sa <= cycle; ++sa) {
    std::size_t sc = (cycle + sa - 1) / sa;
    if (sa > sc) break;
    double cost = sa == 1 ? double(sc) - 1
                          : double(sa) + double(sc) + double(sa - 1) / double(sc);
    if (cost < best) {
      best = cost;
      blocks_ = sa;
      block_size_ = sc;
    }
  }
  a_.assign(blocks_, PBit{});
  c_.assign(block_size_, PBit{});
  a_[0] = PBit{true, true, {}};
  c_[0] = PBit{true, true, {}};
  f_ = PBit{true, true, {}};
}

bool BiasStack::digit(std::size_t k) const {
  return k < digits_.size() && digits_[k];
}

void BiasStack::set_onehot(std::vector<PBit>& v, const PBit& cond, std::size_t k) {
  // v = cond ? e_k : v, with the last entry derived from the others.
  std::size_t last = v.size() - 1;
  PBit sum{true, false, {}};
  for (std::size_t i = 0; i < last; ++i) {
    v[i] = p_mux(cond, PBit{true, i == k, {}}, v[i]);
    sum = p_xor(sum, v[i]);
  }
  v[last] = p_not(sum);
}

void BiasStack::advance_block() {
  if (blocks_ == 1) return;
  std::size_t nb = (t_ / block_size_) % blocks_;
  if (nb == cur_) return;
  set_onehot(a_, f_, cur_);
  f_ = PBit{true, false, {}};
  cur_ = nb;
}

SecretBit BiasStack::rpop() {
  advance_block();
  const std::size_t L = cycle();
  auto read_block = [&](std::size_t a) {
    PBit x{true, false, {}};
    for (std::size_t c = 0; c < block_size_; ++c) {
      std::size_t rho = a * block_size_ + c;
      std::size_t k = (t_ + L - rho % L) % L;
      if (digit(k)) x = p_xor(x, c_[c]);
    }
    return x;
  };
  PBit r;
  if (blocks_ == 1) {
    r = read_block(0);
  } else {
    std::vector<PBit> xs(blocks_);
    for (std::size_t a = 0; a < blocks_; ++a) xs[a] = read_block(a);
    std::size_t last = blocks_ - 1;
    PBit r0 = xs[last];
    for (std::size_t a = 0; a < last; ++a)
      r0 = p_xor(r0, p_and(a_[a], p_xor(xs[a], xs[last])));
    r = p_mux(f_, xs[cur_], r0);
  }
  ++t_;
  return p_secret(r);
}

void BiasStack::creset(const SecretBit& cond) {
  advance_block();
  PBit c{false, false, cond};
  set_onehot(c_, c, t_ % block_size_);
  if (blocks_ > 1) f_ = p_xor(p_xor(f_, c), p_and(f_, c));
}

// ---------------------------------------------------------------------------
// PeriodicBiasSource

PeriodicBiasSource::PeriodicBiasSource(Engine& e, unsigned a_log2)
    : e_(e), a_log2_(a_log2) {
  if (a_log2 > 40) throw ConfigError("period too long");
}

std::vector<bool> PeriodicBiasSource::pattern(unsigned a_log2) {
  std::size_t a = std::size_t{1} << a_log2;
  std::vector<bool> p(2 * a, false);
  for (std::size_t k = a; k < 2 * a; ++k) p[k] = true;
  return p;
}

void PeriodicBiasSource::advance() {
  const std::uint64_t mask = (std::uint64_t{2} << a_log2_) - 1;
  if (fresh_)
    public_elapsed_ = (public_elapsed_ + 1) & mask;
  else
    elapsed_ = add_const(e_, elapsed_, 1);
  pending_ = false;
}

SecretBit PeriodicBiasSource::rpop() {
  if (pending_) advance();
  pending_ = true;
  if (fresh_) return e_.constant((public_elapsed_ >> a_log2_) & 1);
  return elapsed_[a_log2_];
}

void PeriodicBiasSource::creset(const SecretBit& cond) {
  if (pending_) advance();
  SecretBit keep = e_.not_(cond);
  if (fresh_) {
    elapsed_ = SecretWord(a_log2_ + 1);
    for (unsigned i = 0; i <= a_log2_; ++i)
      elapsed_[i] = (public_elapsed_ >> i & 1) ? keep : e_.constant(false);
    fresh_ = false;
    return;
  }
  for (unsigned i = 0; i <= a_log2_; ++i) elapsed_[i] = e_.and_(keep, elapsed_[i]);
}

// ---------------------------------------------------------------------------
// CoinStack

CoinStack::CoinStack(Engine& e, std::size_t capacity, OverflowPolicy policy)
    : e_(e), g_(capacity), policy_(policy) {
  if (capacity < 2 || (capacity & (capacity - 1)) != 0)
    throw ConfigError("coin stack capacity must be a power of two >= 2");
  unsigned log_g = 0;
  while ((std::size_t{1} << log_g) < capacity) ++log_g;
  // Levels 0..K; top blocks of 2^(K+1). Steady cost ~ 3 + 2K + g/2^(K+1).
  unsigned best_k = 0;
  double best = std::numeric_limits<double>::infinity();
  for (unsigned k = 0; k + 1 <= log_g; ++k) {
    double cost = 3.0 + 2.0 * k + double(capacity >> (k + 1));
    if (cost < best) {
      best = cost;
      best_k = k;
    }
  }
  for (unsigned j = 0; j <= best_k; ++j) {
    Level lv;
    lv.block = std::size_t{1} << j;
    lv.data.assign(3 * lv.block, e_.constant(false));
    for (auto& o : lv.o) o = e_.constant(false);
    levels_.push_back(std::move(lv));
  }
  top_block_ = std::size_t{2} << best_k;
  top_slots_ = capacity / top_block_;
  top_.assign(capacity, e_.constant(false));
  top_o_.assign(top_slots_, e_.constant(false));
  overflow_ = e_.constant(false);
}

void CoinStack::receive(Level& lv, const SecretBit& cond,
                        const std::vector<SecretBit>& blk) {
  const std::size_t s = lv.block;
  const unsigned b = lv.bound;
  if (b > 2) throw ShapeError("coin stack level overfilled");
  if (b == 0) {
    for (std::size_t i = 0; i < s; ++i) lv.data[i] = blk[i];
    lv.o[0] = cond;
    lv.bound = 1;
    return;
  }
  // Position one-hot from the thermometer: P_k = o[k-1] ^ o[k], o[b] = 0.
  SecretBit pos[3];
  for (unsigned k = 1; k <= b; ++k)
    pos[k] = (k == b) ? lv.o[k - 1] : e_.xor_(lv.o[k - 1], lv.o[k]);
  for (std::size_t i = 0; i < s; ++i) {
    SecretBit rest = blk[i];
    for (unsigned k = 1; k <= b; ++k) {
      SecretBit m = e_.and_(pos[k], blk[i]);
      lv.data[k * s + i] = e_.xor_(lv.data[k * s + i], m);
      rest = e_.xor_(rest, m);
    }
    lv.data[i] = e_.xor_(lv.data[i], rest);
  }
  SecretBit rest = cond;
  for (unsigned k = 1; k <= b; ++k) {
    SecretBit m = e_.and_(cond, pos[k]);
    lv.o[k] = e_.xor_(lv.o[k], m);
    rest = e_.xor_(rest, m);
  }
  lv.o[0] = e_.xor_(lv.o[0], rest);
  lv.bound = b + 1;
}

bool CoinStack::flush(Level& lv, SecretBit& cond, std::vector<SecretBit>& out) {
  if (lv.bound < 2) return false;
  const std::size_t s = lv.block;
  SecretBit f = lv.o[1];
  out.assign(2 * s, SecretBit{});
  for (std::size_t i = 0; i < s; ++i) {
    SecretBit m = e_.and_(f, lv.data[i]);
    out[i] = m;
    out[s + i] = lv.data[s + i];  // non-zero only when f = 1
    SecretBit nb = e_.xor_(lv.data[i], m);
    if (lv.bound == 3) nb = e_.xor_(nb, lv.data[2 * s + i]);
    lv.data[i] = nb;
    lv.data[s + i] = e_.constant(false);
    lv.data[2 * s + i] = e_.constant(false);
  }
  SecretBit o0 = e_.xor_(lv.o[0], f);
  if (lv.bound == 3) o0 = e_.xor_(o0, lv.o[2]);
  lv.o[0] = o0;
  lv.o[1] = e_.constant(false);
  lv.o[2] = e_.constant(false);
  lv.bound = 1;
  cond = f;
  return true;
}

void CoinStack::receive_top(const SecretBit& cond, const std::vector<SecretBit>& blk) {
  const std::size_t S = top_block_, P = top_slots_, b = top_bound_;
  if (b == 0) {
    for (std::size_t i = 0; i < S; ++i) top_[i] = blk[i];
    top_o_[0] = cond;
    top_bound_ = 1;
    return;
  }
  const bool may_be_full = (b == P);
  const std::size_t hi = may_be_full ? P - 1 : b;
  std::vector<SecretBit> pos(hi + 1);
  for (std::size_t k = 0; k <= hi; ++k) {
    SecretBit prev = k == 0 ? e_.constant(true) : top_o_[k - 1];
    pos[k] = (k == b) ? prev : e_.xor_(prev, top_o_[k]);
  }
  if (may_be_full) pos[0] = e_.not_(top_o_[0]);
  for (std::size_t i = 0; i < S; ++i) {
    SecretBit rest = blk[i];
    for (std::size_t k = 1; k <= hi; ++k) {
      SecretBit m = e_.and_(pos[k], blk[i]);
      top_[k * S + i] = e_.xor_(top_[k * S + i], m);
      rest = e_.xor_(rest, m);
    }
    SecretBit m0 = may_be_full ? e_.and_(pos[0], blk[i]) : rest;
    top_[i] = e_.xor_(top_[i], m0);
  }
  SecretBit rest = cond;
  for (std::size_t k = 1; k <= hi; ++k) {
    SecretBit m = e_.and_(cond, pos[k]);
    top_o_[k] = e_.xor_(top_o_[k], m);
    rest = e_.xor_(rest, m);
  }
  SecretBit m0 = may_be_full ? e_.and_(cond, pos[0]) : rest;
  top_o_[0] = e_.xor_(top_o_[0], m0);
  if (may_be_full && policy_ == OverflowPolicy::kAbort) {
    overflow_ = e_.or_(overflow_, e_.and_(cond, top_o_[P - 1]));
    overflow_possible_ = true;
  }
  top_bound_ = std::min(P, b + 1);
}

void CoinStack::cpush(const SecretBit& cond, const SecretBit& bit) {
  ++ops_;
  std::vector<SecretBit> blk{e_.and_(cond, bit)};
  receive(levels_[0], cond, blk);
  const std::size_t K = levels_.size() - 1;
  for (std::size_t j = K + 1; j-- > 0;) {
    if (ops_ % (std::uint64_t{2} << j) != 0) continue;
    SecretBit f;
    std::vector<SecretBit> out;
    if (!flush(levels_[j], f, out)) continue;
    if (j == K)
      receive_top(f, out);
    else
      receive(levels_[j + 1], f, out);
  }
}

namespace {

// Binary count from a thermometer code with `bound` possibly-set entries.
SecretWord thermometer_count(Engine& e, const std::vector<SecretBit>& therm,
                             std::size_t bound, unsigned width) {
  SecretWord out = e.constant_word(0, width);
  for (std::size_t k = 1; k <= bound; ++k) {
    // one-hot "count == k" = t[k-1] ^ t[k]
    SecretBit h = (k == bound) ? therm[k - 1] : e.xor_(therm[k - 1], therm[k]);
    for (unsigned i = 0; i < width; ++i)
      if ((k >> i) & 1) out[i] = e.xor_(out[i], h);
  }
  return out;
}

// out[x] = in[x - s] if bit else in[x], out truncated to `limit`.
std::vector<SecretBit> shift_up(Engine& e, const std::vector<SecretBit>& in,
                                const SecretBit& bit, std::size_t s,
                                std::size_t limit) {
  std::size_t n = std::min(in.size() + s, limit);
  std::vector<SecretBit> out(n);
  for (std::size_t x = 0; x < n; ++x) {
    bool has_hi = x >= s && x - s < in.size();
    bool has_lo = x < in.size();
    if (has_hi && has_lo)
      out[x] = mux(e, bit, in[x - s], in[x]);
    else if (has_hi)
      out[x] = e.and_(bit, in[x - s]);
    else if (has_lo)
      out[x] = e.and_(e.not_(bit), in[x]);
    else
      out[x] = e.constant(false);
  }
  return out;
}

unsigned bits_for(std::uint64_t v) {
  unsigned n = 1;
  while ((v >> n) != 0) ++n;
  return n;
}

}  // namespace

SecretWord CoinStack::stored_count() {
  const unsigned W = bits_for(4 * g_) + 1;
  SecretWord total;
  bool have = false;
  auto accumulate = [&](const SecretWord& term) {
    total = have ? add(e_, total, term) : term;
    have = true;
  };
  for (std::size_t j = 0; j < levels_.size(); ++j) {
    const Level& lv = levels_[j];
    if (lv.bound == 0) continue;
    std::vector<SecretBit> th(lv.o, lv.o + 3);
    SecretWord c = thermometer_count(e_, th, lv.bound, 2);
    accumulate(shift_left_public(e_, c, j, W));
  }
  if (top_bound_ > 0) {
    SecretWord c = thermometer_count(e_, top_o_, top_bound_, bits_for(top_slots_));
    unsigned shift = 0;
    while ((std::size_t{1} << shift) < top_block_) ++shift;
    accumulate(shift_left_public(e_, c, shift, W));
  }
  return have ? total : e_.constant_word(0, W);
}

std::vector<SecretBit> CoinStack::concatenated(std::size_t upto) {
  std::vector<SecretBit> acc;
  for (std::size_t j = 0; j < levels_.size(); ++j) {
    const Level& lv = levels_[j];
    const std::size_t s = lv.block;
    std::size_t limit = std::numeric_limits<std::size_t>::max();
    if (lv.bound > 0 && !acc.empty()) {
      std::vector<SecretBit> th(lv.o, lv.o + 3);
      SecretWord c = thermometer_count(e_, th, lv.bound, 2);
      acc = shift_up(e_, acc, c[0], s, limit);
      acc = shift_up(e_, acc, c[1], 2 * s, limit);
    }
    std::size_t own = std::size_t(lv.bound) * s;
    if (acc.size() < own) acc.resize(own, e_.constant(false));
    for (std::size_t i = 0; i < own; ++i) acc[i] = e_.xor_(acc[i], lv.data[i]);
  }
  if (top_bound_ > 0) {
    SecretWord c = thermometer_count(e_, top_o_, top_bound_, bits_for(top_slots_));
    for (unsigned k = 0; k < c.width(); ++k)
      acc = shift_up(e_, acc, c[k], top_block_ << k, upto);
    std::size_t own = std::min(top_bound_ * top_block_, upto);
    if (acc.size() < own) acc.resize(own, e_.constant(false));
    for (std::size_t i = 0; i < own; ++i) acc[i] = e_.xor_(acc[i], top_[i]);
  }
  acc.resize(upto, e_.constant(false));
  return acc;
}

std::vector<SecretBit> CoinStack::purge() {
  SecretWord total = stored_count();
  if (policy_ == OverflowPolicy::kAbort) {
    SecretBit over = uge_const(e_, total, g_ + 1);
    if (overflow_possible_) over = e_.or_(over, overflow_);
    if (e_.open(over)) throw AbortUnfilled("coin stack overflowed");
  }
  std::uint64_t count = 0;
  for (std::size_t i = 0; i < total.width(); ++i)
    if (e_.open(total[i])) count |= std::uint64_t{1} << i;
  count = std::min<std::uint64_t>(count, g_);
  return concatenated(count);
}

std::vector<SecretBit> CoinStack::purge_full() {
  SecretBit filled = uge_const(e_, stored_count(), g_);
  if (!e_.open(filled)) throw AbortUnfilled("fewer than g coins were pushed");
  return concatenated(g_);
}

std::vector<SecretBit> ostack_sample(Engine& e, std::size_t g, std::size_t u,
                                     BitSource& source) {
  if (u < g) throw ConfigError("push budget u must be >= g");
  CoinStack stack(e, g, OverflowPolicy::kKeepFirst);
  for (std::size_t it = 0; it < u; ++it) {
    SecretBit b = e.urbit();
    SecretBit p = source.rpop();
    SecretBit t = e.xor_(p, b);
    stack.cpush(t, e.not_(b));
    source.creset(t);
  }
  return stack.purge_full();
}

SnappedEpsilon snap_epsilon(double eps) {
  if (!(eps > 0)) throw ConfigError("epsilon must be positive");
  const double ln2 = std::log(2.0);
  unsigned i = 0;
  while (std::ldexp(ln2, -static_cast<int>(i)) > eps) ++i;
  return SnappedEpsilon{i, std::ldexp(ln2, -static_cast<int>(i))};
}

}  // namespace ddpbench
