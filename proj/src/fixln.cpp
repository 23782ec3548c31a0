#include <cmath>
#include <map>
#include <mutex>

#include "ddpbench/gadgets.hpp"
#include "ddpbench/realmath.hpp"

namespace ddpbench {

namespace {

constexpr unsigned kGuardBits = 6;

using Poly = std::vector<Real>;  // monomial coefficients, low degree first

Real eval(const Poly& p, const Real& x) {
  Real acc = 0;
  for (std::size_t k = p.size(); k-- > 0;) acc = acc * x + p[k];
  return acc;
}

// Interpolates f at Chebyshev nodes of [0, b] and returns monomials in x.
template <typename F>
Poly chebyshev_interpolant(F f, const Real& b, unsigned degree) {
  Real pi;
  mpfr_const_pi(pi.backend().data(), MPFR_RNDN);
  const Real half = Real(1) / 2;
  unsigned n = degree + 1;
  std::vector<Real> fv(n);
  for (unsigned j = 0; j < n; ++j) {
    Real s = cos(pi * (Real(j) + half) / n);
    fv[j] = f(b * (s + 1) / 2);
  }
  std::vector<Real> c(n);
  for (unsigned k = 0; k < n; ++k) {
    Real sum = 0;
    for (unsigned j = 0; j < n; ++j)
      sum += fv[j] * cos(pi * k * (Real(j) + half) / n);
    c[k] = sum * 2 / n;
  }
  c[0] /= 2;
  // T_k(s(x)) with s = (2/b) x - 1, accumulated in the monomial basis.
  Real alpha = Real(2) / b;
  Poly t_prev{Real(1)}, t_cur{Real(-1), alpha}, out(n, Real(0));
  out[0] += c[0];
  if (n > 1)
    for (unsigned i = 0; i < 2; ++i) out[i] += c[1] * t_cur[i];
  for (unsigned k = 2; k < n; ++k) {
    Poly t_next(k + 1, Real(0));
    for (std::size_t i = 0; i < t_cur.size(); ++i) {
      t_next[i + 1] += 2 * alpha * t_cur[i];
      t_next[i] -= 2 * t_cur[i];
    }
    for (std::size_t i = 0; i < t_prev.size(); ++i) t_next[i] -= t_prev[i];
    for (std::size_t i = 0; i <= k; ++i) out[i] += c[k] * t_next[i];
    t_prev.swap(t_cur);
    t_cur.swap(t_next);
  }
  return out;
}

template <typename F>
Real max_error(const Poly& p, F f, const Real& b, unsigned samples) {
  Real worst = 0;
  for (unsigned i = 0; i <= samples; ++i) {
    Real x = b * i / samples;
    Real err = abs(eval(p, x) - f(x));
    if (err > worst) worst = err;
  }
  return worst;
}

struct LnTables {
  unsigned degree = 0;
  Poly lo;  // ln(1 + x), x in [0, sqrt2 - 1]
  Poly hi;  // ln(1 - x), x in [0, 1 - 1/sqrt2]
  double err_log2 = 0;
};

const LnTables& tables_for(unsigned l_f) {
  static std::mutex mu;
  static std::map<unsigned, LnTables> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(l_f);
  if (it != cache.end()) return it->second;
  ensure_precision();
  const Real sqrt2 = sqrt(Real(2));
  const Real b_lo = sqrt2 - 1, b_hi = 1 - 1 / sqrt2;
  auto f_lo = [](const Real& x) { return Real(log1p(x)); };
  auto f_hi = [](const Real& x) { return Real(log1p(-x)); };
  const Real target = pow2(-static_cast<long>(l_f) - 2);
  LnTables t;
  unsigned d = std::max(1u, static_cast<unsigned>(std::ceil(l_f / 3.5)));
  for (;; ++d) {
    t.lo = chebyshev_interpolant(f_lo, b_lo, d);
    t.hi = chebyshev_interpolant(f_hi, b_hi, d);
    unsigned samples = 16 * d + 64;
    Real e = max(max_error(t.lo, f_lo, b_lo, samples),
                 max_error(t.hi, f_hi, b_hi, samples));
    // Sampled maxima undershoot the true sup slightly; keep a 2x margin.
    if (2 * e <= target) {
      t.degree = d;
      t.err_log2 = log2_of(e);
      break;
    }
  }
  return cache.emplace(l_f, std::move(t)).first->second;
}

unsigned bit_length(std::uint64_t v) {
  unsigned n = 0;
  while (v) {
    ++n;
    v >>= 1;
  }
  return n;
}

// Word whose bit j is `bit` where c[j] is set and public 0 elsewhere.
SecretWord masked_constant(Engine& e, const SecretBit& bit,
                           const std::vector<bool>& c) {
  SecretWord w(c.size());
  for (std::size_t j = 0; j < c.size(); ++j)
    w[j] = c[j] ? bit : e.constant(false);
  return w;
}

// Per-bit selection between two public constants: free.
SecretWord select_constant(Engine& e, const SecretBit& b,
                           const std::vector<bool>& if0,
                           const std::vector<bool>& if1) {
  SecretWord w(if0.size());
  for (std::size_t j = 0; j < if0.size(); ++j) {
    if (if0[j] == if1[j])
      w[j] = e.constant(if0[j]);
    else
      w[j] = if1[j] ? b : e.not_(b);
  }
  return w;
}

}  // namespace

unsigned fix_ln_degree(unsigned l_f) { return tables_for(l_f).degree; }

double fix_ln_poly_error_log2(unsigned l_f) { return tables_for(l_f).err_log2; }

FixedPoint fix_ln(Engine& e, const FixedPoint& u, unsigned l_f) {
  const unsigned L = u.fraction_bits;
  const unsigned w = L + 1;
  if (u.integer_bits != 1 || u.word.width() != w)
    throw ShapeError("fix_ln expects a word with 1 integer bit");
  {
    std::vector<bool> bits = e.reconstruct_bits(u.word);
    bool low_any = false;
    for (unsigned i = 0; i < L; ++i) low_any = low_any || bits[i];
    if (!low_any && !bits[L]) throw DomainError("ln(0)");
    if (low_any && bits[L]) throw DomainError("argument above 1");
  }
  const LnTables& tab = tables_for(l_f);
  const unsigned F = std::max(l_f + kGuardBits, w);
  const unsigned W = F + 4;  // Horner accumulator: |acc| < 8
  const unsigned zbits = std::max(1u, bit_length(w - 1));
  const unsigned I = bit_length(static_cast<std::uint64_t>(std::ceil(w * 0.6932))) + 2;
  const unsigned WR = F + I + 1;

  // Leading-one normalisation: X = V * 2^-z with the top bit of V set.
  std::vector<SecretBit> p = prefix_or_from_top(e, u.word);
  std::vector<SecretBit> h(w);
  for (unsigned i = 0; i < w; ++i)
    h[i] = (i + 1 < w) ? e.xor_(p[i], p[i + 1]) : p[i];
  SecretWord z(zbits);
  for (unsigned k = 0; k < zbits; ++k) {
    SecretBit acc = e.constant(false);
    for (unsigned i = 0; i < w; ++i)
      if (((w - 1 - i) >> k) & 1) acc = e.xor_(acc, h[i]);
    z[k] = acc;
  }
  SecretWord V = barrel_shift_left(e, u.word, z);

  // Branch on v >= sqrt 2 and form x in [0, 0.4143).
  ensure_precision();
  Real thr = ceil(sqrt(Real(2)) * pow2(w - 1));
  SecretBit b = uge_const(e, V, fixed_bits(thr, 0, w + 1));
  SecretWord x_lo = shift_left_public(e, low_bits(V, w - 1), F - (w - 1), F);
  SecretWord x_hi = shift_left_public(e, low_bits(neg(e, V), w - 1), F - w, F);
  SecretWord x = mux(e, b, x_hi, x_lo);

  // Horner with branch-selected coefficients.
  auto coeff = [&](unsigned k) {
    return select_constant(e, b, fixed_bits(tab.lo[k], F, W),
                           fixed_bits(tab.hi[k], F, W));
  };
  SecretWord acc = coeff(tab.degree);
  for (unsigned k = tab.degree; k-- > 0;) {
    SecretWord prod = mul_signed_unsigned(e, acc, x, W + F);
    SecretWord hi(W);
    for (unsigned i = 0; i < W; ++i) hi[i] = prod[F + i];
    acc = add(e, hi, coeff(k));
  }

  // ln u = P(x) - z ln2 + b ln2.
  SecretWord r = sign_extend(acc, WR);
  Real ln2 = real_ln2();
  for (unsigned k = 0; k < zbits; ++k) {
    SecretWord term = masked_constant(e, z[k], fixed_bits(ln2 * pow2(k), F, WR));
    r = sub(e, r, term);
  }
  r = add(e, r, masked_constant(e, b, fixed_bits(ln2, F, WR)));

  // Round to l_f fraction bits.
  unsigned drop = F - l_f;
  if (drop > 0) {
    std::vector<bool> half(drop);
    half[drop - 1] = true;
    r = add_const(e, r, half);
  }
  FixedPoint out;
  out.fraction_bits = l_f;
  out.integer_bits = WR - F - 1;
  out.word = SecretWord(WR - drop);
  for (unsigned i = 0; i < WR - drop; ++i) out.word[i] = r[drop + i];
  return out;
}

}  // namespace ddpbench
