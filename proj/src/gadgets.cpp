#include "ddpbench/gadgets.hpp"

#include <algorithm>

namespace ddpbench {

namespace {

void require_same_width(const SecretWord& a, const SecretWord& b) {
  if (a.width() != b.width())
    throw ShapeError("width mismatch " + std::to_string(a.width()) + " vs " +
                     std::to_string(b.width()));
  if (a.width() == 0) throw ShapeError("empty word");
}

bool const_bit(std::uint64_t c, std::size_t i) { return i < 64 && (c >> i & 1); }

// Carry out of a + ~b + 1 over the full width: 1 iff a >= b (unsigned).
SecretBit carry_out_sub(Engine& e, const SecretWord& a, const SecretWord& b,
                        std::size_t upto) {
  // c_1 = a_0 | ~b_0
  SecretBit c = e.not_(e.and_(e.not_(a[0]), b[0]));
  for (std::size_t i = 1; i < upto; ++i) {
    SecretBit nb = e.not_(b[i]);
    c = e.xor_(c, e.and_(e.xor_(a[i], c), e.xor_(nb, c)));
  }
  return c;
}

// acc[offset..] += addend, truncated to acc width.
void add_at(Engine& e, SecretWord& acc, const SecretWord& addend,
            std::size_t offset) {
  std::size_t w = acc.width();
  if (offset >= w) return;
  std::size_t n = std::min(addend.width(), w - offset);
  if (n == 0) return;
  SecretBit c;
  bool have_carry = false;
  for (std::size_t k = 0; k < w - offset; ++k) {
    std::size_t i = offset + k;
    bool last = (i + 1 == w);
    if (k < n) {
      const SecretBit x = acc[i];
      const SecretBit y = addend[k];
      if (!have_carry) {
        acc[i] = e.xor_(x, y);
        if (!last) {
          c = e.and_(x, y);
          have_carry = true;
        }
      } else {
        SecretBit s = e.xor_(e.xor_(x, y), c);
        if (!last) c = e.xor_(c, e.and_(e.xor_(x, c), e.xor_(y, c)));
        acc[i] = s;
      }
    } else {
      if (!have_carry) break;
      const SecretBit x = acc[i];
      acc[i] = e.xor_(x, c);
      if (!last) c = e.and_(x, c);
    }
  }
}

}  // namespace

SecretWord sign_extend(const SecretWord& x, std::size_t width) {
  if (x.width() == 0) throw ShapeError("empty word");
  SecretWord out = x;
  out.bits.resize(width, x.bits.back());
  return out;
}

SecretWord zero_extend(Engine& e, const SecretWord& x, std::size_t width) {
  SecretWord out = x;
  out.bits.resize(width, e.constant(false));
  return out;
}

SecretWord low_bits(const SecretWord& x, std::size_t width) {
  SecretWord out = x;
  out.bits.resize(std::min(width, x.width()));
  return out;
}

SecretWord shift_left_public(Engine& e, const SecretWord& x, std::size_t k,
                             std::size_t width) {
  SecretWord out(width);
  for (std::size_t i = 0; i < width; ++i)
    out[i] = (i >= k && i - k < x.width()) ? x[i - k] : e.constant(false);
  return out;
}

SecretWord xor_words(Engine& e, const SecretWord& a, const SecretWord& b) {
  require_same_width(a, b);
  SecretWord out(a.width());
  for (std::size_t i = 0; i < a.width(); ++i) out[i] = e.xor_(a[i], b[i]);
  return out;
}

SecretWord and_bit(Engine& e, const SecretBit& c, const SecretWord& x) {
  SecretWord out(x.width());
  for (std::size_t i = 0; i < x.width(); ++i) out[i] = e.and_(c, x[i]);
  return out;
}

SecretWord not_word(Engine& e, const SecretWord& x) {
  SecretWord out(x.width());
  for (std::size_t i = 0; i < x.width(); ++i) out[i] = e.not_(x[i]);
  return out;
}

static SecretBit and_tree(Engine& e, std::vector<SecretBit> v) {
  while (v.size() > 1) {
    std::vector<SecretBit> next;
    next.reserve((v.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < v.size(); i += 2)
      next.push_back(e.and_(v[i], v[i + 1]));
    if (v.size() % 2) next.push_back(v.back());
    v.swap(next);
  }
  return v[0];
}

SecretBit eq(Engine& e, const SecretWord& a, const SecretWord& b) {
  require_same_width(a, b);
  std::vector<SecretBit> xn(a.width());
  for (std::size_t i = 0; i < a.width(); ++i) xn[i] = e.not_(e.xor_(a[i], b[i]));
  return and_tree(e, std::move(xn));
}

SecretBit eq_const(Engine& e, const SecretWord& x, std::uint64_t c) {
  if (x.width() == 0) throw ShapeError("empty word");
  if (x.width() < 64 && (c >> x.width()) != 0) return e.constant(false);
  std::vector<SecretBit> xn(x.width());
  for (std::size_t i = 0; i < x.width(); ++i)
    xn[i] = e.xor_const(x[i], !const_bit(c, i));
  return and_tree(e, std::move(xn));
}

SecretBit lt(Engine& e, const SecretWord& a, const SecretWord& b) {
  require_same_width(a, b);
  std::size_t w = a.width();
  // Sign of (a - b) evaluated one bit wider.
  SecretBit c = carry_out_sub(e, a, b, w);
  return e.xor_(e.xor_(a[w - 1], e.not_(b[w - 1])), c);
}

SecretBit le(Engine& e, const SecretWord& a, const SecretWord& b) {
  return e.not_(lt(e, b, a));
}

SecretBit ult(Engine& e, const SecretWord& a, const SecretWord& b) {
  require_same_width(a, b);
  return e.not_(carry_out_sub(e, a, b, a.width()));
}

SecretBit uge_const(Engine& e, const SecretWord& x, const std::vector<bool>& c) {
  std::size_t w = x.width();
  if (w == 0) throw ShapeError("empty word");
  for (std::size_t i = w; i < c.size(); ++i)
    if (c[i]) return e.constant(false);
  // Carry out of x + ~c + 1 with the carry kept public while possible.
  bool pub = true, cval = true;
  SecretBit cs;
  for (std::size_t i = 0; i < w; ++i) {
    bool nb = !(i < c.size() && c[i]);
    if (pub) {
      if (nb == cval) continue;  // carry stays public
      pub = false;
      cs = x[i];
    } else {
      cs = e.xor_(cs, e.and_(e.xor_(x[i], cs), e.xor_const(cs, nb)));
    }
  }
  return pub ? e.constant(cval) : cs;
}

SecretBit uge_const(Engine& e, const SecretWord& x, std::uint64_t c) {
  std::vector<bool> bits(64);
  for (unsigned i = 0; i < 64; ++i) bits[i] = c >> i & 1;
  return uge_const(e, x, bits);
}

SecretWord add(Engine& e, const SecretWord& a, const SecretWord& b) {
  require_same_width(a, b);
  SecretWord out = a;
  add_at(e, out, b, 0);
  return out;
}

SecretWord sub(Engine& e, const SecretWord& a, const SecretWord& b) {
  require_same_width(a, b);
  std::size_t w = a.width();
  SecretWord out(w);
  out[0] = e.xor_(a[0], b[0]);
  if (w == 1) return out;
  SecretBit c = e.not_(e.and_(e.not_(a[0]), b[0]));
  for (std::size_t i = 1; i < w; ++i) {
    SecretBit nb = e.not_(b[i]);
    out[i] = e.xor_(e.xor_(a[i], nb), c);
    if (i + 1 < w) c = e.xor_(c, e.and_(e.xor_(a[i], c), e.xor_(nb, c)));
  }
  return out;
}

SecretWord add_const(Engine& e, const SecretWord& x, const std::vector<bool>& c) {
  std::size_t w = x.width();
  SecretWord out(w);
  bool pub = true, cval = false;
  SecretBit cs;
  for (std::size_t i = 0; i < w; ++i) {
    bool bi = i < c.size() && c[i];
    bool last = (i + 1 == w);
    if (pub) {
      out[i] = e.xor_const(x[i], bi != cval);
      if (!last && bi != cval) {
        pub = false;
        cs = x[i];
      }
    } else {
      out[i] = e.xor_const(e.xor_(x[i], cs), bi);
      if (!last) cs = e.xor_(cs, e.and_(e.xor_(x[i], cs), e.xor_const(cs, bi)));
    }
  }
  return out;
}

SecretWord add_const(Engine& e, const SecretWord& x, std::uint64_t c) {
  std::vector<bool> bits(64);
  for (unsigned i = 0; i < 64; ++i) bits[i] = c >> i & 1;
  return add_const(e, x, bits);
}

SecretWord cond_negate(Engine& e, const SecretWord& x, const SecretBit& s) {
  std::size_t w = x.width();
  SecretWord out(w);
  SecretBit c = s;
  for (std::size_t i = 0; i < w; ++i) {
    SecretBit y = e.xor_(x[i], s);
    out[i] = e.xor_(y, c);
    if (i + 1 < w) c = e.and_(y, c);
  }
  return out;
}

SecretWord neg(Engine& e, const SecretWord& x) {
  return add_const(e, not_word(e, x), 1);
}

SecretWord abs_value(Engine& e, const SecretWord& x) {
  if (x.width() == 0) throw ShapeError("empty word");
  return cond_negate(e, x, x.bits.back());
}

SecretBit mux(Engine& e, const SecretBit& c, const SecretBit& a,
              const SecretBit& b) {
  return e.xor_(b, e.and_(c, e.xor_(a, b)));
}

SecretWord mux(Engine& e, const SecretBit& c, const SecretWord& a,
               const SecretWord& b) {
  require_same_width(a, b);
  SecretWord out(a.width());
  for (std::size_t i = 0; i < a.width(); ++i) out[i] = mux(e, c, a[i], b[i]);
  return out;
}

SecretWord mul_unsigned(Engine& e, const SecretWord& a, const SecretWord& b,
                        std::size_t out_width) {
  SecretWord acc = e.constant_word(0, static_cast<unsigned>(out_width));
  bool first = true;
  for (std::size_t j = 0; j < b.width() && j < out_width; ++j) {
    std::size_t n = std::min(a.width(), out_width - j);
    SecretWord pp(n);
    for (std::size_t i = 0; i < n; ++i) pp[i] = e.and_(a[i], b[j]);
    if (first) {
      for (std::size_t i = 0; i < n; ++i) acc[j + i] = pp[i];
      first = false;
    } else {
      add_at(e, acc, pp, j);
    }
  }
  return acc;
}

SecretWord mul_signed_unsigned(Engine& e, const SecretWord& a,
                               const SecretWord& b, std::size_t out_width) {
  SecretWord acc = e.constant_word(0, static_cast<unsigned>(out_width));
  bool first = true;
  for (std::size_t j = 0; j < b.width() && j < out_width; ++j) {
    std::size_t n = out_width - j;
    std::size_t own = std::min(a.width(), n);
    SecretWord pp(n);
    for (std::size_t i = 0; i < own; ++i) pp[i] = e.and_(a[i], b[j]);
    if (n > own) {
      for (std::size_t i = own; i < n; ++i) pp[i] = pp[own - 1];
    }
    if (first) {
      for (std::size_t i = 0; i < n; ++i) acc[j + i] = pp[i];
      first = false;
    } else {
      add_at(e, acc, pp, j);
    }
  }
  return acc;
}

SecretWord mul_const_unsigned(Engine& e, const SecretWord& x,
                              const std::vector<bool>& c_bits,
                              std::size_t out_width) {
  SecretWord acc = e.constant_word(0, static_cast<unsigned>(out_width));
  bool first = true;
  for (std::size_t k = 0; k < c_bits.size() && k < out_width; ++k) {
    if (!c_bits[k]) continue;
    if (first) {
      for (std::size_t i = 0; i < x.width() && k + i < out_width; ++i)
        acc[k + i] = x[i];
      first = false;
    } else {
      add_at(e, acc, x, k);
    }
  }
  return acc;
}

std::vector<SecretBit> prefix_or_from_top(Engine& e, const SecretWord& x) {
  std::size_t w = x.width();
  std::vector<SecretBit> p(w);
  p[w - 1] = x[w - 1];
  for (std::size_t i = w - 1; i-- > 0;) p[i] = e.or_(p[i + 1], x[i]);
  return p;
}

SecretWord barrel_shift_left(Engine& e, const SecretWord& x,
                             const SecretWord& amount) {
  SecretWord cur = x;
  std::size_t w = x.width();
  for (std::size_t k = 0; k < amount.width(); ++k) {
    std::size_t s = k < 63 ? (std::size_t{1} << k) : w;
    SecretWord next(w);
    for (std::size_t i = 0; i < w; ++i) {
      if (i >= s)
        next[i] = mux(e, amount[k], cur[i - s], cur[i]);
      else
        next[i] = e.and_(e.not_(amount[k]), cur[i]);
    }
    cur.bits.swap(next.bits);
  }
  return cur;
}

SecretWord barrel_shift_right(Engine& e, const SecretWord& x,
                              const SecretWord& amount) {
  SecretWord cur = x;
  std::size_t w = x.width();
  for (std::size_t k = 0; k < amount.width(); ++k) {
    std::size_t s = k < 63 ? (std::size_t{1} << k) : w;
    SecretWord next(w);
    for (std::size_t i = 0; i < w; ++i) {
      if (i + s < w)
        next[i] = mux(e, amount[k], cur[i + s], cur[i]);
      else
        next[i] = e.and_(e.not_(amount[k]), cur[i]);
    }
    cur.bits.swap(next.bits);
  }
  return cur;
}

void compare_exchange(Engine& e, SecretWord& a, SecretWord& b, bool is_signed) {
  SecretBit swap = is_signed ? lt(e, b, a) : ult(e, b, a);
  for (std::size_t i = 0; i < a.width(); ++i) {
    SecretBit d = e.and_(swap, e.xor_(a[i], b[i]));
    a[i] = e.xor_(a[i], d);
    b[i] = e.xor_(b[i], d);
  }
}

template <typename F>
static void for_each_comparator(std::size_t n, F&& f) {
  for (std::size_t p = 1; p < n; p <<= 1)
    for (std::size_t k = p; k >= 1; k >>= 1) {
      for (std::size_t j = k % p; j + k < n; j += 2 * k)
        for (std::size_t i = 0; i < std::min(k, n - j - k); ++i)
          if ((i + j) / (2 * p) == (i + j + k) / (2 * p)) f(i + j, i + j + k);
      if (k == 1) break;
    }
}

void oblivious_sort(Engine& e, std::vector<SecretWord>& v, bool is_signed) {
  if (v.empty()) return;
  for (const auto& w : v)
    if (w.width() != v[0].width()) throw ShapeError("sort needs equal widths");
  for_each_comparator(v.size(), [&](std::size_t i, std::size_t j) {
    compare_exchange(e, v[i], v[j], is_signed);
  });
}

std::size_t sorting_network_size(std::size_t n) {
  std::size_t count = 0;
  for_each_comparator(n, [&](std::size_t, std::size_t) { ++count; });
  return count;
}

}  // namespace ddpbench
