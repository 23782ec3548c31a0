#include "ddpbench/realmath.hpp"

#include <mutex>

namespace ddpbench {

namespace {
constexpr unsigned kDigits10 = 700;  // about 2326 bits
}

void ensure_precision() {
  static std::once_flag once;
  std::call_once(once, [] { Real::default_precision(kDigits10); });
}

unsigned precision_bits() {
  ensure_precision();
  Real probe = 0;
  return static_cast<unsigned>(mpfr_get_prec(probe.backend().data()));
}

Real to_real(const Rational& q) {
  ensure_precision();
  return Real(boost::multiprecision::numerator(q)) /
         Real(boost::multiprecision::denominator(q));
}

Real pow2(long k) {
  ensure_precision();
  Real r = 1;
  mpfr_mul_2si(r.backend().data(), r.backend().data(), k, MPFR_RNDN);
  return r;
}

Real real_ln2() {
  ensure_precision();
  Real r;
  mpfr_const_log2(r.backend().data(), MPFR_RNDN);
  return r;
}

double log2_of(const Real& x) {
  ensure_precision();
  if (x <= 0) return -std::numeric_limits<double>::infinity();
  long exp = 0;
  double mant = mpfr_get_d_2exp(&exp, x.backend().data(), MPFR_RNDN);
  return std::log2(mant) + static_cast<double>(exp);
}

std::vector<bool> binary_expansion(const Real& x, unsigned bits) {
  ensure_precision();
  std::vector<bool> out(bits);
  Real f = x - floor(x);
  for (unsigned j = 0; j < bits; ++j) {
    f *= 2;
    if (f >= 1) {
      out[j] = true;
      f -= 1;
    }
  }
  return out;
}

std::vector<bool> fixed_bits(const Real& x, unsigned frac, unsigned width) {
  ensure_precision();
  Real scaled = round(x * pow2(frac));
  boost::multiprecision::mpz_int v(scaled);
  if (v < 0) v += boost::multiprecision::mpz_int(1) << width;
  std::vector<bool> out(width);
  for (unsigned i = 0; i < width; ++i)
    out[i] = boost::multiprecision::bit_test(v, i);
  return out;
}

}  // namespace ddpbench
