#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <vector>

namespace ddpbench {

/// Working high-precision float; precision is fixed process-wide.
using Real = boost::multiprecision::mpfr_float;
/// Exact rationals for budget allocation.
using Rational = boost::multiprecision::mpq_rational;

/// Sets the process-wide working precision. Idempotent and cheap.
void ensure_precision();
/// Working precision in bits.
unsigned precision_bits();

Real to_real(const Rational& q);
Real pow2(long k);
Real real_ln2();
/// log2 of a positive real as a double (may be far below double range).
double log2_of(const Real& x);
/// Binary digits of frac(x) for x in [0,1): bits[0] has weight 1/2.
std::vector<bool> binary_expansion(const Real& x, unsigned bits);
/// round(x * 2^frac) as little-endian two's-complement bits of given width.
std::vector<bool> fixed_bits(const Real& x, unsigned frac, unsigned width);

}  // namespace ddpbench
