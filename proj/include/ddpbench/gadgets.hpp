#pragma once

#include <cstdint>
#include <vector>

#include "ddpbench/engine.hpp"

namespace ddpbench {

// Word plumbing (free: no gates).
SecretWord sign_extend(const SecretWord& x, std::size_t width);
SecretWord zero_extend(Engine& e, const SecretWord& x, std::size_t width);
SecretWord low_bits(const SecretWord& x, std::size_t width);
SecretWord shift_left_public(Engine& e, const SecretWord& x, std::size_t k,
                             std::size_t width);
SecretWord xor_words(Engine& e, const SecretWord& a, const SecretWord& b);
SecretWord and_bit(Engine& e, const SecretBit& c, const SecretWord& x);
SecretWord not_word(Engine& e, const SecretWord& x);

/// Balanced AND tree over bitwise XNOR. Cost width-1.
SecretBit eq(Engine& e, const SecretWord& a, const SecretWord& b);
/// [x == c] for public c. Cost width-1.
SecretBit eq_const(Engine& e, const SecretWord& x, std::uint64_t c);

/// Signed a <= b. Cost width.
SecretBit le(Engine& e, const SecretWord& a, const SecretWord& b);
/// Signed a < b. Cost width.
SecretBit lt(Engine& e, const SecretWord& a, const SecretWord& b);
/// Unsigned a < b. Cost width.
SecretBit ult(Engine& e, const SecretWord& a, const SecretWord& b);
/// Unsigned c <= x for public c.
SecretBit uge_const(Engine& e, const SecretWord& x, std::uint64_t c);
SecretBit uge_const(Engine& e, const SecretWord& x, const std::vector<bool>& c);

/// Ripple-carry, result truncated to the operand width. Cost width-1.
SecretWord add(Engine& e, const SecretWord& a, const SecretWord& b);
SecretWord sub(Engine& e, const SecretWord& a, const SecretWord& b);
/// x + c for a public constant; low bits with a public carry are free.
SecretWord add_const(Engine& e, const SecretWord& x, std::uint64_t c);
SecretWord add_const(Engine& e, const SecretWord& x, const std::vector<bool>& c);
/// s ? -x : x. Cost width-1.
SecretWord cond_negate(Engine& e, const SecretWord& x, const SecretBit& s);
SecretWord neg(Engine& e, const SecretWord& x);
SecretWord abs_value(Engine& e, const SecretWord& x);

/// c ? a : b. One AND per bit.
SecretBit mux(Engine& e, const SecretBit& c, const SecretBit& a,
              const SecretBit& b);
SecretWord mux(Engine& e, const SecretBit& c, const SecretWord& a,
               const SecretWord& b);

/// Exact product of two unsigned words, out_width bits.
SecretWord mul_unsigned(Engine& e, const SecretWord& a, const SecretWord& b,
                        std::size_t out_width);
/// Product of a signed word and an unsigned word, out_width bits.
SecretWord mul_signed_unsigned(Engine& e, const SecretWord& a,
                               const SecretWord& b, std::size_t out_width);
/// Unsigned x * c for a public constant c (shift-and-add).
SecretWord mul_const_unsigned(Engine& e, const SecretWord& x,
                              const std::vector<bool>& c_bits,
                              std::size_t out_width);

/// p[i] = x[i] | x[i+1] | ... | x[w-1]. Cost width-1.
std::vector<SecretBit> prefix_or_from_top(Engine& e, const SecretWord& x);
/// Logical left shift by a secret amount given in binary.
SecretWord barrel_shift_left(Engine& e, const SecretWord& x,
                             const SecretWord& amount);
/// Logical right shift by a secret amount given in binary.
SecretWord barrel_shift_right(Engine& e, const SecretWord& x,
                              const SecretWord& amount);

/// Swaps so that a <= b afterwards (signed or unsigned).
void compare_exchange(Engine& e, SecretWord& a, SecretWord& b, bool is_signed);
/// Batcher odd-even mergesort, ascending.
void oblivious_sort(Engine& e, std::vector<SecretWord>& v, bool is_signed = true);
/// Number of compare-exchange units the network uses for n inputs.
std::size_t sorting_network_size(std::size_t n);

/// value = signed(word) / 2^fraction_bits.
struct FixedPoint {
  SecretWord word;
  unsigned integer_bits = 0;
  unsigned fraction_bits = 0;
};

/// Natural log of a fixed-point u in (0, 1]; result has l_f fraction bits.
FixedPoint fix_ln(Engine& e, const FixedPoint& u, unsigned l_f);
/// Polynomial degree fix_ln uses for a target of l_f fraction bits.
unsigned fix_ln_degree(unsigned l_f);
/// Largest absolute approximation error of the polynomial stage, as log2.
double fix_ln_poly_error_log2(unsigned l_f);

}  // namespace ddpbench
