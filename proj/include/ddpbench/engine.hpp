#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ddpbench/errors.hpp"

namespace ddpbench {

inline constexpr unsigned kMaxParties = 64;

/// XOR-shared bit. Bit i of `shares` is party i's share.
struct SecretBit {
  std::uint64_t shares = 0;
  std::uint32_t ledger_id = 0;
  std::uint32_t depth = 0;
};

/// Little-endian two's-complement vector of shared bits.
struct SecretWord {
  std::vector<SecretBit> bits;

  SecretWord() = default;
  explicit SecretWord(std::size_t width) : bits(width) {}
  std::size_t width() const { return bits.size(); }
  SecretBit& operator[](std::size_t i) { return bits[i]; }
  const SecretBit& operator[](std::size_t i) const { return bits[i]; }
};

struct CostLedger {
  std::uint64_t and_gates = 0;
  std::uint64_t xor_gates = 0;
  std::uint64_t and_depth = 0;
  std::uint64_t input_random_bits = 0;
  std::uint64_t triples_consumed = 0;
  unsigned parties = 0;

  /// Flat key=value record, comma separated, fixed key order.
  std::string to_record() const;
  CostLedger& operator+=(const CostLedger& o);
  bool operator==(const CostLedger&) const = default;
};

/// Linear communication model in bits: a*m*and_gates + b*m*input_random_bits.
struct CommModel {
  double per_and = 2.0;
  double per_input_bit = 1.0;

  double bits(const CostLedger& l) const {
    return per_and * l.parties * static_cast<double>(l.and_gates) +
           per_input_bit * l.parties * static_cast<double>(l.input_random_bits);
  }
  double bytes(const CostLedger& l) const { return bits(l) / 8.0; }
};

/// Per-party random bit streams. Seeded, replayed from recorded bits, or
/// with individual parties pinned to a fixed value.
class RandomTape {
 public:
  static RandomTape seeded(std::uint64_t seed, unsigned parties);
  static RandomTape replay(std::vector<std::vector<std::uint8_t>> per_party);

  void fix_party(unsigned party, bool value);
  void release_party(unsigned party);
  unsigned parties() const { return parties_; }
  std::uint64_t seed() const { return seed_; }

  /// One fresh bit from every party, packed party i -> bit i.
  std::uint64_t next_mask() {
    std::uint64_t mask = 0;
    if (replaying_) return next_replay_mask();
    for (unsigned p = 0; p < parties_; ++p) {
      Stream& s = streams_[p];
      if (s.left == 0) {
        s.buffer = s.rng();
        s.left = 64;
      }
      mask |= (s.buffer & 1u) << p;
      s.buffer >>= 1;
      --s.left;
    }
    return (mask & ~fixed_mask_) | fixed_value_;
  }

 private:
  struct Stream {
    std::mt19937_64 rng;
    std::uint64_t buffer = 0;
    unsigned left = 0;
  };

  std::uint64_t next_replay_mask();

  unsigned parties_ = 0;
  std::uint64_t seed_ = 0;
  bool replaying_ = false;
  std::vector<Stream> streams_;
  std::vector<std::vector<std::uint8_t>> recorded_;
  std::size_t replay_pos_ = 0;
  std::uint64_t fixed_mask_ = 0;
  std::uint64_t fixed_value_ = 0;
};

/// Simulated semi-honest GMW evaluation with a trusted triple dealer.
class Engine {
 public:
  Engine(unsigned parties, std::uint64_t seed);
  Engine(RandomTape tape, std::uint64_t dealer_seed);

  unsigned parties() const { return parties_; }
  std::uint32_t id() const { return id_; }
  const CostLedger& ledger() const { return ledger_; }
  RandomTape& tape() { return tape_; }

  SecretBit share(bool value);
  SecretWord share(std::int64_t value, unsigned width);

  bool reconstruct(const SecretBit& x) const {
    check(x);
    return std::popcount(x.shares) & 1;
  }
  std::int64_t reconstruct(const SecretWord& x) const;
  std::uint64_t reconstruct_unsigned(const SecretWord& x) const;
  std::vector<bool> reconstruct_bits(const SecretWord& x) const;

  /// Public constant; held by party 0, never counted.
  SecretBit constant(bool value) const {
    return SecretBit{value ? 1u : 0u, id_, 0};
  }
  SecretWord constant_word(std::int64_t value, unsigned width) const;

  SecretBit xor_(const SecretBit& a, const SecretBit& b) {
    check(a);
    check(b);
    ++ledger_.xor_gates;
    return SecretBit{a.shares ^ b.shares, id_, std::max(a.depth, b.depth)};
  }

  SecretBit not_(const SecretBit& a) {
    check(a);
    ++ledger_.xor_gates;
    return SecretBit{a.shares ^ 1u, id_, a.depth};
  }

  SecretBit xor_const(const SecretBit& a, bool c) {
    return c ? not_(a) : a;
  }

  SecretBit and_const(const SecretBit& a, bool c) const {
    check(a);
    return c ? a : constant(false);
  }

  SecretBit and_(const SecretBit& x, const SecretBit& y) {
    check(x);
    check(y);
    std::uint64_t a, b, c;
    if (parties_ <= 21) {
      std::uint64_t r = dealer_();
      a = r & party_mask_;
      b = (r >> 21) & party_mask_;
      c = (r >> 42) & party_mask_;
    } else {
      a = dealer_() & party_mask_;
      b = dealer_() & party_mask_;
      c = dealer_() & party_mask_;
    }
    std::uint64_t pa = std::popcount(a) & 1, pb = std::popcount(b) & 1;
    c ^= (std::popcount(c) & 1) ^ (pa & pb);
    std::uint64_t d = std::popcount(x.shares ^ a) & 1;
    std::uint64_t e = std::popcount(y.shares ^ b) & 1;
    std::uint64_t z = c ^ (a & (0 - e)) ^ (b & (0 - d)) ^ (d & e);
    std::uint32_t depth = std::max(x.depth, y.depth) + 1;
    ++ledger_.and_gates;
    ++ledger_.triples_consumed;
    if (depth > ledger_.and_depth) ledger_.and_depth = depth;
    return SecretBit{z, id_, depth};
  }

  SecretBit or_(const SecretBit& a, const SecretBit& b) {
    return xor_(xor_(a, b), and_(a, b));
  }

  /// Every party contributes one tape bit; the result is their XOR.
  SecretBit urbit() {
    ledger_.input_random_bits += parties_;
    return SecretBit{tape_.next_mask(), id_, 0};
  }

  SecretWord input_secret_word(unsigned party, std::int64_t value,
                               unsigned width);

  /// Opens a bit to all parties (used for public abort decisions).
  bool open(const SecretBit& x) const { return reconstruct(x); }

 private:
  void check(const SecretBit& x) const {
    if (x.ledger_id != id_) throw ShapeError("bit belongs to another ledger");
  }

  unsigned parties_;
  std::uint64_t party_mask_;
  std::uint32_t id_;
  CostLedger ledger_;
  RandomTape tape_;
  std::mt19937_64 dealer_;
  std::mt19937_64 sharing_;
};

}  // namespace ddpbench
