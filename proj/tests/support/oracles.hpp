#pragma once

// Plaintext re-implementations of the sampling protocols. They consume the
// same per-party random tape as the circuits (one XOR-combined bit per
// urbit) but compute everything in the clear.

#include <cstdint>
#include <random>
#include <vector>

#include "ddpbench/engine.hpp"
#include "ddpbench/params.hpp"
#include "ddpbench/realmath.hpp"

namespace ddpbench::oracle {

class TapeBits {
 public:
  explicit TapeBits(RandomTape tape) : tape_(std::move(tape)) {}
  bool next() { return std::popcount(tape_.next_mask()) & 1; }
  std::uint64_t seed() const { return tape_.seed(); }

 private:
  RandomTape tape_;
};

/// floor(p * 2^l) as l digits, most significant first.
std::vector<bool> digits(const Real& p, unsigned l);

/// [U < p] for U uniform, drawing one tape bit per digit, last digit first.
bool odo_coin(TapeBits& tape, const std::vector<bool>& d);

struct Unfilled {};

/// Coins for one public bias. Ostack mode: each call makes u trials and
/// keeps the first g decided coins; throws Unfilled on a short call.
class Coins {
 public:
  Coins(TapeBits& tape, bool ostack, unsigned l, std::size_t g = 0, std::size_t u = 0)
      : tape_(tape), ostack_(ostack), l_(l), g_(g), u_(u) {}

  std::vector<bool> draw(const Real& bias, std::size_t count);
  std::vector<bool> draw_periodic(unsigned a_log2, std::size_t count);

 private:
  std::vector<bool> ostack_call(const std::vector<bool>& pattern);

  TapeBits& tape_;
  bool ostack_;
  unsigned l_;
  std::size_t g_, u_;
};

std::vector<std::int64_t> laplace(TapeBits& tape, double t, unsigned kappa, std::size_t count,
                                  Coins& coins, int periodic_from = -1);

struct Result {
  std::vector<std::int64_t> samples;
  /// Trans only: second acceptable value where t*ln(u) sits on a rounding edge.
  std::vector<std::int64_t> alternative;
  bool unfilled = false;
  bool rejection_abort = false;
  bool check_reject = false;
  std::uint64_t accepted = 0;
};

/// Oracle counterpart of run_protocol(p, seed).
Result run(const ProtocolParams& p, std::uint64_t seed);

/// True when the MPC batch is one the oracle allows.
bool matches(const Result& r, const std::vector<std::int64_t>& mpc);

}  // namespace ddpbench::oracle
