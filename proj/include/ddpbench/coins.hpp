#pragma once

#include <cstdint>
#include <vector>

#include "ddpbench/engine.hpp"
#include "ddpbench/realmath.hpp"

namespace ddpbench {

/// Public bias p truncated to l binary digits; bits[j] has weight 2^-(j+1).
struct BiasSpec {
  std::vector<bool> bits;

  static BiasSpec from_real(const Real& p, unsigned l);
  static BiasSpec from_bits(std::vector<bool> b) { return BiasSpec{std::move(b)}; }
  unsigned length() const { return static_cast<unsigned>(bits.size()); }
  Real value() const;
  double value_double() const;
};

/// Scans the expansion from the least significant digit: l ANDs, l URBITs.
SecretBit odo_coin(Engine& e, const BiasSpec& bias);

/// Smallest 3(2^i - 1) that is >= l.
std::size_t bias_stack_size(std::size_t l);

/// Source of bias digits for Ostack sampling.
class BitSource {
 public:
  virtual ~BitSource() = default;
  virtual SecretBit rpop() = 0;
  virtual void creset(const SecretBit& cond) = 0;
};

/// Resettable reader over a public expansion. The secret state is the time
/// of the last reset modulo the cycle, held as two one-hot vectors.
class BiasStack final : public BitSource {
 public:
  /// cycle >= bias length; digits past the expansion read as 0.
  BiasStack(Engine& e, const BiasSpec& bias, std::size_t cycle);

  SecretBit rpop() override;
  void creset(const SecretBit& cond) override;

  std::size_t cycle() const { return blocks_ * block_size_; }
  std::size_t blocks() const { return blocks_; }
  std::size_t block_size() const { return block_size_; }

 private:
  struct PBit {
    bool pub = true;
    bool val = false;
    SecretBit s;
  };
  PBit p_and(const PBit& a, const PBit& b);
  PBit p_xor(const PBit& a, const PBit& b);
  PBit p_not(const PBit& a);
  PBit p_mux(const PBit& c, const PBit& a, const PBit& b);
  SecretBit p_secret(const PBit& a);
  void set_onehot(std::vector<PBit>& v, const PBit& cond, std::size_t k);
  void advance_block();
  bool digit(std::size_t k) const;

  Engine& e_;
  std::vector<bool> digits_;
  std::size_t blocks_ = 1, block_size_ = 1;
  std::uint64_t t_ = 0;      // rpops so far
  std::size_t cur_ = 0;      // block of t_
  std::vector<PBit> a_, c_;  // one-hot block and offset of the last reset
  PBit f_;                   // a reset happened in the current block
};

/// Digits of 1/(2^a + 1) for a = 2^a_log2: period 2a, a zeros then a ones.
/// The secret state is the elapsed counter; rpop costs no ANDs and the
/// counter update is charged to creset.
class PeriodicBiasSource final : public BitSource {
 public:
  PeriodicBiasSource(Engine& e, unsigned a_log2);

  SecretBit rpop() override;
  void creset(const SecretBit& cond) override;

  std::size_t period() const { return std::size_t{2} << a_log2_; }
  static std::vector<bool> pattern(unsigned a_log2);

 private:
  void advance();

  Engine& e_;
  unsigned a_log2_;
  bool pending_ = false;  // last rpop not yet followed by an advance
  SecretWord elapsed_;
  bool fresh_ = true;  // elapsed_ is still the public zero
  std::uint64_t public_elapsed_ = 0;
};

enum class OverflowPolicy { kKeepFirst, kAbort };

/// Push-only oblivious coin buffer holding up to g coins in push order.
/// Levels of blocks of size 2^j hold at most 3 blocks; a flat top array
/// receives blocks of 2^(K+1).
class CoinStack {
 public:
  CoinStack(Engine& e, std::size_t capacity,
            OverflowPolicy policy = OverflowPolicy::kAbort);

  void cpush(const SecretBit& cond, const SecretBit& bit);
  /// Reveals the stored count and returns the coins in push order.
  std::vector<SecretBit> purge();
  /// Reveals only whether g coins were stored; returns exactly g of them.
  std::vector<SecretBit> purge_full();

  std::size_t capacity() const { return g_; }
  std::size_t levels() const { return levels_.size(); }
  std::uint64_t ops() const { return ops_; }

 private:
  struct Level {
    std::size_t block = 1;
    std::vector<SecretBit> data;  // 3 blocks
    SecretBit o[3];               // thermometer occupancy
    unsigned bound = 0;           // public upper bound on the block count
  };
  void receive(Level& lv, const SecretBit& cond, const std::vector<SecretBit>& blk);
  bool flush(Level& lv, SecretBit& cond, std::vector<SecretBit>& out);
  void receive_top(const SecretBit& cond, const std::vector<SecretBit>& blk);
  SecretWord stored_count();
  std::vector<SecretBit> concatenated(std::size_t upto);

  Engine& e_;
  std::size_t g_;
  OverflowPolicy policy_;
  std::vector<Level> levels_;
  std::size_t top_block_ = 1, top_slots_ = 1;
  std::vector<SecretBit> top_;
  std::vector<SecretBit> top_o_;
  std::size_t top_bound_ = 0;
  SecretBit overflow_;
  bool overflow_possible_ = false;
  std::uint64_t ops_ = 0;
};

/// Runs u push iterations against `source`; returns g coins or throws
/// AbortUnfilled.
std::vector<SecretBit> ostack_sample(Engine& e, std::size_t g, std::size_t u,
                                     BitSource& source);

/// Snapped privacy parameter: largest 2^-i ln2 <= eps, with its exponent i.
struct SnappedEpsilon {
  unsigned i = 0;
  double value = 0;
};
SnappedEpsilon snap_epsilon(double eps);

}  // namespace ddpbench
