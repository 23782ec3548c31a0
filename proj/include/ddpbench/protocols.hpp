#pragma once

#include <cstdint>
#include <vector>

#include "ddpbench/coins.hpp"
#include "ddpbench/engine.hpp"
#include "ddpbench/params.hpp"

namespace ddpbench {

enum class CoinSourceKind { kOdo, kOstack };

/// Draws batches of secret coins of one public bias. Ostack batches run
/// ceil(count / g) calls and keep the first `count` coins.
class CoinFactory {
 public:
  CoinFactory(Engine& e, CoinSourceKind kind, unsigned l, std::size_t g = 0,
              std::size_t u = 0);

  std::vector<SecretBit> draw(const Real& bias, std::size_t count);
  /// Bias 1/(2^(2^a_log2) + 1) through the periodic source (Ostack only).
  std::vector<SecretBit> draw_periodic(unsigned a_log2, std::size_t count);

  CoinSourceKind kind() const { return kind_; }
  unsigned l() const { return l_; }
  std::uint64_t ostack_calls() const { return calls_; }

 private:
  std::vector<SecretBit> run_ostack(BitSource& src);

  Engine& e_;
  CoinSourceKind kind_;
  unsigned l_;
  std::size_t g_, u_;
  std::uint64_t calls_ = 0;
};

/// Geometric magnitudes on [0, 2^kappa - 1]; bit i ~ B(1/(1 + e^(2^i/t))).
/// `periodic_from` >= 0 routes bit j >= periodic_from through the periodic
/// source with a_log2 = j - periodic_from (Ostack-Laplace*).
std::vector<SecretWord> geometric_bits(Engine& e, double t, unsigned kappa, std::size_t count,
                                       CoinFactory& coins, int periodic_from = -1);
SecretWord geometric_bits(Engine& e, double t, unsigned kappa, CoinFactory& coins);

/// count draws of tdLap(t) on (-2^kappa - 1, 2^kappa + 1), width kappa + 2.
struct LaplaceDraws {
  std::vector<SecretWord> values;
};
LaplaceDraws laplace_draws(Engine& e, double t, unsigned kappa, std::size_t count,
                           CoinFactory& coins, int periodic_from = -1);

/// B(e^(-u/r)) per word: AND over set bits u_i of coins B(e^(-2^i/r)).
std::vector<SecretBit> bern_exp(Engine& e, const std::vector<SecretWord>& u, double r,
                                CoinFactory& coins);
SecretBit bern_exp(Engine& e, const SecretWord& u, double r, CoinFactory& coins);

/// Moves the words with keep = 1 to the front, preserving order; returns
/// the first `out` positions. Positions past the kept count are unspecified.
std::vector<SecretWord> compact(Engine& e, const std::vector<SecretWord>& values,
                                const std::vector<SecretBit>& keep, std::size_t out);

struct SampleBatch {
  ProtocolId protocol = ProtocolId::kOdoLaplace;
  ProtocolParams params;
  std::vector<std::int64_t> samples;
  CostLedger ledger;
  std::uint64_t proposals = 0;  // Gaussian rejection trials
  std::uint64_t accepted = 0;   // revealed only by tests through the engine
  bool check_ran = false;
  bool check_reject = false;
};

/// Secret outputs before reconstruction.
struct SecretBatch {
  std::vector<SecretWord> words;
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
};

/// Runs `p.protocol` on `e`. Throws AbortUnfilled, AbortRejection or
/// CheckRejected (when p.with_check).
SecretBatch run_secret(Engine& e, const ProtocolParams& p);
SampleBatch run_protocol(Engine& e, const ProtocolParams& p);
SampleBatch run_protocol(const ProtocolParams& p, std::uint64_t seed);

SecretBatch odo_laplace(Engine& e, const ProtocolParams& p);
SecretBatch ostack_laplace(Engine& e, const ProtocolParams& p);
SecretBatch ostack_laplace_star(Engine& e, const ProtocolParams& p);
SecretBatch odo_gaussian(Engine& e, const ProtocolParams& p);
SecretBatch ostack_gaussian(Engine& e, const ProtocolParams& p);
SecretBatch transform_laplace(Engine& e, const ProtocolParams& p);

enum class DngTarget { kDiscreteLaplace, kDiscreteGaussian };
SecretBatch dng_sample(Engine& e, DngTarget target, const ProtocolParams& p);

/// Seed of party i's local sampler in the distributed generation protocols.
std::uint64_t dng_party_seed(std::uint64_t tape_seed, unsigned party);
/// The clear value party i inputs for sample j (one or two words).
std::vector<std::int64_t> dng_local_words(DngTarget target, const ProtocolParams& p,
                                          std::mt19937_64& rng);

}  // namespace ddpbench
