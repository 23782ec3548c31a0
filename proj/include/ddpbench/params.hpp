#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ddpbench/realmath.hpp"

namespace ddpbench {

enum class ProtocolId {
  kOdoLaplace,
  kOstackLaplace,
  kOstackLaplaceStar,
  kDngLaplace,
  kTransLaplace,
  kOdoGaussian,
  kOstackGaussian,
  kDngGaussian,
};

const std::vector<ProtocolId>& all_protocols();
std::string to_string(ProtocolId id);
ProtocolId parse_protocol(const std::string& s);
bool is_gaussian(ProtocolId id);
bool uses_ostack(ProtocolId id);
bool uses_dng(ProtocolId id);

/// Classic calibration Delta*sqrt(2 ln(1.25/delta))/epsilon; epsilon, delta in (0,1).
double gaussian_sigma(double epsilon, double delta, double Delta);

struct ProtocolParams {
  ProtocolId protocol = ProtocolId::kOdoLaplace;
  unsigned lambda = 128;
  double epsilon = 0.1;
  double delta = 1e-5;
  double Delta = 1;
  std::uint64_t n = 1;
  unsigned m = 3;

  double epsilon_used = 0.1;  // snapped for the star variant
  unsigned snap_exponent = 0;
  double t = 0;               // discrete Laplace scale (proposal scale for Gaussians)
  double sigma = 0;           // Gaussian protocols only
  bool outside_classic_gaussian_domain = false;

  unsigned kappa = 0;
  std::uint64_t N = 0;
  unsigned l = 0;
  std::uint64_t n_prime = 0;     // Gaussian rejection trials
  unsigned reject_coin_count = 0;  // bits of the rejection exponent
  std::uint64_t g = 0, u = 0;    // Ostack capacity and push budget
  std::uint64_t ostack_calls = 0;  // M
  Real p_star = 0;

  unsigned nonzero_terms = 0;
  Rational budget = 0;  // per non-zero term
  Real delta_t = 0, delta_b = 0, delta_r = 0, delta_p = 0, delta_lambda = 0;

  // Run configuration (not touched by allocation).
  double collusion_fraction = 0;
  unsigned dng_words_per_sample = 1;
  bool with_check = false;
  double alpha = 0.05;
  bool standard_ks_constant = false;
  /// Compare only at tie-run boundaries in the KS check.
  bool ks_tie_aware = false;

  /// Scenario CSV columns; deltas in log2 form.
  std::vector<std::pair<std::string, std::string>> fields() const;
};

struct AllocateOptions {
  unsigned l_cap = 1u << 14;
  unsigned kappa_cap = 40;
  /// When > 0, use this discrete Gaussian sigma instead of calibrating.
  double sigma_override = 0;
  /// Reject epsilon >= 1 for Gaussian protocols instead of flagging it.
  bool strict_gaussian_domain = false;
};

ProtocolParams allocate(ProtocolId protocol, unsigned lambda, double epsilon, double delta,
                        double Delta, std::uint64_t n, unsigned m,
                        const AllocateOptions& opt = {});

struct BudgetReport {
  Real delta_t, delta_b, delta_r, delta_p, delta_lambda;
};

/// Recomputes every term at the chosen integers; throws BudgetError naming
/// the first term above its allocation.
BudgetReport verify_budget(const ProtocolParams& p);

// Individual formulas at high precision.
Real laplace_delta_t(std::uint64_t n, double epsilon, double Delta, std::uint64_t N);
Real gaussian_delta_t(std::uint64_t n, double sigma, std::uint64_t N);
Real ostack_delta_p(std::uint64_t calls, std::uint64_t g, std::uint64_t u);
Real rejection_delta_r(std::uint64_t n, std::uint64_t n_prime, const Real& p_star_lower);
/// Exact acceptance rate of discrete Gaussian rejection from tdLap(t) on (-N, N).
Real gaussian_p_star(double sigma, double t, std::uint64_t N);

/// Rejection step for discrete Gaussian from tdLap(t): accept with
/// e^(-u/r), u = (c|X| - k)^2 held in `width` bits.
struct RejectionGeometry {
  std::uint64_t c = 1;
  std::uint64_t k = 1;
  double r = 1;
  unsigned width = 1;
};
RejectionGeometry rejection_geometry(double sigma, unsigned kappa);

/// Bias of geometric bit i: 1/(1 + e^(2^i / t)).
Real geometric_bit_bias(unsigned i, double t);
/// Probability of zero under tdLap(t) on (-N, N).
Real laplace_zero_bias(double t, std::uint64_t N);

/// Exponent a_log2 such that geometric bit j has bias 1/(2^(2^a_log2)+1)
/// under the snapped scale, or -1 when the bit is not of that form.
int periodic_exponent(unsigned j, unsigned snap_exponent, double Delta);

/// Estimated AND gates for one Ostack call of capacity g, budget u, over
/// a bias stack (periodic_a_log2 < 0, cycle r) or a periodic source.
double ostack_call_cost(std::uint64_t g, std::uint64_t u, std::size_t r, int periodic_a_log2);

}  // namespace ddpbench
