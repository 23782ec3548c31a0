#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ddpbench/realmath.hpp"

namespace ddpbench {

enum class Family {
  kBernoulli,
  kUniform,
  kDiscreteUniform,
  kLaplace,
  kGaussian,
  kDiscreteLaplace,
  kDiscreteGaussian,
  kNegativeBinomial,
  kGamma,
  kTruncatedDiscreteLaplace,
  kTruncatedDiscreteGaussian,
};

/// Parameters by family:
///   Bernoulli(p=a), Uniform(a,b), DiscreteUniform(a,b) on [a,b),
///   Laplace(t=a), Gaussian(sigma=a), DiscreteLaplace(t=a),
///   DiscreteGaussian(sigma=a), NegativeBinomial(r=a, p=b),
///   Gamma(shape=a, scale=b), truncated variants add support (-N, N).
struct DistSpec {
  Family family = Family::kBernoulli;
  double a = 0;
  double b = 0;
  std::int64_t N = 0;

  static DistSpec bernoulli(double p) { return {Family::kBernoulli, p, 0, 0}; }
  static DistSpec uniform(double lo, double hi) { return {Family::kUniform, lo, hi, 0}; }
  static DistSpec discrete_uniform(double lo, double hi) {
    return {Family::kDiscreteUniform, lo, hi, 0};
  }
  static DistSpec laplace(double t) { return {Family::kLaplace, t, 0, 0}; }
  static DistSpec gaussian(double sigma) { return {Family::kGaussian, sigma, 0, 0}; }
  static DistSpec discrete_laplace(double t) { return {Family::kDiscreteLaplace, t, 0, 0}; }
  static DistSpec discrete_gaussian(double sigma) {
    return {Family::kDiscreteGaussian, sigma, 0, 0};
  }
  static DistSpec negative_binomial(double r, double p) {
    return {Family::kNegativeBinomial, r, p, 0};
  }
  static DistSpec gamma(double shape, double scale) { return {Family::kGamma, shape, scale, 0}; }
  static DistSpec truncated_discrete_laplace(double t, std::int64_t N) {
    return {Family::kTruncatedDiscreteLaplace, t, 0, N};
  }
  static DistSpec truncated_discrete_gaussian(double sigma, std::int64_t N) {
    return {Family::kTruncatedDiscreteGaussian, sigma, 0, N};
  }

  bool discrete() const;
  std::string name() const;
};

/// Throws ConfigError on invalid parameters.
void validate(const DistSpec& d);

double sample(const DistSpec& d, std::mt19937_64& rng);
/// pmf for discrete families, density otherwise.
double pmf(const DistSpec& d, double x);
double cdf(const DistSpec& d, double x);
/// Closed-form or summed variance.
double variance(const DistSpec& d);
/// High-precision pmf for the (truncated) discrete Laplace/Gaussian families.
Real pmf_real(const DistSpec& d, std::int64_t x);
/// pmf_real over lo..hi, sharing one normaliser.
std::vector<Real> pmf_real_range(const DistSpec& d, std::int64_t lo, std::int64_t hi);

/// Proposal scale for Gaussian rejection from discrete Laplace:
/// sigma^2/round(sigma) for sigma >= 1, sigma^2*ceil(1/sigma) otherwise.
double gaussian_rejection_scale(double sigma);

struct RejectionStats {
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  double rate() const { return proposals ? double(accepted) / double(proposals) : 0.0; }
};

/// Discrete Gaussian by rejection from discrete Laplace; truncated to
/// (-N, N) when N > 0.
std::int64_t sample_discrete_gaussian(double sigma, std::int64_t N, std::mt19937_64& rng,
                                      RejectionStats* stats = nullptr);

// --- Central-model mechanisms -------------------------------------------

enum class Mechanism { kLaplace, kGaussian, kDiscreteLaplace, kDiscreteGaussian };
Mechanism parse_mechanism(const std::string& s);

/// Adds i.i.d. calibrated noise. Gaussian variants require epsilon < 1.
std::vector<double> cdp_mechanism(const std::vector<double>& values, Mechanism mech,
                                  double epsilon, double delta, double Delta,
                                  std::mt19937_64& rng);

// --- Local partial noise for distributed generation ---------------------

enum class PartialKind {
  kGammaPair,       // continuous Laplace
  kFourGaussians,   // continuous Laplace
  kLaplaceBeta,     // continuous Laplace
  kNegativeBinomial,  // one-sided geometric
  kGaussian,        // Gaussian
};

struct PartialNoiseSpec {
  PartialKind kind = PartialKind::kNegativeBinomial;
  double epsilon = 1;
  double delta = 1e-5;
  double Delta = 1;
  double collusion_fraction = 0;  // inflates Gaussian partial variance
};

/// One party's local values for the given row.
std::vector<double> dng_partial(const PartialNoiseSpec& spec, unsigned m, std::mt19937_64& rng);
/// Aggregation arithmetic of the row over all parties' partials.
double dng_aggregate(const PartialNoiseSpec& spec,
                     const std::vector<std::vector<double>>& partials);

/// sigma2 / (1 - alpha).
double collusion_adjust(double sigma2, double alpha);

// --- Utility ------------------------------------------------------------

struct UtilityReport {
  double mse = 0;
  double mae = 0;
  double re = 0;  // percent, over keys with non-zero true count
  std::size_t zero_keys_skipped = 0;
};

UtilityReport utility(const std::vector<double>& truth, const std::vector<double>& noisy);

// --- Datasets -----------------------------------------------------------

inline constexpr std::size_t kKosarakKeys = 41270;

/// One integer count per line.
std::vector<double> load_counts(const std::string& path);
void save_counts(const std::string& path, const std::vector<double>& counts);
/// Transaction log (space-separated item ids per line) to per-item counts,
/// indexed by item id from the smallest to the largest seen.
std::vector<double> kosarak_counts(const std::string& transactions_path);
/// Deterministic Zipf(s) click counts over `keys` pages.
std::vector<double> synthetic_zipf(std::size_t keys = kKosarakKeys, double s = 1.5,
                                   double total_clicks = 8019015.0);

}  // namespace ddpbench
