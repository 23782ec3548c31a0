#pragma once

#include <cstdint>
#include <vector>

#include "ddpbench/dist.hpp"
#include "ddpbench/engine.hpp"

namespace ddpbench {

/// c(alpha): sqrt(-ln(alpha/4)) by default, or the standard
/// sqrt(-ln(alpha/2)/2) when `standard` is set.
double ks_constant(double alpha, bool standard = false);

/// Public scaled CDF table over the support (-N, N).
struct CheckTable {
  std::int64_t N = 0;
  std::uint64_t n = 0;
  double alpha = 0.05;
  double c_alpha = 0;
  bool standard_constant = false;
  /// Compare only at the ends and starts of tie runs (discrete-aware).
  bool tie_aware = false;
  /// F[k] = round(n * F_target(k + 1 - N)) for k = 0 .. 2N-2.
  std::vector<std::uint64_t> F;
  std::uint64_t threshold = 0;

  std::size_t length() const { return F.size(); }
  /// Entry for sample value y in (-N, N).
  std::uint64_t at(std::int64_t y) const { return F[static_cast<std::size_t>(y + N - 1)]; }
  /// Entry for y - 1 (0 below the support).
  std::uint64_t below(std::int64_t y) const { return y + N - 2 >= 0 ? at(y - 1) : 0; }
};

CheckTable build_table(const DistSpec& dist, std::uint64_t n, std::int64_t N,
                       double alpha = 0.05, bool standard_constant = false,
                       bool tie_aware = false);

/// Plaintext intermediate values the circuit also computes.
struct CheckTrace {
  std::vector<std::uint64_t> obs;
  std::vector<std::uint64_t> sorted;
  std::uint64_t D = 0;
};

/// Secret reject bit: 1 when D >= threshold.
SecretBit check(Engine& e, const std::vector<SecretWord>& samples, const CheckTable& table,
                CheckTrace* trace = nullptr);

struct KsResult {
  bool reject = false;
  double statistic = 0;   // scaled D for tables; sup |F_n - F| otherwise
  double threshold = 0;
};

/// Same statistic and decision as `check`, in the clear.
KsResult ks_oracle(const std::vector<std::int64_t>& samples, const CheckTable& table);

/// Generic one-sample test against any DistSpec using the standard
/// asymptotic critical value c(alpha) / sqrt(n).
KsResult ks_oracle(const std::vector<double>& samples, const DistSpec& dist, double alpha);

}  // namespace ddpbench
