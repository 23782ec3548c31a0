#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ddpbench/coins.hpp"
#include "ddpbench/errors.hpp"
#include "ddpbench/params.hpp"

using namespace ddpbench;

namespace {

// Log-domain oracles, independent of the high-precision search.
unsigned oracle_kappa_laplace(unsigned lambda, double eps, double Delta, double n, double terms) {
  const long double log2e = 1.4426950408889634074L;
  long double target = -(long double)lambda - std::log2((long double)terms);
  for (unsigned k = 1;; ++k) {
    long double N = std::ldexp(1.0L, k) + 1;
    long double lg = 1 + std::log2((long double)n) - (long double)eps * (N - 1) / Delta * log2e -
                     std::log2(std::exp((long double)eps / Delta) + 1);
    if (lg <= target) return k;
  }
}

unsigned oracle_l(unsigned lambda, double n, double coins, double terms) {
  long double need = (long double)lambda + std::log2((long double)terms) +
                     std::log2((long double)n * coins);
  return static_cast<unsigned>(std::ceil(need));
}

}  // namespace

TEST(Params, ProtocolIdsRoundTrip) {
  ASSERT_EQ(all_protocols().size(), 8u);
  for (auto id : all_protocols()) EXPECT_EQ(parse_protocol(to_string(id)), id);
  EXPECT_THROW(parse_protocol("odo-cauchy"), ConfigError);
  EXPECT_EQ(to_string(ProtocolId::kOstackLaplaceStar), "ostack-laplace-star");
}

TEST(Params, OdoLaplaceExample) {
  auto p = allocate(ProtocolId::kOdoLaplace, 128, 0.1, 1e-5, 1, 4096, 3);
  EXPECT_EQ(p.kappa, 10u);
  EXPECT_EQ(p.N, 1025u);
  EXPECT_EQ(p.l, 145u);
  EXPECT_EQ(p.nonzero_terms, 2u);
  EXPECT_EQ(p.budget, Rational(1) / Rational(boost::multiprecision::mpz_int(1) << 129));
  EXPECT_NO_THROW(verify_budget(p));
}

TEST(Params, DngLaplaceGetsWholeBudget) {
  auto p = allocate(ProtocolId::kDngLaplace, 128, 0.1, 1e-5, 1, 4096, 3);
  EXPECT_EQ(p.nonzero_terms, 1u);
  EXPECT_EQ(p.budget, Rational(1) / Rational(boost::multiprecision::mpz_int(1) << 128));
  EXPECT_EQ(p.delta_b, 0);
  EXPECT_EQ(p.delta_r, 0);
  EXPECT_EQ(p.delta_p, 0);
  EXPECT_GT(p.delta_t, 0);
}

TEST(Params, LoosestSettingRoundTrips) {
  for (auto id : all_protocols()) {
    auto p = allocate(id, 1, 10, 1e-5, 1, 1, 3);
    EXPECT_GE(p.kappa, 1u);
    EXPECT_NO_THROW(verify_budget(p)) << to_string(id);
  }
}

TEST(Params, DecrementedLFailsOnDeltaB) {
  for (auto id : {ProtocolId::kOdoLaplace, ProtocolId::kOstackLaplace,
                  ProtocolId::kTransLaplace, ProtocolId::kOdoGaussian}) {
    auto p = allocate(id, 128, 0.1, 1e-5, 1, 4096, 3);
    p.l -= 1;
    try {
      verify_budget(p);
      ADD_FAILURE() << "expected BudgetError for " << to_string(id);
    } catch (const BudgetError& e) {
      // A shorter expansion also weakens p*' and so delta_r for Gaussians;
      // delta_b is checked first.
      EXPECT_EQ(e.term(), "delta_b") << to_string(id);
    }
  }
}

TEST(Params, OtherTermsNameTheirViolation) {
  auto p = allocate(ProtocolId::kOstackGaussian, 64, 0.1, 1e-5, 1, 256, 3);
  auto q = p;
  q.u -= 2;
  try {
    verify_budget(q);
    ADD_FAILURE();
  } catch (const BudgetError& e) {
    EXPECT_EQ(e.term(), "delta_p");
  }
  q = p;
  q.n_prime -= 1;
  try {
    verify_budget(q);
    ADD_FAILURE();
  } catch (const BudgetError& e) {
    EXPECT_EQ(e.term(), "delta_r");
  }
  q = p;
  q.kappa -= 1;
  q.N = (std::uint64_t{1} << q.kappa) + 1;
  try {
    verify_budget(q);
    ADD_FAILURE();
  } catch (const BudgetError& e) {
    EXPECT_EQ(e.term(), "delta_t");
  }
}

TEST(Params, DeltaLambdaBound) {
  for (auto id : all_protocols()) {
    for (unsigned lam : {64u, 256u}) {
      auto p = allocate(id, lam, 0.5, 1e-5, 1, 1000, 3);
      auto rep = verify_budget(p);
      Real bound = 2 * (exp(Real(p.epsilon_used)) + 1) * pow2(-static_cast<long>(lam));
      EXPECT_LE(rep.delta_lambda, bound);
      Real sum = p.delta_t + p.delta_b + p.delta_r + p.delta_p;
      EXPECT_EQ(p.delta_lambda, 2 * (exp(Real(p.epsilon_used)) + 1) * sum);
      EXPECT_LE(sum, pow2(-static_cast<long>(lam)));
    }
  }
}

TEST(Params, EqualSplitIsExact) {
  const unsigned want[] = {2, 3, 3, 1, 2, 3, 4, 1};
  for (std::size_t i = 0; i < all_protocols().size(); ++i) {
    auto p = allocate(all_protocols()[i], 200, 0.1, 1e-5, 1, 64, 3);
    EXPECT_EQ(p.nonzero_terms, want[i]);
    EXPECT_EQ(p.budget * Rational(want[i]) * Rational(boost::multiprecision::mpz_int(1) << 200),
              Rational(1));
  }
}

TEST(Params, LaplaceAgreesWithLogOracle) {
  for (unsigned lam : {64u, 128u, 256u, 512u}) {
    for (double eps : {0.01, 0.1, 1.0}) {
      for (std::uint64_t n : {16u, 1000u, 4096u}) {
        auto p = allocate(ProtocolId::kOdoLaplace, lam, eps, 1e-5, 1, n, 3);
        EXPECT_EQ(p.kappa, oracle_kappa_laplace(lam, eps, 1, double(n), 2));
        EXPECT_EQ(p.l, oracle_l(lam, double(n), double(p.kappa + 1), 2));
        auto t = allocate(ProtocolId::kTransLaplace, lam, eps, 1e-5, 1, n, 3);
        EXPECT_EQ(t.l, oracle_l(lam, double(n), 1, 2));
      }
    }
  }
}

TEST(Params, MonotoneInLambdaAndN) {
  for (auto id : all_protocols()) {
    for (double eps : {0.01, 1.0}) {
      ProtocolParams prev;
      bool first = true;
      for (unsigned lam : {64u, 128u, 256u, 512u}) {
        auto p = allocate(id, lam, eps, 1e-5, 1, 512, 3);
        if (!first) {
          EXPECT_GE(p.kappa, prev.kappa);
          EXPECT_GE(p.l, prev.l);
          EXPECT_GE(p.n_prime, prev.n_prime);
        }
        prev = p;
        first = false;
      }
      first = true;
      for (unsigned e2 = 4; e2 <= 12; ++e2) {
        auto p = allocate(id, 128, eps, 1e-5, 1, std::uint64_t{1} << e2, 3);
        if (!first) {
          EXPECT_GE(p.kappa, prev.kappa);
          EXPECT_GE(p.l, prev.l);
          EXPECT_GE(p.n_prime, prev.n_prime);
        }
        prev = p;
        first = false;
      }
    }
  }
}

TEST(Params, KappaNonIncreasingInEpsilon) {
  for (auto id : all_protocols()) {
    unsigned prev = 1000;
    for (double eps : {0.001, 0.01, 0.1, 0.5, 0.9}) {
      auto p = allocate(id, 128, eps, 1e-5, 1, 1024, 3);
      EXPECT_LE(p.kappa, prev) << to_string(id) << " eps=" << eps;
      prev = p.kappa;
    }
  }
}

TEST(Params, PushBudgetMonotoneAtFixedCapacity) {
  for (std::uint64_t g : {8u, 64u, 1024u}) {
    std::uint64_t prev = 0;
    for (std::uint64_t calls : {1u, 10u, 100u, 10000u}) {
      for (unsigned lam : {64u, 128u, 512u}) {
        Real budget = pow2(-static_cast<long>(lam));
        std::uint64_t u = 2 * g;
        while (ostack_delta_p(calls, g, u) > budget) u += 2;
        EXPECT_GE(u, prev);
        prev = u;
      }
      prev = 0;
    }
  }
}

TEST(Params, OstackSearchChoosesFeasiblePair) {
  auto p = allocate(ProtocolId::kOstackLaplace, 128, 0.1, 1e-5, 1, 4096, 3);
  EXPECT_EQ(p.u % 2, 0u);
  EXPECT_GT(p.u / 2, p.g - 1);
  EXPECT_GE(p.g, 8u);
  EXPECT_LE(p.g, 1024u);
  EXPECT_EQ(p.g & (p.g - 1), 0u);
  EXPECT_EQ(p.ostack_calls, (p.kappa + 1) * ((4096 + p.g - 1) / p.g));
  // u is the smallest even value meeting the allocation.
  EXPECT_GT(ostack_delta_p(p.ostack_calls, p.g, p.u - 2), to_real(p.budget));
  EXPECT_LE(ostack_delta_p(p.ostack_calls, p.g, p.u), to_real(p.budget));
}

TEST(Params, GaussianSigma) {
  EXPECT_NEAR(gaussian_sigma(0.1, 1e-5, 1), 10 * std::sqrt(2 * std::log(125000.0)), 1e-12);
  EXPECT_NEAR(gaussian_sigma(0.1, 1e-5, 1), 48.448, 1e-3);
  EXPECT_NEAR(gaussian_sigma(0.1, 1e-5, 3), 3 * gaussian_sigma(0.1, 1e-5, 1), 1e-9);
  EXPECT_THROW(gaussian_sigma(1.0, 1e-5, 1), ConfigError);
  EXPECT_THROW(gaussian_sigma(0.5, 1.25, 1), ConfigError);
  EXPECT_THROW(gaussian_sigma(0.5, 0, 1), ConfigError);
}

TEST(Params, GaussianOutsideClassicDomainIsFlagged) {
  auto p = allocate(ProtocolId::kOdoGaussian, 64, 2.0, 1e-5, 1, 16, 3);
  EXPECT_TRUE(p.outside_classic_gaussian_domain);
  AllocateOptions strict;
  strict.strict_gaussian_domain = true;
  EXPECT_THROW(allocate(ProtocolId::kOdoGaussian, 64, 2.0, 1e-5, 1, 16, 3, strict),
               ConfigError);
  EXPECT_FALSE(allocate(ProtocolId::kOdoGaussian, 64, 0.5, 1e-5, 1, 16, 3)
                   .outside_classic_gaussian_domain);
}

TEST(Params, GaussianTruncationCoversTwoSigma) {
  for (double s : {1.0, 2.0, 5.0, 48.43}) {
    AllocateOptions o;
    o.sigma_override = s;
    auto p = allocate(ProtocolId::kOdoGaussian, 64, 0.5, 1e-5, 1, 64, 3, o);
    EXPECT_GE(p.N, 2 * std::uint64_t(std::llround(s)));
    EXPECT_NO_THROW(verify_budget(p));
  }
}

TEST(Params, AcceptanceRateMatchesDirectSum) {
  for (auto [sigma, N] : {std::pair{2.0, 9u}, std::pair{0.5, 5u}, std::pair{5.0, 33u}}) {
    double t = sigma >= 1 ? sigma * sigma / std::round(sigma)
                          : sigma * sigma * std::ceil(1 / sigma);
    double k = sigma * sigma / t;
    double num = 0, den = 0;
    for (int x = -int(N) + 1; x < int(N); ++x) {
      double w = std::exp(-std::fabs(double(x)) / t);
      double a = std::exp(-(std::fabs(double(x)) - k) * (std::fabs(double(x)) - k) /
                          (2 * sigma * sigma));
      num += w * a;
      den += w;
    }
    EXPECT_NEAR(static_cast<double>(gaussian_p_star(sigma, t, N)), num / den, 1e-12);
  }
  EXPECT_GT(static_cast<double>(gaussian_p_star(2.0, 2.0, 1025)), 0.64);
  EXPECT_GT(static_cast<double>(gaussian_p_star(0.5, 0.5, 1025)), 0.54);
}

TEST(Params, RejectionGeometry) {
  auto a = rejection_geometry(2.0, 3);  // u = (|X| - 2)^2, |X| <= 8
  EXPECT_EQ(a.c, 1u);
  EXPECT_EQ(a.k, 2u);
  EXPECT_DOUBLE_EQ(a.r, 8.0);
  EXPECT_EQ(a.width, 6u);  // 36
  auto b = rejection_geometry(0.5, 2);  // u = (2|X| - 1)^2, |X| <= 4
  EXPECT_EQ(b.c, 2u);
  EXPECT_EQ(b.k, 1u);
  EXPECT_DOUBLE_EQ(b.r, 2.0);
  EXPECT_EQ(b.width, 6u);  // 49
}

TEST(Params, CoinBiases) {
  EXPECT_NEAR(static_cast<double>(geometric_bit_bias(0, 10)), 0.47502, 1e-5);
  EXPECT_NEAR(static_cast<double>(geometric_bit_bias(1, 10)), 0.45017, 1e-5);
  EXPECT_NEAR(static_cast<double>(geometric_bit_bias(2, 10)), 0.40131, 1e-5);
  double q = std::exp(-0.1);
  EXPECT_NEAR(static_cast<double>(laplace_zero_bias(10, 1025)), (1 - q) / (1 + q), 1e-15);
}

TEST(Params, PeriodicExponent) {
  // eps = 2^-3 ln2, Delta = 1: bit j has bias 1/(1 + 2^(2^(j-3))).
  EXPECT_EQ(periodic_exponent(2, 3, 1), -1);
  EXPECT_EQ(periodic_exponent(3, 3, 1), 0);
  EXPECT_EQ(periodic_exponent(5, 3, 1), 2);
  EXPECT_EQ(periodic_exponent(5, 3, 4), 0);
  EXPECT_EQ(periodic_exponent(5, 3, 3), -1);
  auto s = snap_epsilon(0.1);
  for (unsigned j = s.i; j < s.i + 4; ++j) {
    int a = periodic_exponent(j, s.i, 1);
    double t = 1 / s.value;
    double want = 1 / (1 + std::pow(2.0, std::pow(2.0, a)));
    EXPECT_NEAR(static_cast<double>(geometric_bit_bias(j, t)), want, 1e-12);
  }
}

TEST(Params, CsvFields) {
  auto p = allocate(ProtocolId::kOstackGaussian, 64, 0.1, 1e-5, 1, 256, 3);
  auto f = p.fields();
  std::vector<std::string> names;
  for (auto& [k, v] : f) names.push_back(k);
  for (const char* col : {"kappa", "N", "l", "n_prime", "u", "g", "log2_delta_t",
                          "log2_delta_b", "log2_delta_r", "log2_delta_p", "log2_delta_lambda"})
    EXPECT_NE(std::find(names.begin(), names.end(), col), names.end()) << col;
  auto d = allocate(ProtocolId::kDngLaplace, 64, 0.1, 1e-5, 1, 256, 3).fields();
  for (auto& [k, v] : d) {
    if (k == "log2_delta_b") {
      EXPECT_EQ(v, "-inf");
    }
  }
}

TEST(Params, InvalidInputsRejected) {
  EXPECT_THROW(allocate(ProtocolId::kOdoLaplace, 0, 0.1, 1e-5, 1, 16, 3), ConfigError);
  EXPECT_THROW(allocate(ProtocolId::kOdoLaplace, 64, 0, 1e-5, 1, 16, 3), ConfigError);
  EXPECT_THROW(allocate(ProtocolId::kOdoLaplace, 64, 0.1, 1e-5, 1, 0, 3), ConfigError);
  AllocateOptions cap;
  cap.l_cap = 64;
  EXPECT_THROW(allocate(ProtocolId::kOdoLaplace, 128, 0.1, 1e-5, 1, 16, 3, cap), ConfigError);
}
