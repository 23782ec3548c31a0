#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <tuple>
#include <numeric>
#include <random>

#include "ddpbench/dist.hpp"
#include "ddpbench/errors.hpp"

using namespace ddpbench;

namespace {

struct Moments {
  double mean = 0, var = 0;
};

template <class F>
Moments moments(std::size_t n, F draw) {
  double s = 0, s2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double x = draw();
    s += x;
    s2 += x * x;
  }
  Moments m;
  m.mean = s / double(n);
  m.var = s2 / double(n) - m.mean * m.mean;
  return m;
}

double dlap_variance(double t) {
  double q = std::exp(-1 / t);
  return 2 * q / ((1 - q) * (1 - q));
}

}  // namespace

TEST(Dist, DiscreteLaplaceVariance) {
  std::mt19937_64 rng(1);
  auto d = DistSpec::discrete_laplace(10);
  Moments m = moments(1000000, [&] { return sample(d, rng); });
  EXPECT_NEAR(dlap_variance(10), 199.8334, 1e-3);
  EXPECT_NEAR(m.var / dlap_variance(10), 1.0, 0.01);
  EXPECT_NEAR(variance(d), dlap_variance(10), 1e-9);
}

TEST(Dist, BernoulliDegenerate) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(sample(DistSpec::bernoulli(0), rng), 0);
    EXPECT_EQ(sample(DistSpec::bernoulli(1), rng), 1);
  }
}

TEST(Dist, NegativeBinomialShapeOneIsGeometric) {
  std::mt19937_64 rng(3);
  const double p = 0.7;
  auto d = DistSpec::negative_binomial(1, p);
  Moments m = moments(200000, [&] { return sample(d, rng); });
  double mean = p / (1 - p);
  EXPECT_NEAR(m.mean / mean, 1.0, 0.02);
  for (int k = 0; k < 10; ++k) EXPECT_NEAR(pmf(d, k), (1 - p) * std::pow(p, k), 1e-12);
}

TEST(Dist, InvalidParametersThrow) {
  std::mt19937_64 rng(4);
  EXPECT_THROW(sample(DistSpec::bernoulli(1.5), rng), ConfigError);
  EXPECT_THROW(sample(DistSpec::discrete_laplace(0), rng), ConfigError);
  EXPECT_THROW(pmf(DistSpec::gamma(-1, 1), 0.5), ConfigError);
  EXPECT_THROW(sample(DistSpec::truncated_discrete_gaussian(2, 0), rng), ConfigError);
}

TEST(Dist, DiscretePmfsSumToOne) {
  std::vector<DistSpec> ds = {
      DistSpec::discrete_laplace(10),
      DistSpec::discrete_laplace(0.7),
      DistSpec::discrete_gaussian(3),
      DistSpec::discrete_gaussian(0.4),
      DistSpec::truncated_discrete_laplace(10, 40),
      DistSpec::truncated_discrete_gaussian(5, 9),
      DistSpec::negative_binomial(1.0 / 3, std::exp(-0.1)),
      DistSpec::discrete_uniform(-3, 5),
  };
  for (const auto& d : ds) {
    double s = 0;
    for (int x = -3000; x <= 3000; ++x) s += pmf(d, x);
    EXPECT_NEAR(s, 1.0, 1e-12) << d.name();
  }
}

TEST(Dist, CdfMatchesPmfPartialSums) {
  std::vector<DistSpec> ds = {DistSpec::discrete_laplace(3), DistSpec::discrete_gaussian(2.5),
                              DistSpec::truncated_discrete_laplace(4, 7),
                              DistSpec::truncated_discrete_gaussian(1.5, 4)};
  for (const auto& d : ds) {
    double acc = 0;
    for (int x = -200; x <= 200; ++x) {
      acc += pmf(d, x);
      EXPECT_NEAR(cdf(d, x), acc, 1e-12) << d.name() << " x=" << x;
      EXPECT_NEAR(cdf(d, x + 0.5), acc, 1e-12);
    }
  }
}

TEST(Dist, ContinuousDensitiesIntegrateToOne) {
  std::vector<DistSpec> ds = {DistSpec::laplace(2), DistSpec::gaussian(1.5),
                              DistSpec::gamma(2.5, 1.2), DistSpec::uniform(-1, 3)};
  for (const auto& d : ds) {
    double s = 0, h = 1e-3;
    for (double x = -60 + h / 2; x < 60; x += h) s += pmf(d, x) * h;
    EXPECT_NEAR(s, 1.0, 1e-4) << d.name();
    EXPECT_NEAR(cdf(d, 60) - cdf(d, -60), 1.0, 1e-9);
  }
}

TEST(Dist, PmfRealAgreesWithDouble) {
  auto d = DistSpec::truncated_discrete_laplace(10, 1025);
  for (int x : {-1024, -17, 0, 3, 500}) {
    EXPECT_NEAR(static_cast<double>(pmf_real(d, x)), pmf(d, x), 1e-15);
  }
  auto g = DistSpec::discrete_gaussian(48.43);
  EXPECT_NEAR(static_cast<double>(pmf_real(g, 10)), pmf(g, 10), 1e-15);
  EXPECT_EQ(pmf_real(d, 1025), 0);
}

TEST(Dist, DiscreteGaussianAcceptanceRates) {
  for (double s : {1.0, 1.5, 2.0, 5.0, 48.43}) {
    std::mt19937_64 rng(5);
    RejectionStats st;
    for (int i = 0; i < 20000; ++i) sample_discrete_gaussian(s, 0, rng, &st);
    EXPECT_GE(st.rate(), 0.64) << "sigma=" << s;
  }
  for (double s : {0.3, 0.5, 0.9}) {
    std::mt19937_64 rng(6);
    RejectionStats st;
    for (int i = 0; i < 20000; ++i) sample_discrete_gaussian(s, 0, rng, &st);
    EXPECT_GE(st.rate(), 0.54) << "sigma=" << s;
  }
}

TEST(Dist, DiscreteGaussianVariance) {
  std::mt19937_64 rng(7);
  auto d = DistSpec::discrete_gaussian(3);
  Moments m = moments(200000, [&] { return sample(d, rng); });
  EXPECT_NEAR(m.var / variance(d), 1.0, 0.02);
  EXPECT_NEAR(variance(d), 9.0, 1e-6);
}

TEST(Dist, RejectionScaleRule) {
  EXPECT_DOUBLE_EQ(gaussian_rejection_scale(2.0), 2.0);
  EXPECT_DOUBLE_EQ(gaussian_rejection_scale(2.6), 2.6 * 2.6 / 3);
  EXPECT_DOUBLE_EQ(gaussian_rejection_scale(0.5), 0.5);
  EXPECT_DOUBLE_EQ(gaussian_rejection_scale(0.3), 0.09 * 4);
}

TEST(Dist, MechanismNoiseIsMeanZero) {
  std::vector<double> zeros(100000, 0.0);
  for (auto mech : {Mechanism::kLaplace, Mechanism::kGaussian, Mechanism::kDiscreteLaplace,
                    Mechanism::kDiscreteGaussian}) {
    std::mt19937_64 rng(8);
    auto out = cdp_mechanism(zeros, mech, 0.5, 1e-5, 1, rng);
    double mean = std::accumulate(out.begin(), out.end(), 0.0) / double(out.size());
    double sd = 0;
    for (double x : out) sd += (x - mean) * (x - mean);
    sd = std::sqrt(sd / double(out.size()));
    EXPECT_LE(std::fabs(mean), 4 * sd / std::sqrt(double(out.size())));
  }
  std::mt19937_64 rng(9);
  EXPECT_THROW(cdp_mechanism(zeros, Mechanism::kGaussian, 1.0, 1e-5, 1, rng), ConfigError);
  EXPECT_EQ(parse_mechanism("d-laplace"), Mechanism::kDiscreteLaplace);
  EXPECT_THROW(parse_mechanism("cauchy"), ConfigError);
}

TEST(Dist, LaplaceMechanismMse) {
  auto counts = synthetic_zipf();
  ASSERT_EQ(counts.size(), kKosarakKeys);
  for (auto [eps, want, tol] : {std::tuple{0.1, 200.0, 0.05}, std::tuple{0.5, 8.0, 0.05}}) {
    std::mt19937_64 rng(10);
    auto noisy = cdp_mechanism(counts, Mechanism::kLaplace, eps, 0, 1, rng);
    auto rep = utility(counts, noisy);
    EXPECT_NEAR(rep.mse / want, 1.0, tol) << eps;
  }
  std::mt19937_64 rng(11);
  auto noisy = cdp_mechanism(counts, Mechanism::kLaplace, 1e6, 0, 1, rng);
  EXPECT_LT(utility(counts, noisy).mse, 1e-9);
}

TEST(Dist, GammaPairAggregatesToLaplace) {
  PartialNoiseSpec s{PartialKind::kGammaPair, 0.5, 1e-5, 1, 0};
  const unsigned m = 5;
  std::mt19937_64 rng(12);
  Moments mo = moments(100000, [&] {
    std::vector<std::vector<double>> parts;
    for (unsigned i = 0; i < m; ++i) parts.push_back(dng_partial(s, m, rng));
    return dng_aggregate(s, parts);
  });
  EXPECT_NEAR(mo.var / (2 * 2.0 * 2.0), 1.0, 0.03);
}

TEST(Dist, FourGaussiansAggregateToLaplace) {
  PartialNoiseSpec s{PartialKind::kFourGaussians, 0.5, 1e-5, 1, 0};
  const unsigned m = 4;
  std::mt19937_64 rng(13);
  Moments mo = moments(100000, [&] {
    std::vector<std::vector<double>> parts;
    for (unsigned i = 0; i < m; ++i) parts.push_back(dng_partial(s, m, rng));
    return dng_aggregate(s, parts);
  });
  EXPECT_NEAR(mo.mean, 0.0, 0.05);
  EXPECT_NEAR(mo.var / 8.0, 1.0, 0.04);
  // Tail of Laplace(2): P(X > 4) = e^-2 / 2.
}

TEST(Dist, LaplaceBetaAggregate) {
  PartialNoiseSpec s{PartialKind::kLaplaceBeta, 1.0, 1e-5, 1, 0};
  std::mt19937_64 rng(14);
  auto one = dng_partial(s, 1, rng);
  ASSERT_EQ(one.size(), 2u);
  EXPECT_EQ(one[1], 1.0);
  EXPECT_EQ(dng_aggregate(s, {one}), one[0]);
  EXPECT_THROW(dng_aggregate(s, {{1.0}}), ShapeError);
}

TEST(Dist, NegativeBinomialSumIsGeometric) {
  PartialNoiseSpec s{PartialKind::kNegativeBinomial, 0.1, 1e-5, 1, 0};
  const unsigned m = 3;
  const double p = std::exp(-0.1);
  std::mt19937_64 rng(15);
  std::vector<double> hist(60, 0);
  const int trials = 100000;
  double sum = 0;
  for (int i = 0; i < trials; ++i) {
    std::vector<std::vector<double>> parts;
    for (unsigned j = 0; j < m; ++j) parts.push_back(dng_partial(s, m, rng));
    double v = dng_aggregate(s, parts);
    sum += v;
    if (v < 60) hist[std::size_t(v)] += 1;
  }
  EXPECT_NEAR(sum / trials / (p / (1 - p)), 1.0, 0.02);
  double ks = 0, acc = 0, ref = 0;
  for (int k = 0; k < 60; ++k) {
    acc += hist[k] / trials;
    ref += (1 - p) * std::pow(p, k);
    ks = std::max(ks, std::fabs(acc - ref));
  }
  EXPECT_LT(ks, 1.63 / std::sqrt(double(trials)));
}

TEST(Dist, SinglePartyPartialIsTarget) {
  PartialNoiseSpec s{PartialKind::kGaussian, 0.5, 1e-5, 1, 0};
  std::mt19937_64 rng(16);
  Moments mo = moments(100000, [&] { return dng_partial(s, 1, rng)[0]; });
  double v = 2 * std::log(1.25e5) * 4;
  EXPECT_NEAR(mo.var / v, 1.0, 0.02);
}

TEST(Dist, CollusionAdjust) {
  EXPECT_DOUBLE_EQ(collusion_adjust(7, 0), 7);
  EXPECT_DOUBLE_EQ(collusion_adjust(2, 1.0 / 3), 3);
  EXPECT_NEAR(collusion_adjust(1, 0.9), 10, 1e-12);
  EXPECT_THROW(collusion_adjust(1, 1), ConfigError);
  EXPECT_THROW(collusion_adjust(1, -0.1), ConfigError);
}

TEST(Dist, HonestSubsetVarianceRatio) {
  const unsigned m = 10;
  for (double alpha : {1.0 / 3, 0.5, 0.9}) {
    unsigned honest = static_cast<unsigned>(std::lround(m * (1 - alpha)));
    PartialNoiseSpec s{PartialKind::kGaussian, 0.5, 1e-5, 1, alpha};
    std::mt19937_64 rng(17);
    Moments mo = moments(40000, [&] {
      double acc = 0;
      for (unsigned i = 0; i < honest; ++i) acc += dng_partial(s, m, rng)[0];
      return acc;
    });
    double target = 2 * std::log(1.25e5) * 4;
    EXPECT_NEAR(mo.var / target, 1.0, 0.05) << alpha;
  }
}

TEST(Dist, UtilityMetrics) {
  std::vector<double> t = {1, 2, 0, 4};
  auto r0 = utility(t, t);
  EXPECT_EQ(r0.mse, 0);
  EXPECT_EQ(r0.mae, 0);
  EXPECT_EQ(r0.re, 0);
  EXPECT_EQ(r0.zero_keys_skipped, 1u);
  std::vector<double> off = {3, 4, 2, 6};
  auto r = utility(t, off);
  EXPECT_DOUBLE_EQ(r.mae, 2);
  EXPECT_DOUBLE_EQ(r.mse, 4);
  EXPECT_NEAR(r.re, 100.0 * (2.0 + 1.0 + 0.5) / 3, 1e-12);
  EXPECT_THROW(utility(t, {1.0}), ShapeError);
}

TEST(Dist, DatasetRoundTrip) {
  auto z = synthetic_zipf(100);
  EXPECT_EQ(z.size(), 100u);
  for (double c : z) EXPECT_GE(c, 1);
  std::string path = ::testing::TempDir() + "/counts.txt";
  save_counts(path, z);
  EXPECT_EQ(load_counts(path), z);
  std::string tx = ::testing::TempDir() + "/tx.dat";
  {
    std::ofstream out(tx);
    out << "1 2 3\n2 3\n3 5\n";
  }
  auto c = kosarak_counts(tx);
  EXPECT_EQ(c, (std::vector<double>{1, 2, 3, 0, 1}));
  EXPECT_THROW(load_counts("/nonexistent/file"), ConfigError);
}
