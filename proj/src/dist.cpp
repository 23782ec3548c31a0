#include "ddpbench/dist.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "ddpbench/errors.hpp"
#include "ddpbench/params.hpp"

namespace ddpbench {

namespace {

double dlap_q(double t) { return std::exp(-1.0 / t); }

std::int64_t sample_dlap(double t, std::mt19937_64& rng) {
  std::geometric_distribution<std::int64_t> geo(1.0 - dlap_q(t));
  return geo(rng) - geo(rng);
}

std::int64_t sample_tdlap(double t, std::int64_t N, std::mt19937_64& rng) {
  for (;;) {
    std::int64_t x = sample_dlap(t, rng);
    if (N <= 0 || std::llabs(x) < N) return x;
  }
}

// Summation horizon beyond which Gaussian terms vanish in double precision.
std::int64_t gauss_horizon(double sigma) {
  return static_cast<std::int64_t>(std::ceil(40.0 * sigma)) + 2;
}

double dgau_norm(double sigma, std::int64_t N) {
  std::int64_t h = gauss_horizon(sigma);
  if (N > 0) h = std::min(h, N - 1);
  double z = 1;
  for (std::int64_t k = 1; k <= h; ++k) z += 2 * std::exp(-double(k * k) / (2 * sigma * sigma));
  return z;
}

bool is_integer(double x) { return std::floor(x) == x; }

}  // namespace

bool DistSpec::discrete() const {
  switch (family) {
    case Family::kUniform:
    case Family::kLaplace:
    case Family::kGaussian:
    case Family::kGamma:
      return false;
    default:
      return true;
  }
}

std::string DistSpec::name() const {
  switch (family) {
    case Family::kBernoulli: return "bernoulli";
    case Family::kUniform: return "uniform";
    case Family::kDiscreteUniform: return "discrete-uniform";
    case Family::kLaplace: return "laplace";
    case Family::kGaussian: return "gaussian";
    case Family::kDiscreteLaplace: return "discrete-laplace";
    case Family::kDiscreteGaussian: return "discrete-gaussian";
    case Family::kNegativeBinomial: return "negative-binomial";
    case Family::kGamma: return "gamma";
    case Family::kTruncatedDiscreteLaplace: return "truncated-discrete-laplace";
    case Family::kTruncatedDiscreteGaussian: return "truncated-discrete-gaussian";
  }
  return "unknown";
}

void validate(const DistSpec& d) {
  auto fail = [&](const char* why) { throw ConfigError(d.name() + ": " + why); };
  switch (d.family) {
    case Family::kBernoulli:
      if (!(d.a >= 0 && d.a <= 1)) fail("p outside [0,1]");
      break;
    case Family::kUniform:
      if (!(d.a < d.b)) fail("need a < b");
      break;
    case Family::kDiscreteUniform:
      if (!(d.a < d.b) || !is_integer(d.a) || !is_integer(d.b)) fail("need integers a < b");
      break;
    case Family::kLaplace:
    case Family::kGaussian:
    case Family::kDiscreteLaplace:
    case Family::kDiscreteGaussian:
      if (!(d.a > 0)) fail("scale must be positive");
      break;
    case Family::kNegativeBinomial:
      if (!(d.a > 0) || !(d.b >= 0 && d.b < 1)) fail("need r > 0 and p in [0,1)");
      break;
    case Family::kGamma:
      if (!(d.a > 0) || !(d.b > 0)) fail("need shape, scale > 0");
      break;
    case Family::kTruncatedDiscreteLaplace:
    case Family::kTruncatedDiscreteGaussian:
      if (!(d.a > 0) || d.N < 1) fail("need positive scale and N >= 1");
      break;
  }
}

double gaussian_rejection_scale(double sigma) {
  if (!(sigma > 0)) throw ConfigError("sigma must be positive");
  if (sigma >= 1) return sigma * sigma / std::round(sigma);
  return sigma * sigma * std::ceil(1.0 / sigma);
}

std::int64_t sample_discrete_gaussian(double sigma, std::int64_t N, std::mt19937_64& rng,
                                      RejectionStats* stats) {
  const double t = gaussian_rejection_scale(sigma);
  const double k = sigma * sigma / t;
  std::uniform_real_distribution<double> unif(0, 1);
  for (;;) {
    std::int64_t x = sample_tdlap(t, N, rng);
    double d = std::fabs(double(x)) - k;
    bool accept = unif(rng) < std::exp(-d * d / (2 * sigma * sigma));
    if (stats) {
      ++stats->proposals;
      stats->accepted += accept;
    }
    if (accept) return x;
  }
}

double sample(const DistSpec& d, std::mt19937_64& rng) {
  validate(d);
  switch (d.family) {
    case Family::kBernoulli:
      return std::bernoulli_distribution(d.a)(rng) ? 1.0 : 0.0;
    case Family::kUniform:
      return std::uniform_real_distribution<double>(d.a, d.b)(rng);
    case Family::kDiscreteUniform:
      return double(std::uniform_int_distribution<std::int64_t>(
          std::int64_t(d.a), std::int64_t(d.b) - 1)(rng));
    case Family::kLaplace: {
      double e = std::exponential_distribution<double>(1.0)(rng);
      return (rng() & 1 ? 1 : -1) * d.a * e;
    }
    case Family::kGaussian:
      return std::normal_distribution<double>(0, d.a)(rng);
    case Family::kDiscreteLaplace:
      return double(sample_dlap(d.a, rng));
    case Family::kDiscreteGaussian:
      return double(sample_discrete_gaussian(d.a, 0, rng));
    case Family::kNegativeBinomial: {
      if (d.b == 0) return 0;
      double lam = std::gamma_distribution<double>(d.a, d.b / (1 - d.b))(rng);
      if (lam <= 0) return 0;
      return double(std::poisson_distribution<std::int64_t>(lam)(rng));
    }
    case Family::kGamma:
      return std::gamma_distribution<double>(d.a, d.b)(rng);
    case Family::kTruncatedDiscreteLaplace:
      return double(sample_tdlap(d.a, d.N, rng));
    case Family::kTruncatedDiscreteGaussian:
      return double(sample_discrete_gaussian(d.a, d.N, rng));
  }
  return 0;
}

double pmf(const DistSpec& d, double x) {
  validate(d);
  if (d.discrete() && !is_integer(x)) return 0;
  switch (d.family) {
    case Family::kBernoulli:
      return x == 1 ? d.a : (x == 0 ? 1 - d.a : 0);
    case Family::kUniform:
      return (x >= d.a && x <= d.b) ? 1 / (d.b - d.a) : 0;
    case Family::kDiscreteUniform:
      return (x >= d.a && x < d.b) ? 1 / (d.b - d.a) : 0;
    case Family::kLaplace:
      return std::exp(-std::fabs(x) / d.a) / (2 * d.a);
    case Family::kGaussian:
      return std::exp(-x * x / (2 * d.a * d.a)) / (d.a * std::sqrt(2 * M_PI));
    case Family::kDiscreteLaplace: {
      double q = dlap_q(d.a);
      return (1 - q) / (1 + q) * std::pow(q, std::fabs(x));
    }
    case Family::kDiscreteGaussian:
      return std::exp(-x * x / (2 * d.a * d.a)) / dgau_norm(d.a, 0);
    case Family::kNegativeBinomial:
      if (x < 0) return 0;
      if (d.b == 0) return x == 0 ? 1 : 0;
      return std::exp(std::lgamma(x + d.a) - std::lgamma(d.a) - std::lgamma(x + 1) +
                      x * std::log(d.b) + d.a * std::log1p(-d.b));
    case Family::kGamma:
      if (x < 0) return 0;
      return std::exp((d.a - 1) * std::log(x) - x / d.b - std::lgamma(d.a) -
                      d.a * std::log(d.b));
    case Family::kTruncatedDiscreteLaplace: {
      if (std::fabs(x) >= double(d.N)) return 0;
      double q = dlap_q(d.a);
      double z = (1 + q - 2 * std::pow(q, double(d.N))) / (1 - q);
      return std::pow(q, std::fabs(x)) / z;
    }
    case Family::kTruncatedDiscreteGaussian:
      if (std::fabs(x) >= double(d.N)) return 0;
      return std::exp(-x * x / (2 * d.a * d.a)) / dgau_norm(d.a, d.N);
  }
  return 0;
}

double cdf(const DistSpec& d, double x) {
  validate(d);
  const double fx = std::floor(x);
  switch (d.family) {
    case Family::kBernoulli:
      return x < 0 ? 0 : (x < 1 ? 1 - d.a : 1);
    case Family::kUniform:
      return std::clamp((x - d.a) / (d.b - d.a), 0.0, 1.0);
    case Family::kDiscreteUniform:
      return std::clamp((fx - d.a + 1) / (d.b - d.a), 0.0, 1.0);
    case Family::kLaplace:
      return x < 0 ? 0.5 * std::exp(x / d.a) : 1 - 0.5 * std::exp(-x / d.a);
    case Family::kGaussian:
      return 0.5 * std::erfc(-x / (d.a * std::sqrt(2.0)));
    case Family::kDiscreteLaplace: {
      double q = dlap_q(d.a);
      return fx < 0 ? std::pow(q, -fx) / (1 + q) : 1 - std::pow(q, fx + 1) / (1 + q);
    }
    case Family::kTruncatedDiscreteLaplace: {
      double Nd = double(d.N);
      if (fx <= -Nd) return 0;
      if (fx >= Nd - 1) return 1;
      double q = dlap_q(d.a);
      double qN = std::pow(q, Nd);
      double scale = 1 + q - 2 * qN;
      return fx < 0 ? (std::pow(q, -fx) - qN) / scale
                    : 1 - (std::pow(q, fx + 1) - qN) / scale;
    }
    case Family::kDiscreteGaussian:
    case Family::kTruncatedDiscreteGaussian: {
      std::int64_t h = gauss_horizon(d.a);
      if (d.N > 0) h = std::min(h, d.N - 1);
      if (fx < -double(h)) return 0;
      if (fx >= double(h)) return 1;
      double z = dgau_norm(d.a, d.N), acc = 0;
      for (std::int64_t k = -h; k <= std::int64_t(fx); ++k)
        acc += std::exp(-double(k * k) / (2 * d.a * d.a));
      return std::min(1.0, acc / z);
    }
    case Family::kNegativeBinomial: {
      if (fx < 0) return 0;
      double acc = 0;
      for (std::int64_t k = 0; k <= std::int64_t(fx); ++k) acc += pmf(d, double(k));
      return std::min(1.0, acc);
    }
    case Family::kGamma:
      return x <= 0 ? 0 : boost::math::gamma_p(d.a, x / d.b);
  }
  return 0;
}

double variance(const DistSpec& d) {
  validate(d);
  switch (d.family) {
    case Family::kBernoulli: return d.a * (1 - d.a);
    case Family::kUniform: return (d.b - d.a) * (d.b - d.a) / 12;
    case Family::kDiscreteUniform: return ((d.b - d.a) * (d.b - d.a) - 1) / 12;
    case Family::kLaplace: return 2 * d.a * d.a;
    case Family::kGaussian: return d.a * d.a;
    case Family::kDiscreteLaplace: {
      double q = dlap_q(d.a);
      return 2 * q / ((1 - q) * (1 - q));
    }
    case Family::kNegativeBinomial: return d.a * d.b / ((1 - d.b) * (1 - d.b));
    case Family::kGamma: return d.a * d.b * d.b;
    case Family::kDiscreteGaussian:
    case Family::kTruncatedDiscreteGaussian:
    case Family::kTruncatedDiscreteLaplace: {
      std::int64_t h = d.family == Family::kTruncatedDiscreteLaplace
                           ? d.N - 1
                           : gauss_horizon(d.a);
      if (d.N > 0) h = std::min(h, d.N - 1);
      double v = 0;
      for (std::int64_t k = 1; k <= h; ++k) v += 2 * double(k) * double(k) * pmf(d, double(k));
      return v;
    }
  }
  return 0;
}

namespace {

// Unnormalised weight and normaliser for the discrete Laplace/Gaussian families.
struct RealPmf {
  Family family;
  std::int64_t N = 0;
  Real q, s2, z;

  explicit RealPmf(const DistSpec& d) : family(d.family), N(d.N) {
    ensure_precision();
    validate(d);
    switch (d.family) {
      case Family::kDiscreteLaplace:
        q = exp(Real(-1) / Real(d.a));
        z = (1 + q) / (1 - q);
        break;
      case Family::kTruncatedDiscreteLaplace:
        q = exp(Real(-1) / Real(d.a));
        z = (1 + q - 2 * pow(q, Real(d.N))) / (1 - q);
        break;
      case Family::kDiscreteGaussian:
      case Family::kTruncatedDiscreteGaussian: {
        s2 = 2 * Real(d.a) * Real(d.a);
        // Terms below 2^-precision are dropped.
        std::int64_t h = static_cast<std::int64_t>(
                             std::ceil(d.a * std::sqrt(2.0 * precision_bits()))) + 2;
        if (d.N > 0) h = std::min(h, d.N - 1);
        z = 1;
        for (std::int64_t k = 1; k <= h; ++k) z += 2 * exp(-Real(k) * Real(k) / s2);
        break;
      }
      default:
        throw ConfigError("pmf_real supports discrete Laplace/Gaussian families only");
    }
  }

  Real operator()(std::int64_t x) const {
    Real ax = Real(x < 0 ? -x : x);
    if (N > 0 && family != Family::kDiscreteLaplace && ax >= N) return Real(0);
    if (family == Family::kDiscreteLaplace || family == Family::kTruncatedDiscreteLaplace)
      return pow(q, ax) / z;
    return exp(-ax * ax / s2) / z;
  }
};

}  // namespace

Real pmf_real(const DistSpec& d, std::int64_t x) { return RealPmf(d)(x); }

std::vector<Real> pmf_real_range(const DistSpec& d, std::int64_t lo, std::int64_t hi) {
  RealPmf f(d);
  std::vector<Real> out;
  for (std::int64_t x = lo; x <= hi; ++x) out.push_back(f(x));
  return out;
}

// --- Mechanisms ---------------------------------------------------------

Mechanism parse_mechanism(const std::string& s) {
  if (s == "laplace") return Mechanism::kLaplace;
  if (s == "gaussian") return Mechanism::kGaussian;
  if (s == "d-laplace") return Mechanism::kDiscreteLaplace;
  if (s == "d-gaussian") return Mechanism::kDiscreteGaussian;
  throw ConfigError("unknown mechanism '" + s + "'");
}

std::vector<double> cdp_mechanism(const std::vector<double>& values, Mechanism mech,
                                  double epsilon, double delta, double Delta,
                                  std::mt19937_64& rng) {
  if (!(epsilon > 0) || !(Delta > 0)) throw ConfigError("epsilon and Delta must be positive");
  DistSpec noise;
  switch (mech) {
    case Mechanism::kLaplace: noise = DistSpec::laplace(Delta / epsilon); break;
    case Mechanism::kDiscreteLaplace: noise = DistSpec::discrete_laplace(Delta / epsilon); break;
    case Mechanism::kGaussian:
      noise = DistSpec::gaussian(gaussian_sigma(epsilon, delta, Delta));
      break;
    case Mechanism::kDiscreteGaussian:
      noise = DistSpec::discrete_gaussian(gaussian_sigma(epsilon, delta, Delta));
      break;
  }
  std::vector<double> out(values);
  for (auto& v : out) v += sample(noise, rng);
  return out;
}

// --- Distributed partial noise ------------------------------------------

std::vector<double> dng_partial(const PartialNoiseSpec& s, unsigned m, std::mt19937_64& rng) {
  if (m < 1) throw ConfigError("need at least one party");
  if (!(s.epsilon > 0) || !(s.Delta > 0)) throw ConfigError("epsilon and Delta must be positive");
  const double b = s.Delta / s.epsilon;
  switch (s.kind) {
    case PartialKind::kGammaPair: {
      DistSpec g = DistSpec::gamma(1.0 / m, b);
      return {sample(g, rng), sample(g, rng)};
    }
    case PartialKind::kFourGaussians: {
      // Each aggregated N_j has variance b/2, so sum of +-N_j^2 is Laplace(b).
      std::normal_distribution<double> nd(0, std::sqrt(b / (2.0 * m)));
      return {nd(rng), nd(rng), nd(rng), nd(rng)};
    }
    case PartialKind::kLaplaceBeta: {
      double beta = 1;
      if (m > 1) {
        double x = std::gamma_distribution<double>(1, 1)(rng);
        double y = std::gamma_distribution<double>(m - 1, 1)(rng);
        beta = x / (x + y);
      }
      return {sample(DistSpec::laplace(b), rng), beta};
    }
    case PartialKind::kNegativeBinomial:
      return {sample(DistSpec::negative_binomial(1.0 / m, std::exp(-1.0 / b)), rng)};
    case PartialKind::kGaussian: {
      double v = 2 * std::log(1.25 / s.delta) * s.Delta * s.Delta / (s.epsilon * s.epsilon);
      v = collusion_adjust(v / m, s.collusion_fraction);
      return {std::normal_distribution<double>(0, std::sqrt(v))(rng)};
    }
  }
  return {};
}

double dng_aggregate(const PartialNoiseSpec& s, const std::vector<std::vector<double>>& parts) {
  if (parts.empty()) throw ShapeError("no partials");
  const std::size_t want = s.kind == PartialKind::kFourGaussians ? 4
                           : (s.kind == PartialKind::kGammaPair ||
                              s.kind == PartialKind::kLaplaceBeta)
                               ? 2
                               : 1;
  for (const auto& p : parts)
    if (p.size() != want) throw ShapeError("partial has wrong arity");
  switch (s.kind) {
    case PartialKind::kGammaPair: {
      double acc = 0;
      for (const auto& p : parts) acc += p[0] - p[1];
      return acc;
    }
    case PartialKind::kFourGaussians: {
      double nj[4] = {0, 0, 0, 0};
      for (const auto& p : parts)
        for (int j = 0; j < 4; ++j) nj[j] += p[j];
      return -nj[0] * nj[0] + nj[1] * nj[1] - nj[2] * nj[2] + nj[3] * nj[3];
    }
    case PartialKind::kLaplaceBeta: {
      double acc = 0;
      for (const auto& p : parts) acc += p[0];
      return std::sqrt(parts[0][1]) * acc;
    }
    case PartialKind::kNegativeBinomial:
    case PartialKind::kGaussian: {
      double acc = 0;
      for (const auto& p : parts) acc += p[0];
      return acc;
    }
  }
  return 0;
}

double collusion_adjust(double sigma2, double alpha) {
  if (!(alpha >= 0 && alpha < 1)) throw ConfigError("collusion fraction must be in [0,1)");
  return sigma2 / (1 - alpha);
}

// --- Utility ------------------------------------------------------------

UtilityReport utility(const std::vector<double>& truth, const std::vector<double>& noisy) {
  if (truth.size() != noisy.size()) throw ShapeError("utility: length mismatch");
  UtilityReport r;
  if (truth.empty()) return r;
  std::size_t re_n = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    double e = truth[i] - noisy[i];
    r.mse += e * e;
    r.mae += std::fabs(e);
    if (truth[i] == 0) {
      ++r.zero_keys_skipped;
    } else {
      r.re += std::fabs(e / truth[i]);
      ++re_n;
    }
  }
  r.mse /= double(truth.size());
  r.mae /= double(truth.size());
  r.re = re_n ? 100.0 * r.re / double(re_n) : 0.0;
  return r;
}

// --- Datasets -----------------------------------------------------------

std::vector<double> load_counts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset '" + path + "'");
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    long long v;
    std::string rest;
    if (!(ss >> v) || (ss >> rest))
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected one integer");
    out.push_back(double(v));
  }
  return out;
}

void save_counts(const std::string& path, const std::vector<double>& counts) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  for (double c : counts) out << static_cast<long long>(std::llround(c)) << '\n';
}

std::vector<double> kosarak_counts(const std::string& transactions_path) {
  std::ifstream in(transactions_path);
  if (!in) throw ConfigError("cannot open '" + transactions_path + "'");
  std::map<long long, double> counts;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    long long id;
    while (ss >> id) counts[id] += 1;
    if (!ss.eof()) throw ParseError("non-integer item id in '" + transactions_path + "'");
  }
  if (counts.empty()) return {};
  long long lo = counts.begin()->first, hi = counts.rbegin()->first;
  std::vector<double> out(static_cast<std::size_t>(hi - lo + 1), 0.0);
  for (auto& [id, c] : counts) out[static_cast<std::size_t>(id - lo)] = c;
  return out;
}

std::vector<double> synthetic_zipf(std::size_t keys, double s, double total_clicks) {
  double h = 0;
  for (std::size_t k = 1; k <= keys; ++k) h += std::pow(double(k), -s);
  std::vector<double> out(keys);
  for (std::size_t k = 1; k <= keys; ++k)
    out[k - 1] = std::max(1.0, std::round(total_clicks * std::pow(double(k), -s) / h));
  return out;
}

}  // namespace ddpbench
