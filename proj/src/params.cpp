#include "ddpbench/params.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <tuple>

#include "ddpbench/coins.hpp"
#include "ddpbench/dist.hpp"
#include "ddpbench/errors.hpp"

namespace ddpbench {

namespace {

struct ProtocolName {
  ProtocolId id;
  const char* name;
};

constexpr ProtocolName kNames[] = {
    {ProtocolId::kOdoLaplace, "odo-laplace"},
    {ProtocolId::kOstackLaplace, "ostack-laplace"},
    {ProtocolId::kOstackLaplaceStar, "ostack-laplace-star"},
    {ProtocolId::kDngLaplace, "dng-laplace"},
    {ProtocolId::kTransLaplace, "trans-laplace"},
    {ProtocolId::kOdoGaussian, "odo-gaussian"},
    {ProtocolId::kOstackGaussian, "ostack-gaussian"},
    {ProtocolId::kDngGaussian, "dng-gaussian"},
};

Real real_of(double x) { return Real(x); }

std::string log2_field(const Real& x) {
  if (x <= 0) return "-inf";
  std::ostringstream os;
  os.precision(10);
  os << log2_of(x);
  return os.str();
}

std::string num(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

unsigned bits_for_u128(unsigned __int128 v) {
  unsigned w = 1;
  while (w < 128 && (v >> w) != 0) ++w;
  return w;
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

// Smallest even u with u/2 > g-1 and calls*e^(-2(u/2-(g-1))^2/u) <= budget.
std::uint64_t solve_u(std::uint64_t calls, std::uint64_t g, const Real& budget) {
  auto ok = [&](std::uint64_t u) { return ostack_delta_p(calls, g, u) <= budget; };
  std::uint64_t lo = 2 * g;  // even, u/2 = g > g-1
  std::uint64_t hi = lo;
  while (!ok(hi)) {
    hi *= 2;
    if (hi > (std::uint64_t{1} << 40)) throw ConfigError("no feasible push budget u");
  }
  // Search over even values u = 2j.
  std::uint64_t jl = lo / 2, jh = hi / 2;
  while (jl < jh) {
    std::uint64_t mid = jl + (jh - jl) / 2;
    if (ok(2 * mid)) jh = mid;
    else jl = mid + 1;
  }
  return 2 * jl;
}

struct CoinKind {
  std::uint64_t count;  // coins of this bias
  int periodic;         // a_log2 or -1
};

}  // namespace

const std::vector<ProtocolId>& all_protocols() {
  static const std::vector<ProtocolId> v = [] {
    std::vector<ProtocolId> out;
    for (const auto& n : kNames) out.push_back(n.id);
    return out;
  }();
  return v;
}

std::string to_string(ProtocolId id) {
  for (const auto& n : kNames)
    if (n.id == id) return n.name;
  return "unknown";
}

ProtocolId parse_protocol(const std::string& s) {
  for (const auto& n : kNames)
    if (s == n.name) return n.id;
  throw ConfigError("unknown protocol id '" + s + "'");
}

bool is_gaussian(ProtocolId id) {
  return id == ProtocolId::kOdoGaussian || id == ProtocolId::kOstackGaussian ||
         id == ProtocolId::kDngGaussian;
}

bool uses_ostack(ProtocolId id) {
  return id == ProtocolId::kOstackLaplace || id == ProtocolId::kOstackLaplaceStar ||
         id == ProtocolId::kOstackGaussian;
}

bool uses_dng(ProtocolId id) {
  return id == ProtocolId::kDngLaplace || id == ProtocolId::kDngGaussian;
}

namespace {
double gaussian_sigma_unchecked(double epsilon, double delta, double Delta) {
  return Delta * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}
}  // namespace

double gaussian_sigma(double epsilon, double delta, double Delta) {
  if (!(epsilon > 0 && epsilon < 1))
    throw ConfigError("gaussian_sigma needs epsilon in (0,1)");
  if (!(delta > 0 && delta < 1)) throw ConfigError("gaussian_sigma needs delta in (0,1)");
  if (!(Delta > 0)) throw ConfigError("gaussian_sigma needs Delta > 0");
  return gaussian_sigma_unchecked(epsilon, delta, Delta);
}

Real laplace_delta_t(std::uint64_t n, double epsilon, double Delta, std::uint64_t N) {
  ensure_precision();
  Real e = real_of(epsilon), d = real_of(Delta);
  Real num = 2 * Real(n) * exp(-e * Real(N - 1) / d);
  return num / (exp(e / d) + 1);
}

Real gaussian_delta_t(std::uint64_t n, double sigma, std::uint64_t N) {
  ensure_precision();
  Real s = real_of(sigma), NN = Real(N);
  return 2 * Real(n) * exp(-(NN * NN) / (2 * s * s));
}

Real ostack_delta_p(std::uint64_t calls, std::uint64_t g, std::uint64_t u) {
  ensure_precision();
  if (calls == 0) return Real(0);
  Real half = Real(u) / 2 - Real(g - 1);
  if (half <= 0) return Real(calls);
  return Real(calls) * exp(-2 * half * half / Real(u));
}

Real rejection_delta_r(std::uint64_t n, std::uint64_t n_prime, const Real& p_star_lower) {
  ensure_precision();
  Real gap = Real(n_prime) * p_star_lower - Real(n);
  if (gap <= 0) return Real(1);
  return exp(-2 * gap * gap / Real(n_prime));
}

Real gaussian_p_star(double sigma, double t, std::uint64_t N) {
  ensure_precision();
  static std::mutex mu;
  static std::map<std::tuple<double, double, std::uint64_t>, Real> cache;
  {
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find({sigma, t, N});
    if (it != cache.end()) return it->second;
  }
  Real s2 = real_of(sigma) * real_of(sigma);
  Real tt = real_of(t);
  // Gaussian mass over |x| < N by the recurrence w(x+1) = w(x) e^-(2x+1)/(2 s2).
  Real step = exp(-1 / (2 * s2));  // ratio w(1)/w(0)
  Real step_growth = exp(-1 / s2);
  Real cutoff = pow2(-static_cast<long>(precision_bits()) - 16);
  Real w = 1, ratio = step, zg = 1;
  for (std::uint64_t x = 1; x < N; ++x) {
    w *= ratio;
    ratio *= step_growth;
    zg += 2 * w;
    if (w < cutoff) break;
  }
  Real q = exp(-1 / tt);
  Real zl = (1 + q - 2 * pow(q, Real(N))) / (1 - q);
  Real p = zg / zl * exp(-s2 / (2 * tt * tt));
  std::lock_guard<std::mutex> lk(mu);
  cache.emplace(std::make_tuple(sigma, t, N), p);
  return p;
}

RejectionGeometry rejection_geometry(double sigma, unsigned kappa) {
  RejectionGeometry g;
  if (sigma >= 1) {
    g.c = 1;
    g.k = static_cast<std::uint64_t>(std::llround(sigma));
    g.r = 2 * sigma * sigma;
  } else {
    g.c = static_cast<std::uint64_t>(std::ceil(1.0 / sigma));
    g.k = 1;
    g.r = 2 * sigma * sigma * double(g.c) * double(g.c);
  }
  unsigned __int128 top = static_cast<unsigned __int128>(g.c) << kappa;
  unsigned __int128 a = g.k, b = top > g.k ? top - g.k : g.k - top;
  unsigned __int128 umax = std::max(a * a, b * b);
  g.width = bits_for_u128(umax);
  return g;
}

Real geometric_bit_bias(unsigned i, double t) {
  ensure_precision();
  return 1 / (1 + exp(Real(pow2(static_cast<long>(i))) / real_of(t)));
}

Real laplace_zero_bias(double t, std::uint64_t N) {
  ensure_precision();
  Real q = exp(-1 / real_of(t));
  return (1 - q) / (1 + q - 2 * pow(q, Real(N)));
}

int periodic_exponent(unsigned j, unsigned snap_exponent, double Delta) {
  // Bit j has bias 1/(1 + 2^(2^(j - i) / Delta)) at epsilon = 2^-i ln2.
  if (j < snap_exponent) return -1;
  double dl = std::log2(Delta);
  if (Delta < 1 || dl != std::floor(dl)) return -1;
  int a = static_cast<int>(j - snap_exponent) - static_cast<int>(dl);
  return a >= 0 ? a : -1;
}

double ostack_call_cost(std::uint64_t g, std::uint64_t u, std::size_t r, int periodic_a_log2) {
  // Linear model a + b*u fitted from two measured runs per (g, source).
  static std::mutex mu;
  static std::map<std::tuple<std::uint64_t, std::size_t, int>, std::pair<double, double>> cache;
  auto key = std::make_tuple(g, periodic_a_log2 >= 0 ? std::size_t{0} : r, periodic_a_log2);
  std::pair<double, double> fit;
  bool have = false;
  {
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(key);
    if (it != cache.end()) {
      fit = it->second;
      have = true;
    }
  }
  if (!have) {
    auto measure = [&](std::size_t uu) {
      Engine e(2, 0x5eed + uu);
      std::unique_ptr<BitSource> src;
      if (periodic_a_log2 >= 0) {
        src = std::make_unique<PeriodicBiasSource>(e, static_cast<unsigned>(periodic_a_log2));
      } else {
        std::vector<bool> digits(r);
        for (std::size_t i = 0; i < r; ++i) digits[i] = (i % 2 == 0);
        src = std::make_unique<BiasStack>(e, BiasSpec::from_bits(digits), r);
      }
      try {
        ostack_sample(e, g, uu, *src);
      } catch (const AbortUnfilled&) {
      }
      return static_cast<double>(e.ledger().and_gates);
    };
    std::size_t u1 = 2 * g + 64, u2 = 2 * u1;
    double c1 = measure(u1), c2 = measure(u2);
    double b = (c2 - c1) / double(u2 - u1);
    fit = {c1 - b * double(u1), b};
    std::lock_guard<std::mutex> lk(mu);
    cache.emplace(key, fit);
  }
  return fit.first + fit.second * double(u);
}

std::vector<std::pair<std::string, std::string>> ProtocolParams::fields() const {
  return {
      {"protocol", to_string(protocol)},
      {"lambda", std::to_string(lambda)},
      {"epsilon", num(epsilon)},
      {"epsilon_used", num(epsilon_used)},
      {"delta", num(delta)},
      {"Delta", num(Delta)},
      {"n", std::to_string(n)},
      {"m", std::to_string(m)},
      {"sigma", num(sigma)},
      {"t", num(t)},
      {"kappa", std::to_string(kappa)},
      {"N", std::to_string(N)},
      {"l", std::to_string(l)},
      {"n_prime", std::to_string(n_prime)},
      {"u", std::to_string(u)},
      {"g", std::to_string(g)},
      {"log2_delta_t", log2_field(delta_t)},
      {"log2_delta_b", log2_field(delta_b)},
      {"log2_delta_r", log2_field(delta_r)},
      {"log2_delta_p", log2_field(delta_p)},
      {"log2_delta_lambda", log2_field(delta_lambda)},
  };
}

namespace {

unsigned count_terms(ProtocolId id) {
  switch (id) {
    case ProtocolId::kOdoLaplace: return 2;
    case ProtocolId::kOstackLaplace: return 3;
    case ProtocolId::kOstackLaplaceStar: return 3;
    case ProtocolId::kDngLaplace: return 1;
    case ProtocolId::kTransLaplace: return 2;
    case ProtocolId::kOdoGaussian: return 3;
    case ProtocolId::kOstackGaussian: return 4;
    case ProtocolId::kDngGaussian: return 1;
  }
  return 1;
}

Real compute_delta_t(const ProtocolParams& p) {
  if (is_gaussian(p.protocol)) return gaussian_delta_t(p.n, p.sigma, p.N);
  return laplace_delta_t(p.n, p.epsilon_used, p.Delta, p.N);
}

std::uint64_t gaussian_coins_per_trial(const ProtocolParams& p) {
  return 2 * std::uint64_t{p.kappa} + p.reject_coin_count + 2;
}

Real compute_delta_b(const ProtocolParams& p, unsigned l) {
  Real slack = pow2(-static_cast<long>(l));
  switch (p.protocol) {
    case ProtocolId::kOdoLaplace:
    case ProtocolId::kOstackLaplace:
    case ProtocolId::kOstackLaplaceStar:
      return Real(p.n) * Real(p.kappa + 1) * slack;
    case ProtocolId::kTransLaplace:
      return Real(p.n) * slack;
    case ProtocolId::kOdoGaussian:
    case ProtocolId::kOstackGaussian:
      return Real(p.n) / p.p_star * Real(gaussian_coins_per_trial(p)) * slack;
    default:
      return Real(0);
  }
}

Real p_star_lower(const ProtocolParams& p) {
  return p.p_star - Real(gaussian_coins_per_trial(p)) * pow2(-static_cast<long>(p.l));
}

std::vector<CoinKind> ostack_coin_kinds(const ProtocolParams& p) {
  std::vector<CoinKind> kinds;
  if (p.protocol == ProtocolId::kOstackGaussian) {
    for (unsigned i = 0; i < p.kappa + 1 + p.reject_coin_count; ++i)
      kinds.push_back({p.n_prime, -1});
  } else {
    kinds.push_back({p.n, -1});  // zero coin
    for (unsigned j = 0; j < p.kappa; ++j) {
      int a = p.protocol == ProtocolId::kOstackLaplaceStar
                  ? periodic_exponent(j, p.snap_exponent, p.Delta)
                  : -1;
      kinds.push_back({p.n, a});
    }
  }
  return kinds;
}

std::uint64_t ostack_calls_for(const std::vector<CoinKind>& kinds, std::uint64_t g) {
  std::uint64_t m = 0;
  for (const auto& k : kinds) m += ceil_div(k.count, g);
  return m;
}

}  // namespace

ProtocolParams allocate(ProtocolId protocol, unsigned lambda, double epsilon, double delta,
                        double Delta, std::uint64_t n, unsigned m,
                        const AllocateOptions& opt) {
  ensure_precision();
  if (lambda < 1) throw ConfigError("lambda must be >= 1");
  if (!(epsilon > 0)) throw ConfigError("epsilon must be > 0");
  if (!(Delta > 0)) throw ConfigError("Delta must be > 0");
  if (n < 1) throw ConfigError("n must be >= 1");
  if (m < 1) throw ConfigError("m must be >= 1");
  if (lambda + 64 > precision_bits())
    throw ConfigError("lambda exceeds the working precision");

  ProtocolParams p;
  p.protocol = protocol;
  p.lambda = lambda;
  p.epsilon = epsilon;
  p.delta = delta;
  p.Delta = Delta;
  p.n = n;
  p.m = m;
  p.epsilon_used = epsilon;
  p.nonzero_terms = count_terms(protocol);
  p.budget = Rational(1) / (Rational(p.nonzero_terms) *
                            Rational(boost::multiprecision::mpz_int(1) << lambda));
  const Real budget = to_real(p.budget);

  if (protocol == ProtocolId::kOstackLaplaceStar) {
    SnappedEpsilon s = snap_epsilon(epsilon);
    p.snap_exponent = s.i;
    p.epsilon_used = s.value;
  }

  const bool gauss = is_gaussian(protocol);
  if (gauss) {
    if (opt.sigma_override > 0) {
      p.sigma = opt.sigma_override;
    } else if (epsilon < 1) {
      p.sigma = gaussian_sigma(epsilon, delta, Delta);
    } else {
      if (opt.strict_gaussian_domain) gaussian_sigma(epsilon, delta, Delta);
      p.sigma = gaussian_sigma_unchecked(epsilon, delta, Delta);
      p.outside_classic_gaussian_domain = true;
    }
    p.t = gaussian_rejection_scale(p.sigma);
  } else {
    p.t = Delta / p.epsilon_used;
  }

  // kappa: smallest with delta_t <= budget (and N >= 2 round(sigma) for rejection).
  std::uint64_t min_N = 0;
  if (gauss && protocol != ProtocolId::kDngGaussian)
    min_N = 2 * static_cast<std::uint64_t>(std::llround(p.sigma));
  for (p.kappa = 1;; ++p.kappa) {
    if (p.kappa > opt.kappa_cap) throw ConfigError("kappa exceeds the configured cap");
    p.N = (std::uint64_t{1} << p.kappa) + 1;
    if (p.N < min_N) continue;
    if (compute_delta_t(p) <= budget) break;
  }
  p.delta_t = compute_delta_t(p);

  if (gauss && protocol != ProtocolId::kDngGaussian) {
    RejectionGeometry rg = rejection_geometry(p.sigma, p.kappa);
    p.reject_coin_count = rg.width;
    p.p_star = gaussian_p_star(p.sigma, p.t, p.N);
  }

  // l: smallest with delta_b <= budget.
  if (!uses_dng(protocol)) {
    unsigned lo = 1, hi = 1;
    while (compute_delta_b(p, hi) > budget) {
      if (hi >= opt.l_cap) throw ConfigError("bias length l exceeds the configured cap");
      hi = std::min(hi * 2, opt.l_cap);
    }
    while (lo < hi) {
      unsigned mid = lo + (hi - lo) / 2;
      if (compute_delta_b(p, mid) <= budget) hi = mid;
      else lo = mid + 1;
    }
    p.l = lo;
    p.delta_b = compute_delta_b(p, p.l);
  }

  // n': smallest with n' p*' > n and delta_r <= budget.
  if (protocol == ProtocolId::kOdoGaussian || protocol == ProtocolId::kOstackGaussian) {
    Real pl = p_star_lower(p);
    if (pl <= 0) throw ConfigError("acceptance rate lower bound is not positive");
    auto ok = [&](std::uint64_t np) { return rejection_delta_r(n, np, pl) <= budget; };
    std::uint64_t lo = n, hi = std::max<std::uint64_t>(n, 2);
    while (!ok(hi)) {
      lo = hi;
      hi *= 2;
      if (hi > (std::uint64_t{1} << 48)) throw ConfigError("no feasible trial count n'");
    }
    while (lo < hi) {
      std::uint64_t mid = lo + (hi - lo) / 2;
      if (ok(mid)) hi = mid;
      else lo = mid + 1;
    }
    p.n_prime = lo;
    p.delta_r = rejection_delta_r(n, p.n_prime, pl);
  }

  // (g, u): minimise the estimated AND cost over g in {8..1024}.
  if (uses_ostack(protocol)) {
    auto kinds = ostack_coin_kinds(p);
    std::size_t r = bias_stack_size(p.l);
    double best = -1;
    for (std::uint64_t g = 8; g <= 1024; g *= 2) {
      std::uint64_t calls = ostack_calls_for(kinds, g);
      std::uint64_t u = solve_u(calls, g, budget);
      double cost = 0;
      for (const auto& k : kinds)
        cost += double(ceil_div(k.count, g)) * ostack_call_cost(g, u, r, k.periodic);
      if (best < 0 || cost < best) {
        best = cost;
        p.g = g;
        p.u = u;
        p.ostack_calls = calls;
      }
    }
    p.delta_p = ostack_delta_p(p.ostack_calls, p.g, p.u);
  }

  p.delta_lambda = 2 * (exp(real_of(p.epsilon_used)) + 1) *
                   (p.delta_t + p.delta_b + p.delta_r + p.delta_p);
  return p;
}

BudgetReport verify_budget(const ProtocolParams& p) {
  ensure_precision();
  const Real budget = to_real(p.budget);
  BudgetReport rep;
  auto check = [&](const char* term, const Real& v) {
    if (v > budget) throw BudgetError(term, "achieved 2^" + log2_field(v) +
                                                " exceeds allocation 2^" + log2_field(budget));
  };
  if (p.N != (std::uint64_t{1} << p.kappa) + 1) throw BudgetError("delta_t", "N != 2^kappa + 1");
  rep.delta_t = compute_delta_t(p);
  check("delta_t", rep.delta_t);
  rep.delta_b = uses_dng(p.protocol) ? Real(0) : compute_delta_b(p, p.l);
  check("delta_b", rep.delta_b);
  rep.delta_r = 0;
  if (p.protocol == ProtocolId::kOdoGaussian || p.protocol == ProtocolId::kOstackGaussian) {
    rep.delta_r = rejection_delta_r(p.n, p.n_prime, p_star_lower(p));
    check("delta_r", rep.delta_r);
  }
  rep.delta_p = 0;
  if (uses_ostack(p.protocol)) {
    std::uint64_t calls = ostack_calls_for(ostack_coin_kinds(p), p.g);
    rep.delta_p = ostack_delta_p(calls, p.g, p.u);
    check("delta_p", rep.delta_p);
  }
  Real total = rep.delta_t + rep.delta_b + rep.delta_r + rep.delta_p;
  if (total > pow2(-static_cast<long>(p.lambda)))
    throw BudgetError("total", "sum of terms exceeds 2^-lambda");
  rep.delta_lambda = 2 * (exp(real_of(p.epsilon_used)) + 1) * total;
  return rep;
}

}  // namespace ddpbench
