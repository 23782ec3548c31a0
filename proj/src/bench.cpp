#include "ddpbench/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "ddpbench/dist.hpp"
#include "ddpbench/errors.hpp"
#include "ddpbench/gadgets.hpp"
#include "ddpbench/kscheck.hpp"
#include "ddpbench/protocols.hpp"

namespace ddpbench {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(std::string v) {
  v = trim(v);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw ConfigError("unterminated list '" + v + "'");
    v = v.substr(1, v.size() - 2);
  }
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.size() >= 2 && item.front() == '"' && item.back() == '"')
      item = item.substr(1, item.size() - 2);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    T out;
    if constexpr (std::is_floating_point_v<T>) {
      out = static_cast<T>(std::stod(v, &pos));
    } else {
      if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
      out = static_cast<T>(std::stoull(v, &pos));
    }
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError("bad value '" + v + "' for " + key);
  }
}

template <typename T>
std::vector<T> parse_numbers(const std::string& key, const std::string& v) {
  std::vector<T> out;
  for (const auto& item : split_list(v)) out.push_back(parse_number<T>(key, item));
  return out;
}

std::string num(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

// Runs f(i) for i in [0, count) on a worker pool.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::uint32_t w[2];
  seq.generate(w, w + 2);
  return (std::uint64_t{w[0]} << 32) | w[1];
}

}  // namespace

// --- Scenario -------------------------------------------------------------------

void Scenario::validate() const {
  if (protocols.empty() || lambda_grid.empty() || epsilon_grid.empty() || n_grid.empty() ||
      m_grid.empty())
    throw ConfigError("scenario grids must be non-empty");
  if (seeds.empty()) throw ConfigError("scenario needs at least one seed");
  for (auto l : lambda_grid)
    if (l == 0) throw ConfigError("lambda must be positive");
  for (auto e : epsilon_grid)
    if (!(e > 0)) throw ConfigError("epsilon must be positive");
  for (auto n : n_grid)
    if (n == 0) throw ConfigError("n must be positive");
  for (auto m : m_grid)
    if (m < 2 || m > 64) throw ConfigError("m must be in 2..64");
  if (!(delta > 0 && delta < 1)) throw ConfigError("delta must be in (0,1)");
  if (!(Delta > 0)) throw ConfigError("Delta must be positive");
  if (!(alpha > 0 && alpha < 1)) throw ConfigError("alpha must be in (0,1)");
  if (!(collusion_fraction >= 0 && collusion_fraction < 1))
    throw ConfigError("collusion_fraction must be in [0,1)");
  if (trials == 0) throw ConfigError("trials must be >= 1");
  if (noise_path != "plain" && noise_path != "mpc")
    throw ConfigError("noise_path must be plain or mpc");
}

void set_scenario_key(Scenario& s, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "protocols") {
    s.protocols.clear();
    for (const auto& id : split_list(v)) {
      if (id == "all") {
        s.protocols = all_protocols();
        break;
      }
      s.protocols.push_back(parse_protocol(id));
    }
  } else if (key == "lambda" || key == "lambda_grid") {
    s.lambda_grid = parse_numbers<unsigned>(key, v);
  } else if (key == "epsilon" || key == "epsilon_grid") {
    s.epsilon_grid = parse_numbers<double>(key, v);
  } else if (key == "n" || key == "n_grid") {
    s.n_grid = parse_numbers<std::uint64_t>(key, v);
  } else if (key == "m" || key == "m_grid") {
    s.m_grid = parse_numbers<unsigned>(key, v);
  } else if (key == "seed" || key == "seeds") {
    s.seeds = parse_numbers<std::uint64_t>(key, v);
  } else if (key == "delta") {
    s.delta = parse_number<double>(key, v);
  } else if (key == "Delta" || key == "sensitivity") {
    s.Delta = parse_number<double>(key, v);
  } else if (key == "alpha") {
    s.alpha = parse_number<double>(key, v);
  } else if (key == "collusion_fraction") {
    s.collusion_fraction = parse_number<double>(key, v);
  } else if (key == "max_retries") {
    s.max_retries = parse_number<unsigned>(key, v);
  } else if (key == "threads") {
    s.threads = parse_number<unsigned>(key, v);
  } else if (key == "trans_direct_limit") {
    s.trans_direct_limit = parse_number<std::uint64_t>(key, v);
  } else if (key == "trials") {
    s.trials = parse_number<unsigned>(key, v);
  } else if (key == "dataset") {
    s.dataset = split_list(v).empty() ? "" : split_list(v)[0];
  } else if (key == "noise_path") {
    s.noise_path = v;
  } else if (key == "out") {
    s.out = split_list(v).empty() ? "" : split_list(v)[0];
  } else {
    throw ConfigError("unknown scenario key '" + key + "'");
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path);
  Scenario s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    set_scenario_key(s, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  s.validate();
  return s;
}

// --- Cost sweep -------------------------------------------------------------------

namespace {

struct GridPoint {
  ProtocolId protocol;
  unsigned lambda;
  double epsilon;
  std::uint64_t n;
  unsigned m;
  std::uint64_t seed;
};

CostRow cost_point(const Scenario& s, const GridPoint& g) {
  CostRow row;
  row.protocol = g.protocol;
  row.lambda = g.lambda;
  row.epsilon = g.epsilon;
  row.n = g.n;
  row.m = g.m;
  row.seed = g.seed;
  ProtocolParams p;
  try {
    p = allocate(g.protocol, g.lambda, g.epsilon, s.delta, s.Delta, g.n, g.m);
  } catch (const BudgetError& e) {
    row.status = "SKIPPED";
    row.reason = "budget:" + e.term();
    return row;
  } catch (const Error& e) {
    row.status = "SKIPPED";
    row.reason = "config:" + sanitize(e.what());
    return row;
  }
  p.alpha = s.alpha;
  p.collusion_fraction = s.collusion_fraction;
  try {
    verify_budget(p);
  } catch (const BudgetError& e) {
    row.status = "FAILED";
    row.reason = "budget:" + e.term();
    return row;
  }
  std::uint64_t scale = 1;
  if (g.protocol == ProtocolId::kTransLaplace && g.n > s.trans_direct_limit) {
    // The circuit is identical per sample; run one and scale.
    scale = g.n;
    p.n = 1;
    row.scaled = true;
  }
  CostLedger total;
  bool done = false;
  for (unsigned attempt = 0; attempt <= s.max_retries && !done; ++attempt) {
    Engine e(g.m, attempt == 0 ? g.seed : mix(g.seed, attempt));
    try {
      run_secret(e, p);
      done = true;
    } catch (const AbortUnfilled&) {
      ++row.abort_count;
    } catch (const AbortRejection&) {
      ++row.abort_count;
    }
    CostLedger l = e.ledger();
    total.and_gates += l.and_gates;
    total.xor_gates += l.xor_gates;
    total.input_random_bits += l.input_random_bits;
    total.triples_consumed += l.triples_consumed;
    total.and_depth = std::max(total.and_depth, l.and_depth);
    total.parties = l.parties;
  }
  if (!done) {
    row.status = "FAILED";
    row.reason = "aborted:" + std::to_string(row.abort_count);
  }
  row.and_gates = total.and_gates * scale;
  row.xor_gates = total.xor_gates * scale;
  row.input_random_bits = total.input_random_bits * scale;
  row.depth = total.and_depth;
  total.and_gates = row.and_gates;
  total.input_random_bits = row.input_random_bits;
  row.modeled_bytes = CommModel{}.bytes(total);
  return row;
}

}  // namespace

std::vector<CostRow> run_cost_sweep(const Scenario& s) {
  s.validate();
  std::vector<GridPoint> grid;
  for (auto id : s.protocols)
    for (auto lambda : s.lambda_grid)
      for (auto eps : s.epsilon_grid)
        for (auto n : s.n_grid)
          for (auto m : s.m_grid)
            for (auto seed : s.seeds) grid.push_back({id, lambda, eps, n, m, seed});
  std::vector<CostRow> rows(grid.size());
  parallel_for(grid.size(), s.threads, [&](std::size_t i) { rows[i] = cost_point(s, grid[i]); });
  return rows;
}

void write_cost_csv(const std::vector<CostRow>& rows, std::ostream& out) {
  out << "protocol,lambda,epsilon,n,m,seed,status,reason,and_gates,xor_gates,depth,"
         "input_random_bits,modeled_bytes,abort_count,scaled\n";
  for (const auto& r : rows) {
    out << to_string(r.protocol) << ',' << r.lambda << ',' << num(r.epsilon) << ',' << r.n << ','
        << r.m << ',' << r.seed << ',' << r.status << ',' << r.reason << ',' << r.and_gates << ','
        << r.xor_gates << ',' << r.depth << ',' << r.input_random_bits << ','
        << num(r.modeled_bytes) << ',' << r.abort_count << ',' << (r.scaled ? 1 : 0) << '\n';
  }
}

// --- Utility study ------------------------------------------------------------------

std::vector<double> ddp_release(const std::vector<double>& truth, const ProtocolParams& p,
                                std::uint64_t seed, bool through_mpc) {
  std::vector<double> out(truth.size());
  if (!through_mpc) {
    // Plaintext draw from the protocol's target: truncated discrete noise.
    std::mt19937_64 rng(seed);
    const auto N = static_cast<std::int64_t>(p.N);
    DistSpec lap = DistSpec::truncated_discrete_laplace(p.t, N);
    for (std::size_t i = 0; i < truth.size(); ++i) {
      double z = is_gaussian(p.protocol) ? double(sample_discrete_gaussian(p.sigma, N, rng))
                                         : sample(lap, rng);
      out[i] = truth[i] + z;
    }
    return out;
  }
  ProtocolParams q = p;
  q.n = truth.size();
  Engine e(p.m, seed);
  SecretBatch noise = run_secret(e, q);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const SecretWord& z = noise.words[i];
    unsigned w = std::max(static_cast<unsigned>(z.width()), 40u) + 1;
    SecretWord c = e.share(static_cast<std::int64_t>(truth[i]), w);
    out[i] = double(e.reconstruct(add(e, c, sign_extend(z, w))));
  }
  return out;
}

std::vector<UtilityRow> run_utility_study(const Scenario& s) {
  s.validate();
  std::vector<UtilityRow> rows;
  std::vector<double> truth;
  bool loaded = false;
  if (!s.dataset.empty() && std::filesystem::exists(s.dataset)) {
    const std::string ext = std::filesystem::path(s.dataset).extension().string();
    truth = ext == ".dat" ? kosarak_counts(s.dataset) : load_counts(s.dataset);
    loaded = true;
  }
  if (!loaded) {
    truth = synthetic_zipf();
    UtilityRow w;
    w.pipeline = "WARNING";
    w.note = sanitize("dataset '" + s.dataset + "' not found; using synthetic Zipf counts (" +
                      std::to_string(truth.size()) + " keys)");
    rows.push_back(w);
  }
  struct Point {
    std::string pipeline;
    ProtocolId id;
    bool cdp;
    Mechanism mech;
    double eps;
    unsigned lambda;
  };
  std::vector<Point> pts;
  for (double eps : s.epsilon_grid) {
    for (auto id : s.protocols)
      for (auto lambda : s.lambda_grid)
        pts.push_back({to_string(id), id, false, Mechanism::kLaplace, eps, lambda});
    pts.push_back({"cdp-laplace", ProtocolId::kOdoLaplace, true, Mechanism::kLaplace, eps, 0});
    pts.push_back({"cdp-d-laplace", ProtocolId::kOdoLaplace, true, Mechanism::kDiscreteLaplace, eps, 0});
    if (eps < 1)
      pts.push_back({"cdp-gaussian", ProtocolId::kOdoLaplace, true, Mechanism::kGaussian, eps, 0});
  }
  std::vector<UtilityRow> out(pts.size());
  const unsigned m = s.m_grid.front();
  const std::uint64_t base = s.seeds.front();
  parallel_for(pts.size(), s.threads, [&](std::size_t i) {
    const Point& pt = pts[i];
    UtilityRow r;
    r.pipeline = pt.pipeline;
    r.epsilon = pt.eps;
    r.lambda = pt.lambda;
    r.trials = s.trials;
    ProtocolParams p;
    if (!pt.cdp) {
      try {
        p = allocate(pt.id, pt.lambda, pt.eps, s.delta, s.Delta, truth.size(), m);
      } catch (const Error& e) {
        r.note = "SKIPPED:" + sanitize(e.what());
        out[i] = r;
        return;
      }
      p.collusion_fraction = s.collusion_fraction;
      if (p.outside_classic_gaussian_domain) r.note = "outside-classic-gaussian-domain";
    }
    for (unsigned trial = 0; trial < s.trials; ++trial) {
      const std::uint64_t seed = mix(mix(base, i), trial);
      std::vector<double> noisy;
      try {
        if (pt.cdp) {
          std::mt19937_64 rng(seed);
          noisy = cdp_mechanism(truth, pt.mech, pt.eps, s.delta, s.Delta, rng);
        } else {
          noisy = ddp_release(truth, p, seed, s.noise_path == "mpc");
        }
      } catch (const Error& e) {
        r.note = "FAILED:" + sanitize(e.what());
        r.trials = trial;
        break;
      }
      UtilityReport u = utility(truth, noisy);
      r.mse += u.mse / s.trials;
      r.mae += u.mae / s.trials;
      r.re += u.re / s.trials;
    }
    out[i] = r;
  });
  rows.insert(rows.end(), out.begin(), out.end());
  return rows;
}

void write_utility_csv(const std::vector<UtilityRow>& rows, std::ostream& out) {
  out << "pipeline,epsilon,lambda,mse,mae,re,trials,note\n";
  for (const auto& r : rows)
    out << r.pipeline << ',' << num(r.epsilon) << ',' << r.lambda << ',' << num(r.mse) << ','
        << num(r.mae) << ',' << num(r.re) << ',' << r.trials << ',' << r.note << '\n';
}

// --- Check demo -------------------------------------------------------------------

std::vector<CheckDemoRow> run_check_demo(const CheckDemoConfig& c) {
  if (c.n == 0 || c.mpc_n == 0 || c.trials == 0) throw ConfigError("check demo sizes must be >= 1");
  ProtocolParams p = allocate(ProtocolId::kDngLaplace, c.lambda, c.epsilon, 1e-5, 1, c.n, 3);
  const auto N = static_cast<std::int64_t>(p.N);
  const DistSpec target = DistSpec::truncated_discrete_laplace(p.t, N);
  const DistSpec deflated = DistSpec::truncated_discrete_laplace(p.t / 2, N);
  const CheckTable table = build_table(target, c.n, N, c.alpha, c.standard_constant, c.tie_aware);
  const CheckTable small =
      build_table(target, c.mpc_n, N, c.alpha, c.standard_constant, c.tie_aware);
  const char* kinds[3] = {"honest", "zero-noise", "deflated"};
  auto batch = [&](int kind, std::size_t n, std::mt19937_64& rng) {
    std::vector<std::int64_t> v(n, 0);
    if (kind == 1) return v;
    for (auto& x : v) x = static_cast<std::int64_t>(sample(kind == 0 ? target : deflated, rng));
    return v;
  };
  std::vector<CheckDemoRow> rows;
  for (int kind = 0; kind < 3; ++kind) {
    CheckDemoRow r;
    r.batch = kinds[kind];
    r.trials = c.trials;
    std::mt19937_64 rng(mix(c.seed, kind));
    unsigned flagged = 0;
    for (unsigned t = 0; t < c.trials; ++t) flagged += ks_oracle(batch(kind, c.n, rng), table).reject;
    r.flag_rate = double(flagged) / c.trials;
    r.mpc_trials = c.mpc_trials;
    for (unsigned t = 0; t < c.mpc_trials; ++t) {
      auto v = batch(kind, c.mpc_n, rng);
      Engine e(3, mix(c.seed, 100 + t));
      std::vector<SecretWord> words;
      for (auto x : v) words.push_back(e.share(x, p.kappa + 2));
      bool mpc = e.reconstruct(check(e, words, small));
      if (mpc != ks_oracle(v, small).reject) r.mpc_agrees = false;
    }
    rows.push_back(r);
  }
  return rows;
}

// --- Plot data --------------------------------------------------------------------

std::vector<std::vector<std::string>> read_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (!rows.empty() && cells.size() != rows[0].size())
      throw ParseError("row " + std::to_string(rows.size() + 1) + " has " +
                       std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(rows[0].size()));
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::vector<std::string> emit_plots(const std::string& csv_path, const std::string& dir) {
  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot open " + csv_path);
  auto rows = read_csv(in);
  if (rows.size() <= 1) return {};
  const auto& header = rows[0];
  auto col = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  auto number = [](const std::string& v) {
    try {
      std::size_t pos = 0;
      double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ParseError("not a number: '" + v + "'");
    }
  };
  std::vector<std::string> series_keys, metrics;
  std::string series_col, filter_col, prefix;
  if (col("and_gates") >= 0) {
    prefix = "cost_";
    series_col = "protocol";
    filter_col = "status";
    series_keys = {"lambda", "epsilon", "n", "m"};
    metrics = {"and_gates", "xor_gates", "depth", "input_random_bits", "modeled_bytes"};
  } else if (col("mse") >= 0) {
    prefix = "utility_";
    series_col = "pipeline";
    series_keys = {"epsilon", "lambda"};
    metrics = {"mse", "mae", "re"};
  } else {
    throw ParseError("unrecognised CSV header in " + csv_path);
  }
  for (const auto& k : series_keys)
    if (col(k) < 0) throw ParseError("missing column " + k);
  if (col(series_col) < 0) throw ParseError("missing column " + series_col);
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  for (const auto& metric : metrics) {
    if (col(metric) < 0) throw ParseError("missing column " + metric);
    // Mean over seeds per (series, x...).
    std::map<std::vector<std::string>, std::pair<double, unsigned>> acc;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (!filter_col.empty() && row[col(filter_col)] != "OK") continue;
      if (row[col(series_col)] == "WARNING") continue;
      std::vector<std::string> key{row[col(series_col)]};
      for (const auto& k : series_keys) {
        number(row[col(k)]);
        key.push_back(row[col(k)]);
      }
      auto& a = acc[key];
      a.first += number(row[col(metric)]);
      ++a.second;
    }
    const std::string path = (std::filesystem::path(dir) / (prefix + metric + ".csv")).string();
    std::ofstream out(path);
    out << "series";
    for (const auto& k : series_keys) out << ',' << k;
    out << ",y\n";
    for (const auto& [key, a] : acc) {
      for (std::size_t i = 0; i < key.size(); ++i) out << (i ? "," : "") << key[i];
      out << ',' << num(a.first / a.second) << '\n';
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace ddpbench
