#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "ddpbench/bench.hpp"
#include "ddpbench/errors.hpp"
#include "ddpbench/params.hpp"

using namespace ddpbench;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kAssertFailed = 3;

struct GridFlags {
  std::string config;
  std::string protocols, lambda, epsilon, n, m, seed, out, dataset;
  int threads = -1;
  int trials = -1;

  void add(CLI::App* app) {
    app->add_option("--config", config, "Scenario file (key = value)");
    app->add_option("--protocols", protocols, "Comma-separated protocol ids or 'all'");
    app->add_option("--lambda", lambda, "Security parameters");
    app->add_option("--epsilon", epsilon, "Privacy parameters");
    app->add_option("--n", n, "Batch sizes");
    app->add_option("--m", m, "Party counts");
    app->add_option("--seed", seed, "Seeds");
    app->add_option("--out", out, "Output CSV path (default stdout)");
    app->add_option("--threads", threads, "Worker threads (0 = all cores)");
  }

  Scenario scenario() const {
    Scenario s = config.empty() ? Scenario{} : load_scenario(config);
    auto set = [&](const char* key, const std::string& v) {
      if (!v.empty()) set_scenario_key(s, key, v);
    };
    set("protocols", protocols);
    set("lambda", lambda);
    set("epsilon", epsilon);
    set("n", n);
    set("m", m);
    set("seeds", seed);
    set("out", out);
    set("dataset", dataset);
    if (threads >= 0) s.threads = static_cast<unsigned>(threads);
    if (trials >= 0) s.trials = static_cast<unsigned>(trials);
    s.validate();
    return s;
  }
};

template <typename Write>
void emit(const std::string& path, Write write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  write(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gate-count and utility benchmarks for MPC noise sampling"};
  app.require_subcommand(1);
  bool assert_mode = false;
  app.add_flag("--assert", assert_mode, "Exit 3 when a run misses its acceptance threshold");

  GridFlags cost_flags;
  auto* cost = app.add_subcommand("cost", "Gate and random-bit counts over a scenario grid");
  cost_flags.add(cost);

  GridFlags util_flags;
  std::string noise_path;
  auto* util = app.add_subcommand("utility", "Counting-query utility study");
  util_flags.add(util);
  util->add_option("--dataset", util_flags.dataset, "Counts file (one per line) or .dat log");
  util->add_option("--trials", util_flags.trials, "Trials per grid point");
  util->add_option("--noise-path", noise_path, "plain | mpc")->check(CLI::IsMember({"plain", "mpc"}));

  CheckDemoConfig demo;
  auto* check = app.add_subcommand("check-demo", "Honest vs attacked batches through the KS check");
  check->add_option("--n", demo.n, "Batch size for the plaintext trials");
  check->add_option("--epsilon", demo.epsilon);
  check->add_option("--lambda", demo.lambda);
  check->add_option("--alpha", demo.alpha);
  check->add_option("--trials", demo.trials);
  check->add_option("--mpc-trials", demo.mpc_trials, "Circuit spot checks per batch kind");
  check->add_option("--mpc-n", demo.mpc_n);
  check->add_option("--seed", demo.seed);
  check->add_flag("--standard-constant", demo.standard_constant, "Use sqrt(-ln(alpha/2)/2)");
  check->add_flag("--tie-aware", demo.tie_aware, "Compare only at tie-run boundaries");

  std::string pid = "odo-laplace";
  unsigned plambda = 128, pm = 3;
  double peps = 0.1, pdelta = 1e-5, pDelta = 1;
  std::uint64_t pn = 4096;
  auto* params = app.add_subcommand("params", "Print derived protocol parameters");
  params->add_option("--protocol", pid);
  params->add_option("--lambda", plambda);
  params->add_option("--epsilon", peps);
  params->add_option("--delta", pdelta);
  params->add_option("--sensitivity", pDelta);
  params->add_option("--n", pn);
  params->add_option("--m", pm);

  std::string plots_csv, plots_dir = "plots";
  auto* plots = app.add_subcommand("plots", "Long-format plot data from a cost or utility CSV");
  plots->add_option("csv", plots_csv)->required();
  plots->add_option("--dir", plots_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*cost) {
      Scenario s = cost_flags.scenario();
      auto rows = run_cost_sweep(s);
      emit(s.out, [&](std::ostream& o) { write_cost_csv(rows, o); });
      if (assert_mode)
        for (const auto& r : rows)
          if (r.status != "OK") return kAssertFailed;
    } else if (*util) {
      Scenario s = util_flags.scenario();
      if (!noise_path.empty()) s.noise_path = noise_path;
      auto rows = run_utility_study(s);
      emit(s.out, [&](std::ostream& o) { write_utility_csv(rows, o); });
      if (assert_mode) {
        // Each DDP Laplace pipeline within 10% of the central Laplace baseline.
        for (const auto& r : rows) {
          if (r.pipeline.rfind("cdp", 0) == 0 || r.pipeline == "WARNING") continue;
          if (is_gaussian(parse_protocol(r.pipeline))) continue;
          for (const auto& c : rows)
            if (c.pipeline == "cdp-laplace" && c.epsilon == r.epsilon &&
                std::abs(r.mse - c.mse) > 0.1 * c.mse)
              return kAssertFailed;
        }
      }
    } else if (*check) {
      auto rows = run_check_demo(demo);
      std::cout << "batch,trials,flag_rate,mpc_trials,mpc_agrees\n";
      for (const auto& r : rows)
        std::cout << r.batch << ',' << r.trials << ',' << r.flag_rate << ',' << r.mpc_trials << ','
                  << (r.mpc_agrees ? 1 : 0) << '\n';
      if (assert_mode) {
        for (const auto& r : rows) {
          if (!r.mpc_agrees) return kAssertFailed;
          if (r.batch != "honest" && r.flag_rate < 0.99) return kAssertFailed;
          if (r.batch == "honest" && std::abs(r.flag_rate - demo.alpha) > 0.02) return kAssertFailed;
        }
      }
    } else if (*params) {
      ProtocolParams p = allocate(parse_protocol(pid), plambda, peps, pdelta, pDelta, pn, pm);
      verify_budget(p);
      for (const auto& [k, v] : p.fields()) std::cout << k << " = " << v << '\n';
    } else if (*plots) {
      for (const auto& path : emit_plots(plots_csv, plots_dir)) std::cout << path << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const ParseError& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const BudgetError& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return kOk;
}
