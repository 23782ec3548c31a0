#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ddpbench/bench.hpp"
#include "ddpbench/dist.hpp"
#include "ddpbench/protocols.hpp"

using namespace ddpbench;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("ddpbench_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

std::string cost_csv(const Scenario& s) {
  std::ostringstream os;
  write_cost_csv(run_cost_sweep(s), os);
  return os.str();
}

Scenario small_grid() {
  Scenario s;
  s.protocols = {ProtocolId::kOdoLaplace, ProtocolId::kOstackLaplace, ProtocolId::kDngLaplace};
  s.lambda_grid = {32, 64};
  s.n_grid = {16, 64};
  s.seeds = {1, 2};
  return s;
}

}  // namespace

TEST(Scenario, LoadsFlatFile) {
  auto dir = temp_dir("scenario");
  auto path = dir / "grid.conf";
  std::ofstream(path) << "# cost grid\n"
                         "protocols = [odo-laplace, dng-gaussian]\n"
                         "lambda = 64, 128\n"
                         "epsilon = [0.1]\n"
                         "n = [16, 256]   # small\n"
                         "m = 3\n"
                         "seeds = 7\n"
                         "alpha = 0.01\n"
                         "out = \"rows.csv\"\n";
  Scenario s = load_scenario(path.string());
  EXPECT_EQ(s.protocols, (std::vector<ProtocolId>{ProtocolId::kOdoLaplace, ProtocolId::kDngGaussian}));
  EXPECT_EQ(s.lambda_grid, (std::vector<unsigned>{64, 128}));
  EXPECT_EQ(s.n_grid, (std::vector<std::uint64_t>{16, 256}));
  EXPECT_EQ(s.seeds, (std::vector<std::uint64_t>{7}));
  EXPECT_DOUBLE_EQ(s.alpha, 0.01);
  EXPECT_EQ(s.out, "rows.csv");
}

TEST(Scenario, RejectsBadInput) {
  Scenario s;
  EXPECT_THROW(set_scenario_key(s, "colour", "blue"), ConfigError);
  EXPECT_THROW(set_scenario_key(s, "lambda", "sixty"), ConfigError);
  EXPECT_THROW(set_scenario_key(s, "n", "-4"), ConfigError);
  set_scenario_key(s, "n", "0");
  EXPECT_THROW(s.validate(), ConfigError);
  Scenario t;
  t.seeds.clear();
  EXPECT_THROW(t.validate(), ConfigError);
  Scenario u;
  set_scenario_key(u, "protocols", "[]");
  EXPECT_THROW(u.validate(), ConfigError);
  EXPECT_THROW(load_scenario("/nonexistent/grid.conf"), ConfigError);
  auto path = temp_dir("bad") / "x.conf";
  std::ofstream(path) << "lambda 64\n";
  EXPECT_THROW(load_scenario(path.string()), ConfigError);
}

TEST(CostSweep, DngBitColumnScalesByFour) {
  Scenario s;
  s.protocols = {ProtocolId::kDngLaplace};
  s.lambda_grid = {128};
  s.n_grid = {16, 64, 256};
  auto rows = run_cost_sweep(s);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].input_random_bits, 576u);
  EXPECT_EQ(rows[1].input_random_bits, 2304u);
  EXPECT_EQ(rows[2].input_random_bits, 9216u);
}

TEST(CostSweep, OdoBitsGrowAboutFourfoldPerStep) {
  Scenario s;
  s.protocols = {ProtocolId::kOdoLaplace};
  s.lambda_grid = {128};
  s.n_grid = {16, 64, 256};
  auto rows = run_cost_sweep(s);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    double r = double(rows[i].input_random_bits) / double(rows[i - 1].input_random_bits);
    EXPECT_GT(r, 3.95);
    EXPECT_LT(r, 4.15);
  }
}

TEST(CostSweep, ByteIdenticalAcrossRunsAndThreadCounts) {
  Scenario a = small_grid(), b = small_grid();
  a.threads = 1;
  b.threads = 4;
  const std::string first = cost_csv(a);
  EXPECT_EQ(first, cost_csv(a));
  EXPECT_EQ(first, cost_csv(b));
}

TEST(CostSweep, RowsPassBudgetAndSkipsCarryReasons) {
  Scenario s = small_grid();
  s.lambda_grid = {64, 5000};
  s.seeds = {1};
  for (const auto& r : run_cost_sweep(s)) {
    if (r.lambda == 5000) {
      EXPECT_EQ(r.status, "SKIPPED");
      EXPECT_EQ(r.reason.rfind("config:", 0), 0u) << r.reason;
      EXPECT_EQ(r.reason.find(','), std::string::npos);
      continue;
    }
    EXPECT_EQ(r.status, "OK");
    auto p = allocate(r.protocol, r.lambda, r.epsilon, s.delta, s.Delta, r.n, r.m);
    EXPECT_NO_THROW(verify_budget(p));
    EXPECT_GT(r.and_gates, 0u);
  }
}

TEST(CostSweep, TransLaplaceScalesOneSample) {
  Scenario s;
  s.protocols = {ProtocolId::kTransLaplace};
  s.lambda_grid = {32};
  s.n_grid = {4, 128};
  s.trans_direct_limit = 8;
  auto rows = run_cost_sweep(s);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0].scaled);
  EXPECT_TRUE(rows[1].scaled);
  EXPECT_EQ(rows[1].and_gates % 128, 0u);
  auto p = allocate(ProtocolId::kTransLaplace, 32, 0.1, 1e-5, 1, 128, 3);
  p.n = 1;
  EXPECT_EQ(rows[1].and_gates, 128 * run_protocol(p, 1).ledger.and_gates);
}

TEST(Utility, DdpLaplaceMatchesCentralAndIsFlatInLambda) {
  Scenario s;
  s.protocols = {ProtocolId::kOdoLaplace, ProtocolId::kDngLaplace};
  s.lambda_grid = {2, 4, 8, 16, 32};
  s.epsilon_grid = {0.1, 0.5};
  s.trials = 6;
  auto rows = run_utility_study(s);
  ASSERT_EQ(rows.front().pipeline, "WARNING");
  std::map<double, double> cdp;
  for (const auto& r : rows)
    if (r.pipeline == "cdp-laplace") cdp[r.epsilon] = r.mse;
  ASSERT_EQ(cdp.size(), 2u);
  EXPECT_NEAR(cdp[0.1], 200.0, 10.0);
  for (const auto& r : rows) {
    if (r.pipeline.rfind("cdp", 0) == 0 || r.pipeline == "WARNING") continue;
    EXPECT_NEAR(r.mse, cdp[r.epsilon], 0.1 * cdp[r.epsilon]) << r.pipeline << " " << r.lambda;
    if (r.epsilon == 0.5) {
      EXPECT_NEAR(r.mse, 7.91, 0.2 * 7.91);
    }
  }
}

TEST(Utility, LoadsCountsAndRunsThroughMpc) {
  auto path = temp_dir("util") / "counts.txt";
  std::vector<double> truth;
  for (int i = 0; i < 40; ++i) truth.push_back(1000 - 7 * i);
  save_counts(path.string(), truth);
  Scenario s;
  s.dataset = path.string();
  s.protocols = {ProtocolId::kOdoLaplace};
  s.lambda_grid = {32};
  s.epsilon_grid = {1.0};
  s.trials = 3;
  s.noise_path = "mpc";
  auto rows = run_utility_study(s);
  for (const auto& r : rows) EXPECT_NE(r.pipeline, "WARNING");
  ASSERT_EQ(rows[0].pipeline, "odo-laplace");
  EXPECT_EQ(rows[0].trials, 3u);
  EXPECT_GT(rows[0].mse, 0.3);
  EXPECT_LT(rows[0].mse, 8.0);
}

TEST(Utility, MpcReleaseAddsTheProtocolNoise) {
  std::vector<double> truth{5, 0, 12, 40, 3, 3, 9, 1};
  auto p = allocate(ProtocolId::kOstackLaplace, 32, 0.5, 1e-5, 1, truth.size(), 2);
  auto noisy = ddp_release(truth, p, 77, true);
  auto noise = run_protocol(p, 77).samples;
  for (std::size_t i = 0; i < truth.size(); ++i) EXPECT_EQ(noisy[i] - truth[i], double(noise[i]));
}

TEST(CheckDemo, AttacksFlaggedAndCircuitAgrees) {
  CheckDemoConfig c;
  c.n = 1024;
  c.lambda = 64;
  c.trials = 40;
  c.mpc_trials = 1;
  c.mpc_n = 64;
  auto rows = run_check_demo(c);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) EXPECT_TRUE(r.mpc_agrees) << r.batch;
  EXPECT_EQ(rows[1].flag_rate, 1.0);
  EXPECT_EQ(rows[2].flag_rate, 1.0);
  c.trials = 0;
  EXPECT_THROW(run_check_demo(c), ConfigError);
}

TEST(Plots, OneFilePerMetricAndOneSeriesPerProtocol) {
  auto dir = temp_dir("plots");
  Scenario s = small_grid();
  {
    std::ofstream out(dir / "cost.csv");
    write_cost_csv(run_cost_sweep(s), out);
  }
  auto files = emit_plots((dir / "cost.csv").string(), (dir / "out").string());
  ASSERT_EQ(files.size(), 5u);
  std::ifstream in(files[0]);
  auto rows = read_csv(in);
  std::set<std::string> series;
  for (std::size_t i = 1; i < rows.size(); ++i) series.insert(rows[i][0]);
  EXPECT_EQ(series.size(), s.protocols.size());
  // 3 protocols x 2 lambdas x 2 n, averaged over seeds.
  EXPECT_EQ(rows.size(), 1u + 12u);
}

TEST(Plots, EmptyAndMalformedInputs) {
  auto dir = temp_dir("plots_bad");
  std::ofstream(dir / "empty.csv").close();
  EXPECT_TRUE(emit_plots((dir / "empty.csv").string(), (dir / "o").string()).empty());
  EXPECT_FALSE(std::filesystem::exists(dir / "o"));
  std::ofstream(dir / "ragged.csv") << "protocol,and_gates\nodo-laplace\n";
  EXPECT_THROW(emit_plots((dir / "ragged.csv").string(), (dir / "o").string()), ParseError);
  std::ofstream(dir / "other.csv") << "x,y\n1,2\n";
  EXPECT_THROW(emit_plots((dir / "other.csv").string(), (dir / "o").string()), ParseError);
  std::ofstream(dir / "nan.csv") << "pipeline,epsilon,lambda,mse,mae,re\nodo-laplace,abc,2,1,1,1\n";
  EXPECT_THROW(emit_plots((dir / "nan.csv").string(), (dir / "o").string()), ParseError);
}
