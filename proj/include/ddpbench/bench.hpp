#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ddpbench/params.hpp"

namespace ddpbench {

/// One experiment grid. Loaded from a flat `key = value` file where list
/// values are comma separated, optionally inside brackets.
struct Scenario {
  std::vector<ProtocolId> protocols = all_protocols();
  std::vector<unsigned> lambda_grid{64, 128, 256, 512};
  std::vector<double> epsilon_grid{0.1};
  std::vector<std::uint64_t> n_grid{16, 64, 256, 1024, 4096};
  std::vector<unsigned> m_grid{3};
  std::vector<std::uint64_t> seeds{1};
  double delta = 1e-5;
  double Delta = 1;
  double alpha = 0.05;
  double collusion_fraction = 0;
  unsigned max_retries = 3;
  unsigned threads = 0;  // 0: hardware concurrency
  /// Above this n, Trans-Laplace runs one sample and scales its counts.
  std::uint64_t trans_direct_limit = 64;
  std::string dataset;
  unsigned trials = 50;
  std::string noise_path = "plain";  // utility study: plain | mpc
  std::string out;

  void validate() const;
};

Scenario load_scenario(const std::string& path);
/// Applies one `key = value` assignment.
void set_scenario_key(Scenario& s, const std::string& key, const std::string& value);

struct CostRow {
  ProtocolId protocol = ProtocolId::kOdoLaplace;
  unsigned lambda = 0;
  double epsilon = 0;
  std::uint64_t n = 0;
  unsigned m = 0;
  std::uint64_t seed = 0;
  std::string status = "OK";  // OK | SKIPPED | FAILED
  std::string reason;
  std::uint64_t and_gates = 0, xor_gates = 0, depth = 0, input_random_bits = 0;
  double modeled_bytes = 0;
  unsigned abort_count = 0;
  bool scaled = false;
};

std::vector<CostRow> run_cost_sweep(const Scenario& s);
void write_cost_csv(const std::vector<CostRow>& rows, std::ostream& out);

struct UtilityRow {
  std::string pipeline;  // protocol id, or cdp-<mechanism>
  double epsilon = 0;
  unsigned lambda = 0;
  double mse = 0, mae = 0, re = 0;
  unsigned trials = 0;
  std::string note;
};

/// Counting-query study: truth + protocol noise per key, averaged over
/// s.trials. Missing dataset files fall back to synthetic counts and add a
/// WARNING row.
std::vector<UtilityRow> run_utility_study(const Scenario& s);
void write_utility_csv(const std::vector<UtilityRow>& rows, std::ostream& out);

/// Noisy counts for one trial: truth plus one noise sample per key.
std::vector<double> ddp_release(const std::vector<double>& truth, const ProtocolParams& p,
                                std::uint64_t seed, bool through_mpc);

struct CheckDemoRow {
  std::string batch;  // honest | zero-noise | deflated
  unsigned trials = 0;
  double flag_rate = 0;
  unsigned mpc_trials = 0;
  bool mpc_agrees = true;
};

struct CheckDemoConfig {
  std::uint64_t n = 4096;
  double epsilon = 0.1;
  unsigned lambda = 128;
  double alpha = 0.05;
  unsigned trials = 100;
  unsigned mpc_trials = 2;
  std::uint64_t mpc_n = 256;
  bool standard_constant = false;
  bool tie_aware = false;
  std::uint64_t seed = 1;
};

std::vector<CheckDemoRow> run_check_demo(const CheckDemoConfig& c);

/// Reads a cost or utility CSV and writes one long-format file per metric
/// (series, x columns, y) into `dir`. Returns the written paths.
std::vector<std::string> emit_plots(const std::string& csv_path, const std::string& dir);

/// Comma-separated parse; throws ParseError on ragged rows.
std::vector<std::vector<std::string>> read_csv(std::istream& in);

}  // namespace ddpbench
