#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace evkit {

/// Everything a command needs, assembled from flags, an optional config
/// file mirroring the flags, and the EVKIT_SEED override. Fully
/// serializable: a saved config re-runs bit-identically.
struct RunConfig {
  std::string command;
  std::string model = "conjugate";
  std::string model2;
  std::string estimator = "nested";
  std::uint64_t seed = 1;
  int reps = 1;

  // nested sampling
  int n_live = 300;
  int mcmc_steps = 20;
  double ns_tol = 1e-4;
  // schedules (TI / AIS)
  int schedule_k = 50;
  double schedule_gamma = 3.0;
  bool schedule_linear = false;
  // AIS
  int chains = 64;
  int steps_per_rung = 10;
  // TI
  int ti_sweeps = 500;
  // importance sampling
  int is_samples = 100000;

  // select-order
  int k_min = 1;
  int k_max = 4;
  int order_n = 200;
  std::uint64_t data_seed = 42;
  int truth_k = 2;

  // detect-sweep
  std::vector<double> snr_db;
  int n_epochs = 300;
  int n_targets = 30;
  int epoch_len = 200;

  std::string out;     // output path; empty writes to stdout
  std::string format;  // "json" or "csv"; empty picks the command default
  std::string trace;   // nested runs only: rep-0 trace CSV path
  std::string scores;  // detect-sweep only: per-epoch score CSV path

  bool operator==(const RunConfig&) const = default;
};

/// The default 17-point SNR grid: -6..7 dB in integer steps plus 10, 15
/// and 20 dB.
std::vector<double> default_snr_grid();

/// Thrown by parse_cli when the user asked for --help.
struct HelpRequested {
  std::string text;
};

/// Parses a command line (without argv[0]). When config_dump is non-null it
/// receives the config-file text that reproduces the parsed configuration.
/// Throws CLI::ParseError wrapped as std::runtime_error on bad input.
RunConfig parse_cli(const std::vector<std::string>& args,
                    std::string* config_dump = nullptr);

int cmd_evidence(const RunConfig& config);
int cmd_compare(const RunConfig& config);
int cmd_select_order(const RunConfig& config);
int cmd_detect_sweep(const RunConfig& config);

int run_command(const RunConfig& config);

/// Entry point shared by the binary and the in-process tests.
int cli_main(const std::vector<std::string>& args);
int cli_main(int argc, const char* const* argv);

}  // namespace evkit
