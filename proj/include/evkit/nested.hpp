#pragma once

#include <iosfwd>
#include <vector>

#include "evkit/core.hpp"

namespace evkit {

struct LivePoint {
  std::vector<double> theta;
  double log_l = kNegInf;
  double log_prior = kNegInf;
};

struct DeadPoint {
  std::vector<double> theta;
  double log_l = kNegInf;
  double log_x = 0.0;         // assigned log prior mass at removal
  double log_mass = kNegInf;  // log of this point's mass width
  double partial_log_z = kNegInf;
};

struct NestedRun {
  int n_live = 0;
  std::vector<DeadPoint> dead_points;  // includes the final live-point block
  double log_z = kNegInf;
  double log_z_std_err = 0.0;  // sqrt(H / n_live)
  double information_h = 0.0;  // nats
  std::uint64_t iterations = 0;
  std::uint64_t n_likelihood_evals = 0;
  double mean_acceptance = 0.0;
  // log(L_max_live * X) - log_z at the stopping iteration.
  double final_remainder = 0.0;
};

enum class ShrinkageMode { Deterministic, Sampled };
enum class TerminationRule {
  RemainingMass,  // stop when L_max_live * X_i is a negligible Z fraction
  EvidenceDelta,  // stop when consecutive log Z changes fall below a tol
};

struct NestedConfig {
  int n_live = 300;
  int mcmc_steps = 20;
  double termination_tol = 1e-4;     // RemainingMass fraction
  double evidence_delta_tol = 1e-8;  // EvidenceDelta threshold
  TerminationRule termination = TerminationRule::RemainingMass;
  ShrinkageMode shrinkage = ShrinkageMode::Deterministic;
  bool trapezoid = false;  // rectangle sum L_i (X_{i-1} - X_i) by default
  std::uint64_t max_iterations = 2'000'000;
  std::vector<double> init_step_scales;  // empty: sized from prior draws
};

/// Log prior mass after i shrinkage steps with N live points: -i/N in
/// deterministic mode, a cumulative sum of log Beta(N,1) draws in sampled
/// mode.
double shrinkage_log_mass(std::uint64_t i, int n_live, ShrinkageMode mode,
                          RngHandle* rng = nullptr);

/// Nested sampling: N live points under a rising hard likelihood floor,
/// replacement by cloning a random survivor and evolving it with the
/// constrained Metropolis kernel.
NestedRun nested_sampling(const ModelSpec& model, const NestedConfig& config,
                          RngHandle& rng);

EvidenceEstimate to_estimate(const NestedRun& run);

/// Normalized posterior weights of the dead points,
/// w_i proportional to L_i * (X_{i-1} - X_i).
std::vector<double> posterior_weights(const NestedRun& run);

/// CSV rows (iteration, log_l, log_x, partial_log_z) for external plotting.
void write_run_csv(const NestedRun& run, std::ostream& out);

struct RepeatedRunsResult {
  double mean_log_z = 0.0;
  double sample_std = 0.0;
  std::vector<NestedRun> runs;
};

/// R independent runs on consecutive RNG streams, dispatched to a small
/// worker pool and merged in stream order.
RepeatedRunsResult repeated_runs(const ModelSpec& model,
                                 const NestedConfig& config, int r,
                                 std::uint64_t seed,
                                 std::uint64_t base_stream = 0);

}  // namespace evkit
