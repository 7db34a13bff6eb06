#pragma once

#include <utility>
#include <vector>

#include "evkit/core.hpp"

namespace evkit {

/// Inverse-temperature grid for the geometric path p0^(1-beta) p1^beta:
/// strictly increasing, betas.front() == 0, betas.back() == 1.
struct Schedule {
  std::vector<double> betas;
  int rungs() const { return static_cast<int>(betas.size()); }
};

struct ScheduleShape {
  enum class Kind { Linear, Power };
  Kind kind = Kind::Power;
  double gamma = 3.0;

  static ScheduleShape linear() { return {Kind::Linear, 1.0}; }
  static ScheduleShape power(double gamma) { return {Kind::Power, gamma}; }
};

/// K+1 grid points; linear beta_k = k/K or power beta_k = (k/K)^gamma.
Schedule make_schedule(int k = 50, ScheduleShape shape = ScheduleShape::power(3.0));

// ---------------------------------------------------------------------------
// Importance sampling

using ScalarFn = std::function<double(const std::vector<double>&)>;

/// Self-normalized expectation of f under p using samples from q:
/// sum f * (p/q) / sum (p/q), weights handled in log domain.
double importance_expectation(const ScalarFn& f, const ScalarFn& log_p,
                              const ScalarFn& log_q,
                              const std::vector<std::vector<double>>& samples);

enum class ImportanceMode {
  Simple,          // log mean of p/q; q must be normalized
  SelfNormalized,  // sum(p^2/q^2) / sum(p/q)
};

/// log of the evidence ratio Z_p / Z_q from samples drawn from q. The
/// diagnostics report the effective sample size and flag extreme weights.
EvidenceEstimate importance_log_evidence_ratio(
    const ScalarFn& log_p_unnorm, const ScalarFn& log_q_norm,
    const std::vector<std::vector<double>>& samples, ImportanceMode mode);

/// Convenience: evidence of a model by importance sampling from its own
/// prior (q = prior, p = prior * likelihood).
EvidenceEstimate importance_log_evidence(const ModelSpec& model, int n_samples,
                                         RngHandle& rng,
                                         ImportanceMode mode = ImportanceMode::Simple);

// ---------------------------------------------------------------------------
// Thermodynamic integration

struct TiConfig {
  int sweeps = 500;   // measurement sweeps per rung
  int burnin = -1;    // steps discarded per rung; -1 means equal to sweeps
  int batches = 20;   // batch-means blocks for the per-rung std error
  bool riemann_left = false;  // left-Riemann sum instead of trapezoid
  std::vector<double> init_step_scales;  // empty: sized from prior draws
};

/// log Z from the beta-integral of the expected log-likelihood along the
/// geometric path, with one warm-started Metropolis chain per rung.
EvidenceEstimate thermodynamic_integration(const ModelSpec& model,
                                           const Schedule& schedule,
                                           const TiConfig& config,
                                           RngHandle& rng);

// ---------------------------------------------------------------------------
// Annealed importance sampling

struct AisConfig {
  int steps_per_rung = 10;
  std::vector<double> init_step_scales;  // empty: sized from prior draws
};

struct AisRun {
  std::vector<double> log_weights;      // one per chain
  std::vector<double> rung_acceptance;  // pooled across chains
};

/// M independent annealing chains; each weight is
/// sum_i (beta_{i+1} - beta_i) * log L(x_i). log Z is the arithmetic
/// average of the weights (log_mean_exp), std error by jackknife over
/// chains.
std::pair<EvidenceEstimate, AisRun> ais_log_evidence(const ModelSpec& model,
                                                     const Schedule& schedule,
                                                     int n_chains,
                                                     const AisConfig& config,
                                                     RngHandle& rng);

struct AisTiContrast {
  double log_z_arith = 0.0;  // AIS estimate, log_mean_exp of the weights
  double log_z_geom = 0.0;   // TI-style geometric average, mean of the weights
};

/// Arithmetic vs geometric averaging of the same weights; arith >= geom by
/// Jensen, with equality only for identical weights.
AisTiContrast ais_ti_contrast(const AisRun& run);

}  // namespace evkit
