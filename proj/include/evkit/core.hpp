#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace evkit {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

/// Deterministic random stream. Equal (seed, stream_id) pairs reproduce the
/// same draw sequence bit for bit; distinct stream ids give independent
/// streams for repeated runs. All variate algorithms are fixed here rather
/// than delegated to <random> distributions, whose output is
/// implementation-defined.
class RngHandle {
 public:
  explicit RngHandle(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform_in(double lo, double hi);
  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via Box-Muller (one variate per call).
  double normal();
  /// Gamma(shape, 1) via Marsaglia-Tsang.
  double gamma(double shape);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

struct Bounds {
  double lo = kNegInf;
  double hi = kPosInf;
};

/// A model as seen by every estimator: normalized log-prior, log-likelihood,
/// an exact prior sampler, and the per-dimension prior support. Immutable
/// after construction and safe to share across concurrent runs.
struct ModelSpec {
  int dim = 0;
  std::function<double(const std::vector<double>&)> log_prior;
  std::function<double(const std::vector<double>&)> log_likelihood;
  std::function<std::vector<double>(RngHandle&)> prior_sample;
  std::vector<Bounds> bounds;
};

/// Wraps a model so every log_likelihood call bumps *counter. The counter
/// must outlive the returned model.
ModelSpec with_eval_counter(const ModelSpec& model, std::uint64_t* counter);

struct EvidenceEstimate {
  double log_z = 0.0;
  double std_err = 0.0;
  std::uint64_t n_likelihood_evals = 0;
  std::map<std::string, double> diagnostics;
};

struct LogOddsResult {
  double log_or = 0.0;     // always first.log_z - second.log_z
  double std_err = 0.0;    // root-sum-square of the two std errors
  EvidenceEstimate first;
  EvidenceEstimate second;
};

LogOddsResult make_log_odds(const EvidenceEstimate& first,
                            const EvidenceEstimate& second);

// ---------------------------------------------------------------------------
// Log-domain arithmetic

/// log sum_i exp(v_i), shifted by the max; -inf for an all-(-inf) input.
/// Throws std::invalid_argument on an empty list.
double log_sum_exp(const std::vector<double>& values);

/// log mean_i exp(v_i).
double log_mean_exp(const std::vector<double>& values);

/// log(exp(a) - exp(b)) for a >= b.
double log_diff_exp(double a, double b);

/// log(erfc(x)), stable for large positive x where erfc underflows.
double log_erfc(double x);

// ---------------------------------------------------------------------------
// Random-walk Metropolis kernel

/// Target of a Metropolis move: the prior itself, the tempered posterior
/// prior * likelihood^beta, or the prior restricted to the hard likelihood
/// contour {log_likelihood >= log_l_min}.
struct Target {
  enum class Kind { Prior, Tempered, Constrained };
  Kind kind = Kind::Prior;
  double value = 0.0;  // beta for Tempered, log_l_min for Constrained

  static Target prior() { return {Kind::Prior, 0.0}; }
  static Target tempered(double beta) { return {Kind::Tempered, beta}; }
  static Target constrained(double log_l_min) {
    return {Kind::Constrained, log_l_min};
  }
};

/// Chain state with cached log densities so a sweep costs one likelihood
/// evaluation per proposal.
struct ChainState {
  std::vector<double> theta;
  double log_prior = kNegInf;
  double log_likelihood = kNegInf;
};

ChainState make_chain_state(const ModelSpec& model, std::vector<double> theta);

/// One symmetric Gaussian-proposal Metropolis update of `state`, in place.
/// Bounded dimensions reflect proposals at the boundary so the prior support
/// stays exact. Returns whether the proposal was accepted.
bool metropolis_step_inplace(const ModelSpec& model, ChainState& state,
                             const std::vector<double>& step_scales,
                             const Target& target, RngHandle& rng);

struct StepResult {
  std::vector<double> theta;
  bool accepted = false;
};

/// Stateless form of the kernel: validates theta, takes one step, returns
/// the new point. Throws std::domain_error if theta violates the target's
/// support or has a non-finite log density.
StepResult metropolis_step(const ModelSpec& model,
                           const std::vector<double>& theta,
                           const std::vector<double>& step_scales,
                           const Target& target, RngHandle& rng);

/// Scale adaptation from a window of accepted flags: grow by e^{0.1} above
/// 50% acceptance, shrink by e^{-0.1} below 20%, leave alone in between.
/// Only for burn-in; freeze during measurement.
std::vector<double> adapt_step_scales(const std::vector<std::uint8_t>& history,
                                      const std::vector<double>& step_scales);

}  // namespace evkit
