#include "evkit/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evkit {

namespace {

// Per-dimension random-walk scales when the caller gives none: half the
// prior standard deviation, estimated from a handful of prior draws.
std::vector<double> scales_from_prior(const ModelSpec& model, RngHandle& rng) {
  constexpr int kDraws = 64;
  std::vector<double> mean(model.dim, 0.0), sq(model.dim, 0.0);
  for (int i = 0; i < kDraws; ++i) {
    std::vector<double> t = model.prior_sample(rng);
    for (int j = 0; j < model.dim; ++j) {
      mean[j] += t[j];
      sq[j] += t[j] * t[j];
    }
  }
  std::vector<double> scales(model.dim);
  for (int j = 0; j < model.dim; ++j) {
    mean[j] /= kDraws;
    double var = sq[j] / kDraws - mean[j] * mean[j];
    scales[j] = 0.5 * std::sqrt(std::max(var, 1e-12));
  }
  return scales;
}

std::vector<double> resolve_scales(const ModelSpec& model,
                                   const std::vector<double>& given,
                                   RngHandle& rng) {
  if (!given.empty()) {
    if (static_cast<int>(given.size()) != model.dim)
      throw std::invalid_argument("step scales: dimension mismatch");
    return given;
  }
  return scales_from_prior(model, rng);
}

void check_schedule(const Schedule& schedule) {
  const auto& b = schedule.betas;
  if (b.size() < 2 || b.front() != 0.0 || b.back() != 1.0)
    throw std::invalid_argument("schedule: endpoints must be 0 and 1");
  for (std::size_t i = 1; i < b.size(); ++i)
    if (!(b[i] > b[i - 1]))
      throw std::invalid_argument("schedule: betas must increase strictly");
}

}  // namespace

Schedule make_schedule(int k, ScheduleShape shape) {
  if (k < 1) throw std::invalid_argument("make_schedule: K must be >= 1");
  Schedule s;
  s.betas.resize(k + 1);
  for (int i = 0; i <= k; ++i) {
    double t = static_cast<double>(i) / k;
    s.betas[i] =
        shape.kind == ScheduleShape::Kind::Linear ? t : std::pow(t, shape.gamma);
  }
  s.betas.front() = 0.0;
  s.betas.back() = 1.0;
  return s;
}

double importance_expectation(const ScalarFn& f, const ScalarFn& log_p,
                              const ScalarFn& log_q,
                              const std::vector<std::vector<double>>& samples) {
  if (samples.empty())
    throw std::invalid_argument("importance_expectation: no samples");
  std::vector<double> log_w(samples.size());
  std::vector<double> fx(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double lq = log_q(samples[i]);
    if (!std::isfinite(lq))
      throw std::domain_error("importance_expectation: log q not finite");
    log_w[i] = log_p(samples[i]) - lq;
    fx[i] = f(samples[i]);
  }
  double lse = log_sum_exp(log_w);
  if (lse == kNegInf)
    throw std::runtime_error("importance sampling: q misses p's support");
  double acc = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    acc += std::exp(log_w[i] - lse) * fx[i];
  return acc;
}

EvidenceEstimate importance_log_evidence_ratio(
    const ScalarFn& log_p_unnorm, const ScalarFn& log_q_norm,
    const std::vector<std::vector<double>>& samples, ImportanceMode mode) {
  const std::size_t n = samples.size();
  if (n < 2)
    throw std::invalid_argument("importance_log_evidence_ratio: need >= 2 samples");
  std::vector<double> log_w(n);
  for (std::size_t i = 0; i < n; ++i)
    log_w[i] = log_p_unnorm(samples[i]) - log_q_norm(samples[i]);
  double lse = log_sum_exp(log_w);
  if (lse == kNegInf)
    throw std::runtime_error("importance sampling: q misses p's support");

  // Shifted weights in (0, 1] keep the moment sums well scaled.
  double m = *std::max_element(log_w.begin(), log_w.end());
  double s1 = 0.0, s2 = 0.0;
  for (double lw : log_w) {
    double a = std::exp(lw - m);
    s1 += a;
    s2 += a * a;
  }
  double ess = s1 * s1 / s2;

  EvidenceEstimate est;
  est.n_likelihood_evals = n;
  if (mode == ImportanceMode::Simple) {
    est.log_z = m + std::log(s1 / n);
    // Delta method on the weight population.
    double mean_a = s1 / n;
    double var_a = std::max(s2 / n - mean_a * mean_a, 0.0);
    est.std_err = std::sqrt(var_a / n) / mean_a;
  } else {
    // sum(p^2/q^2) / sum(p/q), the self-normalized ratio form.
    est.log_z = m + std::log(s2 / s1);
    // Jackknife over samples.
    double mean_jk = 0.0, sq_jk = 0.0;
    for (double lw : log_w) {
      double a = std::exp(lw - m);
      double v = std::log((s2 - a * a) / (s1 - a));
      mean_jk += v;
      sq_jk += v * v;
    }
    mean_jk /= n;
    double var_jk = std::max(sq_jk / n - mean_jk * mean_jk, 0.0);
    est.std_err = std::sqrt((n - 1.0) * var_jk);
  }
  est.diagnostics["ess"] = ess;
  est.diagnostics["extreme_weights"] = ess < 5.0 ? 1.0 : 0.0;
  return est;
}

EvidenceEstimate importance_log_evidence(const ModelSpec& model, int n_samples,
                                         RngHandle& rng, ImportanceMode mode) {
  std::uint64_t evals = 0;
  ModelSpec counted = with_eval_counter(model, &evals);
  std::vector<std::vector<double>> samples(n_samples);
  for (int i = 0; i < n_samples; ++i) samples[i] = model.prior_sample(rng);
  // p = prior * likelihood, q = prior; the ratio is just the likelihood.
  EvidenceEstimate est = importance_log_evidence_ratio(
      [&counted](const std::vector<double>& t) {
        return counted.log_prior(t) + counted.log_likelihood(t);
      },
      counted.log_prior, samples, mode);
  est.n_likelihood_evals = evals;
  return est;
}

EvidenceEstimate thermodynamic_integration(const ModelSpec& model,
                                           const Schedule& schedule,
                                           const TiConfig& config,
                                           RngHandle& rng) {
  check_schedule(schedule);
  if (config.sweeps < 2)
    throw std::invalid_argument("thermodynamic_integration: sweeps must be >= 2");
  const int n_rungs = schedule.rungs();
  const int burnin = config.burnin < 0 ? config.sweeps : config.burnin;

  std::uint64_t evals = 0;
  ModelSpec counted = with_eval_counter(model, &evals);
  std::vector<double> scales = resolve_scales(model, config.init_step_scales, rng);

  ChainState state = make_chain_state(counted, model.prior_sample(rng));
  std::vector<double> rung_mean(n_rungs), rung_se(n_rungs), rung_accept(n_rungs);

  for (int k = 0; k < n_rungs; ++k) {
    Target target = Target::tempered(schedule.betas[k]);

    // Burn-in with adaptation, frozen before measurement starts.
    std::vector<std::uint8_t> window;
    for (int s = 0; s < burnin; ++s) {
      window.push_back(metropolis_step_inplace(counted, state, scales, target, rng));
      if (static_cast<int>(window.size()) == 50) {
        scales = adapt_step_scales(window, scales);
        window.clear();
      }
    }

    std::vector<double> draws(config.sweeps);
    int accepted = 0;
    for (int s = 0; s < config.sweeps; ++s) {
      accepted += metropolis_step_inplace(counted, state, scales, target, rng);
      draws[s] = state.log_likelihood;
    }
    rung_accept[k] = static_cast<double>(accepted) / config.sweeps;
    if (rung_accept[k] < 0.01)
      throw std::runtime_error("chain frozen at beta=" +
                               std::to_string(schedule.betas[k]));

    double mean = 0.0;
    for (double d : draws) mean += d;
    mean /= config.sweeps;
    rung_mean[k] = mean;

    // Batch means error for the rung average.
    int n_batches = std::min(config.batches, config.sweeps);
    int batch_len = config.sweeps / n_batches;
    double bvar = 0.0;
    for (int b = 0; b < n_batches; ++b) {
      double bm = 0.0;
      for (int s = b * batch_len; s < (b + 1) * batch_len; ++s) bm += draws[s];
      bm /= batch_len;
      bvar += (bm - mean) * (bm - mean);
    }
    bvar /= n_batches > 1 ? (n_batches - 1.0) : 1.0;
    rung_se[k] = std::sqrt(bvar / n_batches);
  }

  EvidenceEstimate est;
  double var = 0.0;
  if (config.riemann_left) {
    for (int k = 0; k + 1 < n_rungs; ++k) {
      double db = schedule.betas[k + 1] - schedule.betas[k];
      est.log_z += rung_mean[k] * db;
      var += db * db * rung_se[k] * rung_se[k];
    }
  } else {
    for (int k = 0; k + 1 < n_rungs; ++k) {
      double db = schedule.betas[k + 1] - schedule.betas[k];
      est.log_z += 0.5 * (rung_mean[k] + rung_mean[k + 1]) * db;
    }
    for (int k = 0; k < n_rungs; ++k) {
      double w_lo = k > 0 ? schedule.betas[k] - schedule.betas[k - 1] : 0.0;
      double w_hi = k + 1 < n_rungs ? schedule.betas[k + 1] - schedule.betas[k] : 0.0;
      double w = 0.5 * (w_lo + w_hi);
      var += w * w * rung_se[k] * rung_se[k];
    }
  }
  est.std_err = std::sqrt(var);
  est.n_likelihood_evals = evals;
  est.diagnostics["rungs"] = n_rungs;
  double acc_min = 1.0, acc_mean = 0.0;
  for (int k = 0; k < n_rungs; ++k) {
    est.diagnostics["accept_rung_" + std::to_string(k)] = rung_accept[k];
    est.diagnostics["rung_mean_" + std::to_string(k)] = rung_mean[k];
    est.diagnostics["rung_se_" + std::to_string(k)] = rung_se[k];
    acc_min = std::min(acc_min, rung_accept[k]);
    acc_mean += rung_accept[k] / n_rungs;
  }
  est.diagnostics["accept_min"] = acc_min;
  est.diagnostics["accept_mean"] = acc_mean;
  return est;
}

std::pair<EvidenceEstimate, AisRun> ais_log_evidence(const ModelSpec& model,
                                                     const Schedule& schedule,
                                                     int n_chains,
                                                     const AisConfig& config,
                                                     RngHandle& rng) {
  check_schedule(schedule);
  if (n_chains < 2)
    throw std::invalid_argument("ais_log_evidence: need at least 2 chains");
  if (config.steps_per_rung < 1)
    throw std::invalid_argument("ais_log_evidence: steps_per_rung must be >= 1");
  const int n_rungs = schedule.rungs();

  std::uint64_t evals = 0;
  ModelSpec counted = with_eval_counter(model, &evals);

  // Pilot chain fixes one step scale per rung; the measurement chains then
  // run with frozen kernels.
  std::vector<std::vector<double>> rung_scales(n_rungs);
  {
    std::vector<double> scales =
        resolve_scales(model, config.init_step_scales, rng);
    ChainState pilot = make_chain_state(counted, model.prior_sample(rng));
    int pilot_steps = std::max(config.steps_per_rung, 25);
    for (int k = 0; k < n_rungs; ++k) {
      Target target = Target::tempered(schedule.betas[k]);
      std::vector<std::uint8_t> window(pilot_steps);
      for (int s = 0; s < pilot_steps; ++s)
        window[s] = metropolis_step_inplace(counted, pilot, scales, target, rng);
      scales = adapt_step_scales(window, scales);
      rung_scales[k] = scales;
    }
  }

  AisRun run;
  run.log_weights.resize(n_chains);
  run.rung_acceptance.assign(n_rungs, 0.0);

  for (int j = 0; j < n_chains; ++j) {
    RngHandle chain_rng(rng.next_u64(), static_cast<std::uint64_t>(j));
    ChainState state = make_chain_state(counted, model.prior_sample(chain_rng));
    double log_w = 0.0;
    // x_0 is a prior draw scored at the first interval; each later state is
    // evolved at beta_i and scored with (beta_{i+1} - beta_i).
    log_w += (schedule.betas[1] - schedule.betas[0]) * state.log_likelihood;
    for (int i = 1; i + 1 < n_rungs; ++i) {
      Target target = Target::tempered(schedule.betas[i]);
      int accepted = 0;
      for (int s = 0; s < config.steps_per_rung; ++s)
        accepted += metropolis_step_inplace(counted, state, rung_scales[i],
                                            target, chain_rng);
      run.rung_acceptance[i] +=
          static_cast<double>(accepted) / (config.steps_per_rung * n_chains);
      log_w += (schedule.betas[i + 1] - schedule.betas[i]) * state.log_likelihood;
    }
    run.log_weights[j] = log_w;
  }

  EvidenceEstimate est;
  est.log_z = log_mean_exp(run.log_weights);
  // Jackknife over chains.
  double m = *std::max_element(run.log_weights.begin(), run.log_weights.end());
  double s1 = 0.0;
  for (double lw : run.log_weights) s1 += std::exp(lw - m);
  double mean_jk = 0.0, sq_jk = 0.0;
  for (double lw : run.log_weights) {
    double v = m + std::log((s1 - std::exp(lw - m)) / (n_chains - 1.0));
    mean_jk += v;
    sq_jk += v * v;
  }
  mean_jk /= n_chains;
  double var_jk = std::max(sq_jk / n_chains - mean_jk * mean_jk, 0.0);
  est.std_err = std::sqrt((n_chains - 1.0) * var_jk);
  est.n_likelihood_evals = evals;
  est.diagnostics["chains"] = n_chains;
  est.diagnostics["rungs"] = n_rungs;
  return {est, run};
}

AisTiContrast ais_ti_contrast(const AisRun& run) {
  if (run.log_weights.size() < 2)
    throw std::invalid_argument("ais_ti_contrast: need at least 2 weights");
  AisTiContrast c;
  c.log_z_arith = log_mean_exp(run.log_weights);
  double mean = 0.0;
  for (double lw : run.log_weights) mean += lw;
  c.log_z_geom = mean / run.log_weights.size();
  return c;
}

}  // namespace evkit
