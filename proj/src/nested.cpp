#include "evkit/nested.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace evkit {

namespace {

std::vector<double> initial_scales(const ModelSpec& model,
                                   const std::vector<double>& given,
                                   RngHandle& rng) {
  if (!given.empty()) {
    if (static_cast<int>(given.size()) != model.dim)
      throw std::invalid_argument("nested_sampling: step scale dim mismatch");
    return given;
  }
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

// log(exp(a) + exp(b)) for the running evidence sum.
double log_plus(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

struct Accumulator {
  double log_z = kNegInf;
  double h = 0.0;

  // log_wt is the point's full evidence contribution; log_l its contour
  // level, used only by the information update.
  void add_weighted(double log_wt, double log_l) {
    if (log_wt == kNegInf) return;
    double log_z_new = log_plus(log_z, log_wt);
    double carried =
        log_z == kNegInf ? 0.0 : std::exp(log_z - log_z_new) * (h + log_z);
    h = std::exp(log_wt - log_z_new) * log_l + carried - log_z_new;
    log_z = log_z_new;
  }

  void add(double log_l, double log_mass) {
    add_weighted(log_mass + log_l, log_l);
  }
};

}  // namespace

double shrinkage_log_mass(std::uint64_t i, int n_live, ShrinkageMode mode,
                          RngHandle* rng) {
  if (n_live < 1)
    throw std::invalid_argument("shrinkage_log_mass: n_live must be >= 1");
  if (mode == ShrinkageMode::Deterministic)
    return -static_cast<double>(i) / n_live;
  if (rng == nullptr)
    throw std::invalid_argument("shrinkage_log_mass: sampled mode needs an rng");
  double acc = 0.0;
  for (std::uint64_t k = 0; k < i; ++k)
    acc += std::log(1.0 - rng->uniform()) / n_live;  // log t, t ~ Beta(N,1)
  return acc;
}

NestedRun nested_sampling(const ModelSpec& model, const NestedConfig& config,
                          RngHandle& rng) {
  if (config.n_live < 2)
    throw std::invalid_argument("nested_sampling: n_live must be >= 2");
  if (config.mcmc_steps < 1)
    throw std::invalid_argument("nested_sampling: mcmc_steps must be >= 1");
  const int n = config.n_live;

  std::uint64_t evals = 0;
  ModelSpec counted = with_eval_counter(model, &evals);
  std::vector<double> scales = initial_scales(model, config.init_step_scales, rng);

  std::vector<LivePoint> live(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> t = model.prior_sample(rng);
    live[i].log_prior = model.log_prior(t);
    live[i].log_l = counted.log_likelihood(t);
    live[i].theta = std::move(t);
    if (std::isnan(live[i].log_l))
      throw std::runtime_error("nested_sampling: non-finite likelihood");
  }

  NestedRun run;
  run.n_live = n;
  Accumulator acc;
  double log_x_prev = 0.0;  // X_0 = 1
  double prev_log_l = kNegInf;
  int frozen_iterations = 0;
  std::uint64_t total_accepted = 0, total_steps = 0;
  double prev_log_z = kNegInf;

  for (std::uint64_t iter = 1;; ++iter) {
    if (iter > config.max_iterations)
      throw std::runtime_error("nested_sampling: iteration cap exceeded");

    int worst = 0;
    int best = 0;
    for (int i = 1; i < n; ++i) {
      if (live[i].log_l < live[worst].log_l) worst = i;
      if (live[i].log_l > live[best].log_l) best = i;
    }
    double floor = live[worst].log_l;
    if (floor < prev_log_l)
      throw std::runtime_error("nested_sampling: likelihood ordering broken");
    prev_log_l = floor;

    double log_x =
        config.shrinkage == ShrinkageMode::Deterministic
            ? -static_cast<double>(iter) / n
            : log_x_prev + std::log(1.0 - rng.uniform()) / n;

    // Mass width: rectangle L_i (X_{i-1} - X_i), or the trapezoid averaging
    // this contour level with the previous one.
    double log_mass = log_diff_exp(log_x_prev, log_x);
    if (config.trapezoid) {
      double ll_prev = run.dead_points.empty() ? kNegInf
                                               : run.dead_points.back().log_l;
      double log_avg = log_plus(floor - std::log(2.0), ll_prev - std::log(2.0));
      acc.add_weighted(log_mass + log_avg, floor);
    } else {
      acc.add(floor, log_mass);
    }

    DeadPoint dead;
    dead.theta = live[worst].theta;
    dead.log_l = floor;
    dead.log_x = log_x;
    dead.log_mass = log_mass;
    dead.partial_log_z = acc.log_z;
    run.dead_points.push_back(std::move(dead));

    // Termination checks before replacing the worst point.
    bool stop = false;
    double remainder = live[best].log_l + log_x - acc.log_z;
    if (config.termination == TerminationRule::RemainingMass) {
      stop = remainder < std::log(config.termination_tol);
    } else {
      stop = std::isfinite(prev_log_z) &&
             acc.log_z - prev_log_z < config.evidence_delta_tol;
    }
    prev_log_z = acc.log_z;
    if (stop) {
      run.iterations = iter;
      run.final_remainder = remainder;
      log_x_prev = log_x;
      break;
    }

    // Clone a random survivor and evolve it inside the new contour.
    int source = static_cast<int>(rng.uniform_index(n - 1));
    if (source >= worst) ++source;
    ChainState state;
    state.theta = live[source].theta;
    state.log_prior = live[source].log_prior;
    state.log_likelihood = live[source].log_l;
    Target target = Target::constrained(floor);
    int accepted = 0;
    std::vector<std::uint8_t> history(config.mcmc_steps);
    for (int s = 0; s < config.mcmc_steps; ++s) {
      history[s] = metropolis_step_inplace(counted, state, scales, target, rng);
      accepted += history[s];
    }
    total_accepted += accepted;
    total_steps += config.mcmc_steps;
    if (accepted == 0) {
      if (++frozen_iterations >= 10)
        throw std::runtime_error("nested_sampling: stuck contour");
    } else {
      frozen_iterations = 0;
    }
    scales = adapt_step_scales(history, scales);

    if (state.log_likelihood < floor)
      throw std::runtime_error("nested_sampling: replacement below floor");
    live[worst].theta = std::move(state.theta);
    live[worst].log_prior = state.log_prior;
    live[worst].log_l = state.log_likelihood;
    log_x_prev = log_x;
  }

  // Fold in the surviving live points, each carrying X_final / N of mass.
  std::sort(live.begin(), live.end(),
            [](const LivePoint& a, const LivePoint& b) { return a.log_l < b.log_l; });
  double log_mass_live = log_x_prev - std::log(static_cast<double>(n));
  for (int j = 0; j < n; ++j) {
    acc.add(live[j].log_l, log_mass_live);
    DeadPoint dead;
    dead.theta = std::move(live[j].theta);
    dead.log_l = live[j].log_l;
    double frac = static_cast<double>(n - 1 - j) / n;
    dead.log_x = frac > 0.0 ? log_x_prev + std::log(frac) : kNegInf;
    dead.log_mass = log_mass_live;
    dead.partial_log_z = acc.log_z;
    run.dead_points.push_back(std::move(dead));
  }

  run.log_z = acc.log_z;
  run.information_h = std::max(acc.h, 0.0);
  run.log_z_std_err = std::sqrt(run.information_h / n);
  run.n_likelihood_evals = evals;
  run.mean_acceptance =
      total_steps > 0 ? static_cast<double>(total_accepted) / total_steps : 0.0;
  return run;
}

EvidenceEstimate to_estimate(const NestedRun& run) {
  EvidenceEstimate est;
  est.log_z = run.log_z;
  est.std_err = run.log_z_std_err;
  est.n_likelihood_evals = run.n_likelihood_evals;
  est.diagnostics["information_h"] = run.information_h;
  est.diagnostics["iterations"] = static_cast<double>(run.iterations);
  est.diagnostics["n_live"] = run.n_live;
  est.diagnostics["mean_acceptance"] = run.mean_acceptance;
  return est;
}

std::vector<double> posterior_weights(const NestedRun& run) {
  if (run.dead_points.empty())
    throw std::invalid_argument("posterior_weights: empty run");
  std::vector<double> log_w(run.dead_points.size());
  for (std::size_t i = 0; i < run.dead_points.size(); ++i)
    log_w[i] = run.dead_points[i].log_l + run.dead_points[i].log_mass;
  double lse = log_sum_exp(log_w);
  std::vector<double> w(log_w.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_w[i] - lse);
  return w;
}

void write_run_csv(const NestedRun& run, std::ostream& out) {
  out << "iteration,log_l,log_x,partial_log_z\n";
  char buf[160];
  for (std::size_t i = 0; i < run.dead_points.size(); ++i) {
    const DeadPoint& d = run.dead_points[i];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", i + 1, d.log_l,
                  d.log_x, d.partial_log_z);
    out << buf;
  }
}

RepeatedRunsResult repeated_runs(const ModelSpec& model,
                                 const NestedConfig& config, int r,
                                 std::uint64_t seed,
                                 std::uint64_t base_stream) {
  if (r < 2) throw std::invalid_argument("repeated_runs: need R >= 2");
  RepeatedRunsResult result;
  result.runs.resize(r);

  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  auto worker = [&model, &config, seed, base_stream, &result](int idx) {
    RngHandle run_rng(seed, base_stream + static_cast<std::uint64_t>(idx));
    result.runs[idx] = nested_sampling(model, config, run_rng);
  };
  // Strided assignment keeps the result order canonical by stream id.
  std::vector<std::future<void>> futures;
  for (unsigned w = 0; w < workers; ++w) {
    futures.push_back(std::async(std::launch::async, [&, w]() {
      for (int idx = static_cast<int>(w); idx < r;
           idx += static_cast<int>(workers))
        worker(idx);
    }));
  }
  for (auto& f : futures) f.get();

  double mean = 0.0;
  for (const NestedRun& run : result.runs) mean += run.log_z;
  mean /= r;
  double sq = 0.0;
  for (const NestedRun& run : result.runs)
    sq += (run.log_z - mean) * (run.log_z - mean);
  result.mean_log_z = mean;
  result.sample_std = std::sqrt(sq / (r - 1.0));
  return result;
}

}  // namespace evkit
