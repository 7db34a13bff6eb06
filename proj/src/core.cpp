#include "evkit/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evkit {

RngHandle::RngHandle(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id & 0xffffffffu),
                    static_cast<std::uint32_t>(stream_id >> 32),
                    0x9e3779b9u};
  engine_.seed(seq);
}

double RngHandle::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngHandle::uniform_in(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::uint64_t RngHandle::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be > 0");
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(engine_()) * n) >> 64);
}

double RngHandle::normal() {
  double u1 = 1.0 - uniform();  // (0, 1]
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double RngHandle::gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be > 0");
  if (shape < 1.0) {
    // Boost to shape+1 and scale back.
    double u = 1.0 - uniform();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = 1.0 - uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

ModelSpec with_eval_counter(const ModelSpec& model, std::uint64_t* counter) {
  ModelSpec counted = model;
  auto inner = model.log_likelihood;
  counted.log_likelihood = [inner, counter](const std::vector<double>& theta) {
    ++*counter;
    return inner(theta);
  };
  return counted;
}

LogOddsResult make_log_odds(const EvidenceEstimate& first,
                            const EvidenceEstimate& second) {
  LogOddsResult r;
  r.first = first;
  r.second = second;
  r.log_or = first.log_z - second.log_z;
  r.std_err = std::sqrt(first.std_err * first.std_err +
                        second.std_err * second.std_err);
  return r;
}

double log_sum_exp(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  double m = *std::max_element(values.begin(), values.end());
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

double log_mean_exp(const std::vector<double>& values) {
  return log_sum_exp(values) - std::log(static_cast<double>(values.size()));
}

double log_diff_exp(double a, double b) {
  if (b == kNegInf) return a;
  if (!(a >= b)) throw std::invalid_argument("log_diff_exp: need a >= b");
  double d = b - a;
  if (d == 0.0) return kNegInf;
  return a + std::log1p(-std::exp(d));
}

double log_erfc(double x) {
  if (x < 25.0) return std::log(std::erfc(x));
  // Asymptotic series; erfc underflows near x = 26.6.
  double x2 = x * x;
  double series = 1.0 - 0.5 / x2 + 0.75 / (x2 * x2) - 1.875 / (x2 * x2 * x2);
  return -x2 - std::log(x * std::sqrt(M_PI)) + std::log(series);
}

namespace {

// Fold a proposal back into [lo, hi] by reflection; with one or both bounds
// infinite the walk is unbounded on that side.
double reflect_into(double y, const Bounds& b) {
  bool lo_fin = std::isfinite(b.lo);
  bool hi_fin = std::isfinite(b.hi);
  if (!lo_fin && !hi_fin) return y;
  if (lo_fin && hi_fin) {
    double w = b.hi - b.lo;
    double t = std::fmod(y - b.lo, 2.0 * w);
    if (t < 0.0) t += 2.0 * w;
    return t <= w ? b.lo + t : b.hi - (t - w);
  }
  if (lo_fin && y < b.lo) return 2.0 * b.lo - y;
  if (hi_fin && y > b.hi) return 2.0 * b.hi - y;
  return y;
}

double target_log_density(const Target& target, double log_prior,
                          double log_likelihood) {
  switch (target.kind) {
    case Target::Kind::Prior:
      return log_prior;
    case Target::Kind::Tempered:
      return log_prior + target.value * log_likelihood;
    case Target::Kind::Constrained:
      return log_prior;  // support handled separately
  }
  return kNegInf;
}

void check_state(const ChainState& state, const Target& target) {
  if (!std::isfinite(state.log_prior))
    throw std::domain_error("metropolis_step: point outside prior support");
  if (target.kind == Target::Kind::Tempered &&
      !std::isfinite(state.log_likelihood))
    throw std::domain_error("metropolis_step: non-finite log density");
  if (target.kind == Target::Kind::Constrained &&
      !(state.log_likelihood >= target.value))
    throw std::domain_error(
        "metropolis_step: point violates the likelihood floor");
  if (std::isnan(state.log_likelihood))
    throw std::domain_error("metropolis_step: non-finite log density");
}

}  // namespace

ChainState make_chain_state(const ModelSpec& model, std::vector<double> theta) {
  ChainState s;
  s.log_prior = model.log_prior(theta);
  s.log_likelihood =
      std::isfinite(s.log_prior) ? model.log_likelihood(theta) : kNegInf;
  s.theta = std::move(theta);
  return s;
}

bool metropolis_step_inplace(const ModelSpec& model, ChainState& state,
                             const std::vector<double>& step_scales,
                             const Target& target, RngHandle& rng) {
  const int n = model.dim;
  std::vector<double> proposal(state.theta);
  for (int i = 0; i < n; ++i) {
    double y = proposal[i] + step_scales[i] * rng.normal();
    if (i < static_cast<int>(model.bounds.size()))
      y = reflect_into(y, model.bounds[i]);
    proposal[i] = y;
  }

  double lp = model.log_prior(proposal);
  if (lp == kNegInf) return false;

  double ll = model.log_likelihood(proposal);
  if (target.kind == Target::Kind::Constrained && !(ll >= target.value))
    return false;

  double ratio = target_log_density(target, lp, ll) -
                 target_log_density(target, state.log_prior,
                                    state.log_likelihood);
  bool accept = ratio >= 0.0 || std::log(rng.uniform()) < ratio;
  if (accept) {
    state.theta = std::move(proposal);
    state.log_prior = lp;
    state.log_likelihood = ll;
  }
  return accept;
}

StepResult metropolis_step(const ModelSpec& model,
                           const std::vector<double>& theta,
                           const std::vector<double>& step_scales,
                           const Target& target, RngHandle& rng) {
  if (static_cast<int>(theta.size()) != model.dim ||
      static_cast<int>(step_scales.size()) != model.dim)
    throw std::invalid_argument("metropolis_step: dimension mismatch");
  ChainState state = make_chain_state(model, theta);
  check_state(state, target);
  bool accepted = metropolis_step_inplace(model, state, step_scales, target, rng);
  return {std::move(state.theta), accepted};
}

std::vector<double> adapt_step_scales(const std::vector<std::uint8_t>& history,
                                      const std::vector<double>& step_scales) {
  if (history.empty())
    throw std::invalid_argument("adapt_step_scales: empty history");
  double rate = 0.0;
  for (auto a : history) rate += a ? 1.0 : 0.0;
  rate /= static_cast<double>(history.size());
  double factor = 1.0;
  if (rate > 0.5)
    factor = std::exp(0.1);
  else if (rate < 0.2)
    factor = std::exp(-0.1);
  std::vector<double> out(step_scales);
  for (double& s : out) s *= factor;
  return out;
}

}  // namespace evkit
