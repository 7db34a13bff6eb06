#include "evkit/varbayes.hpp"

#include <cmath>
#include <stdexcept>

namespace evkit {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

void check_hyper(const GaussMeanPrecHyper& h) {
  if (!(h.prior_mean_var > 0.0) || !(h.prec_shape > 0.0) || !(h.prec_rate > 0.0))
    throw std::invalid_argument("gauss_mean_prec: hyperparameters must be > 0");
}

void check_state(const MeanFieldState& s) {
  check_hyper(s.hyper);
  if (!(s.q_mean_var > 0.0) || !(s.q_prec_shape > 0.0) || !(s.q_prec_rate > 0.0))
    throw std::invalid_argument("mean-field state: parameters must be > 0");
}

struct DataSums {
  double n = 0.0, sum = 0.0, sum_sq = 0.0;
};

DataSums sums_of(const std::vector<double>& data) {
  DataSums s;
  s.n = static_cast<double>(data.size());
  for (double y : data) {
    s.sum += y;
    s.sum_sq += y * y;
  }
  return s;
}

}  // namespace

double digamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("digamma: x must be > 0");
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  double inv = 1.0 / x, inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                            inv2 * (1.0 / 252.0 -
                                    inv2 * (1.0 / 240.0 - inv2 / 132.0))));
  return result;
}

MeanFieldState initial_state(const GaussMeanPrecHyper& hyper) {
  check_hyper(hyper);
  MeanFieldState s;
  s.hyper = hyper;
  s.q_mean = hyper.prior_mean;
  s.q_mean_var = hyper.prior_mean_var;
  s.q_prec_shape = hyper.prec_shape;
  s.q_prec_rate = hyper.prec_rate;
  return s;
}

double negative_free_energy(const MeanFieldState& state,
                            const std::vector<double>& data) {
  check_state(state);
  const GaussMeanPrecHyper& h = state.hyper;
  DataSums d = sums_of(data);
  double e_prec = state.q_prec_shape / state.q_prec_rate;
  double e_log_prec = digamma(state.q_prec_shape) - std::log(state.q_prec_rate);
  // E[(y_i - mean)^2] summed over the data under Q(mean).
  double e_sq_resid = d.sum_sq - 2.0 * state.q_mean * d.sum +
                      d.n * (state.q_mean * state.q_mean + state.q_mean_var);

  double e_log_like =
      0.5 * d.n * (e_log_prec - std::log(kTwoPi)) - 0.5 * e_prec * e_sq_resid;
  double dm = state.q_mean - h.prior_mean;
  double e_log_prior_mean = -0.5 * std::log(kTwoPi * h.prior_mean_var) -
                            (dm * dm + state.q_mean_var) / (2.0 * h.prior_mean_var);
  double e_log_prior_prec = h.prec_shape * std::log(h.prec_rate) -
                            std::lgamma(h.prec_shape) +
                            (h.prec_shape - 1.0) * e_log_prec -
                            h.prec_rate * e_prec;
  double entropy_mean = 0.5 * std::log(kTwoPi * M_E * state.q_mean_var);
  double entropy_prec = state.q_prec_shape - std::log(state.q_prec_rate) +
                        std::lgamma(state.q_prec_shape) +
                        (1.0 - state.q_prec_shape) * digamma(state.q_prec_shape);
  return e_log_like + e_log_prior_mean + e_log_prior_prec + entropy_mean +
         entropy_prec;
}

MeanFieldState coordinate_update(const MeanFieldState& state, VbBlock block,
                                 const std::vector<double>& data) {
  check_state(state);
  MeanFieldState next = state;
  DataSums d = sums_of(data);
  if (block == VbBlock::Mean) {
    double e_prec = state.q_prec_shape / state.q_prec_rate;
    double prec = 1.0 / state.hyper.prior_mean_var + d.n * e_prec;
    next.q_mean_var = 1.0 / prec;
    next.q_mean = (state.hyper.prior_mean / state.hyper.prior_mean_var +
                   e_prec * d.sum) /
                  prec;
  } else {
    next.q_prec_shape = state.hyper.prec_shape + 0.5 * d.n;
    double e_sq_resid = d.sum_sq - 2.0 * state.q_mean * d.sum +
                        d.n * (state.q_mean * state.q_mean + state.q_mean_var);
    next.q_prec_rate = state.hyper.prec_rate + 0.5 * e_sq_resid;
  }
  return next;
}

VbResult vb_lower_bound(const std::vector<double>& data,
                        const GaussMeanPrecHyper& hyper, int max_sweeps,
                        double tol) {
  if (data.empty()) throw std::invalid_argument("vb_lower_bound: empty data");
  VbResult result;
  result.state = initial_state(hyper);
  double f_prev = negative_free_energy(result.state, data);
  result.state.f_history.push_back(f_prev);
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    result.state = coordinate_update(result.state, VbBlock::Mean, data);
    result.state = coordinate_update(result.state, VbBlock::Precision, data);
    double f = negative_free_energy(result.state, data);
    result.state.f_history.push_back(f);
    result.sweeps = sweep;
    if (std::abs(f - f_prev) < tol) {
      result.converged = true;
      f_prev = f;
      break;
    }
    f_prev = f;
  }
  result.f_final = f_prev;
  return result;
}

double gauss_mean_prec_log_joint(const std::vector<double>& data,
                                 const GaussMeanPrecHyper& hyper, double mean,
                                 double precision) {
  if (!(precision > 0.0)) return kNegInf;
  DataSums d = sums_of(data);
  double resid = d.sum_sq - 2.0 * mean * d.sum + d.n * mean * mean;
  double log_like =
      0.5 * d.n * (std::log(precision) - std::log(kTwoPi)) - 0.5 * precision * resid;
  double dm = mean - hyper.prior_mean;
  double log_prior_mean = -0.5 * std::log(kTwoPi * hyper.prior_mean_var) -
                          dm * dm / (2.0 * hyper.prior_mean_var);
  double log_prior_prec = hyper.prec_shape * std::log(hyper.prec_rate) -
                          std::lgamma(hyper.prec_shape) +
                          (hyper.prec_shape - 1.0) * std::log(precision) -
                          hyper.prec_rate * precision;
  return log_like + log_prior_mean + log_prior_prec;
}

ModelSpec gauss_mean_prec_model(const std::vector<double>& data,
                                const GaussMeanPrecHyper& hyper) {
  check_hyper(hyper);
  ModelSpec spec;
  spec.dim = 2;
  spec.bounds = {{kNegInf, kPosInf}, {0.0, kPosInf}};
  std::vector<double> obs = data;
  GaussMeanPrecHyper h = hyper;
  spec.log_prior = [h](const std::vector<double>& t) {
    if (!(t[1] > 0.0)) return kNegInf;
    double dm = t[0] - h.prior_mean;
    return -0.5 * std::log(kTwoPi * h.prior_mean_var) -
           dm * dm / (2.0 * h.prior_mean_var) +
           h.prec_shape * std::log(h.prec_rate) - std::lgamma(h.prec_shape) +
           (h.prec_shape - 1.0) * std::log(t[1]) - h.prec_rate * t[1];
  };
  spec.log_likelihood = [obs](const std::vector<double>& t) {
    double ll = 0.5 * obs.size() * (std::log(t[1]) - std::log(kTwoPi));
    for (double y : obs) {
      double r = y - t[0];
      ll -= 0.5 * t[1] * r * r;
    }
    return ll;
  };
  spec.prior_sample = [h](RngHandle& rng) {
    double mean = h.prior_mean + std::sqrt(h.prior_mean_var) * rng.normal();
    double precision = rng.gamma(h.prec_shape) / h.prec_rate;
    return std::vector<double>{mean, precision};
  };
  return spec;
}

}  // namespace evkit
