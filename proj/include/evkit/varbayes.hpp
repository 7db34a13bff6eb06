#pragma once

#include <vector>

#include "evkit/core.hpp"

namespace evkit {

/// Gaussian observations with unknown mean (Gaussian prior) and unknown
/// precision (Gamma prior): the smallest model with a nontrivial mean-field
/// split Q(mean) Q(precision).
struct GaussMeanPrecHyper {
  double prior_mean = 0.0;
  double prior_mean_var = 1.0;
  double prec_shape = 2.0;
  double prec_rate = 2.0;
};

struct MeanFieldState {
  GaussMeanPrecHyper hyper;
  // Q(mean) = Normal(q_mean, q_mean_var)
  double q_mean = 0.0;
  double q_mean_var = 1.0;
  // Q(precision) = Gamma(q_prec_shape, q_prec_rate)
  double q_prec_shape = 1.0;
  double q_prec_rate = 1.0;
  std::vector<double> f_history;  // negative free energy per sweep
};

/// State with both factors set to the priors: the deterministic starting
/// point of the coordinate ascent.
MeanFieldState initial_state(const GaussMeanPrecHyper& hyper);

/// Negative free energy F = E_Q[log P(data, mean, precision)] + H[Q], the
/// lower bound on log Z. Closed form, no sampling.
double negative_free_energy(const MeanFieldState& state,
                            const std::vector<double>& data);

enum class VbBlock { Mean, Precision };

/// Exact exponential-family update of one block given the other,
/// Q(block) proportional to exp(E_other[log joint]).
MeanFieldState coordinate_update(const MeanFieldState& state, VbBlock block,
                                 const std::vector<double>& data);

struct VbResult {
  double f_final = 0.0;
  MeanFieldState state;
  bool converged = false;
  int sweeps = 0;
};

/// Alternates block updates until |dF| < tol or max_sweeps; a
/// non-converged result is flagged but still returned.
VbResult vb_lower_bound(const std::vector<double>& data,
                        const GaussMeanPrecHyper& hyper, int max_sweeps = 200,
                        double tol = 1e-10);

/// Joint log density log P(data, mean, precision) of this model; shared by
/// the free-energy code and the quadrature cross-checks.
double gauss_mean_prec_log_joint(const std::vector<double>& data,
                                 const GaussMeanPrecHyper& hyper, double mean,
                                 double precision);

/// The same model as a 2-D ModelSpec (theta = mean, precision) so the
/// generic estimators can cross-check the VB bound.
ModelSpec gauss_mean_prec_model(const std::vector<double>& data,
                                const GaussMeanPrecHyper& hyper);

/// Digamma function (derivative of lgamma).
double digamma(double x);

}  // namespace evkit
