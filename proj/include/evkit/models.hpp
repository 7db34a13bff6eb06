#pragma once

#include <vector>

#include "evkit/core.hpp"

namespace evkit {

// ---------------------------------------------------------------------------
// Gaussian likelihood with a uniform prior on its location: the model whose
// evidence has the closed form L_max * sqrt(2pi/n) * (sigma/dx) * erf factor.

struct GaussianUniformModel {
  int n = 1;            // number of observations
  double sigma = 1.0;   // known noise std
  double x_min = -1.0;
  double x_max = 1.0;
  double d_bar = 0.0;   // sample average
  double v = 0.0;       // sample variance

  double prior_width() const { return x_max - x_min; }
  double log_l_max() const;
  double log_likelihood_at(double x) const;
  ModelSpec to_model_spec() const;
};

/// Closed-form log evidence, stable in the tails where the two erf terms
/// nearly cancel.
double gaussian_uniform_log_evidence(const GaussianUniformModel& model);

// ---------------------------------------------------------------------------
// Gaussian mean with Gaussian prior and known noise variance: exact marginal
// likelihood by conjugacy, the oracle every stochastic estimator is tested
// against.

struct ConjugateGaussianModel {
  double prior_mean = 0.0;
  double prior_var = 1.0;
  double noise_var = 1.0;
  std::vector<double> data;

  double posterior_mean() const;
  double posterior_var() const;
  ModelSpec to_model_spec() const;
};

double conjugate_log_evidence(const ConjugateGaussianModel& model);

// ---------------------------------------------------------------------------
// Occam decomposition Z = L_max * W for 1-D models with a uniform prior.

struct OccamDecomposition {
  double log_l_max = 0.0;
  double log_w = 0.0;  // log of the Occam factor, always <= 0
};

/// Splits the evidence of a 1-D uniform-prior model into its best fit and
/// the Occam factor W = (effective likelihood width) / (prior width).
/// L_max comes from a dense grid plus golden-section refinement; the
/// effective width from adaptive Simpson quadrature of the likelihood.
OccamDecomposition occam_decomposition(const ModelSpec& model);

// ---------------------------------------------------------------------------
// 1-D Gaussian mixture of order K for the model-order selection workflow.
// Each component block is (stick coordinate, location, scale); mixture
// weights come from the stick coordinates through the exponential-gap
// simplex map, so the prior stays a plain box for the shared MCMC kernel
// and component blocks can be permuted freely.

struct MixtureBoxes {
  double loc_lo = -10.0;
  double loc_hi = 10.0;
  double scale_lo = 0.05;
  double scale_hi = 5.0;
};

struct MixtureOrderProblem {
  int order = 1;
  std::vector<double> data;
  MixtureBoxes boxes;
};

/// Simplex weights from box coordinates u in [0,1]^K; uniform u gives
/// weights uniform on the simplex.
std::vector<double> mixture_weights_from_sticks(const std::vector<double>& u);

/// ModelSpec of dimension 3K whose likelihood is the i.i.d. mixture density
/// product. Throws on empty data or K outside 1..4.
ModelSpec make_mixture_problem(int k, const std::vector<double>& data,
                               const MixtureBoxes& boxes);

/// Boxes wide enough to cover the data with headroom, used as the default
/// prior for the order-selection sweep.
MixtureBoxes default_mixture_boxes(const std::vector<double>& data);

/// Draws n points from a Gaussian mixture; used to build the synthetic
/// order-selection datasets.
std::vector<double> sample_mixture_data(RngHandle& rng,
                                        const std::vector<double>& weights,
                                        const std::vector<double>& locations,
                                        const std::vector<double>& scales,
                                        int n);

// Adaptive Simpson quadrature, abs tolerance 1e-12 by default. Exposed for
// the Occam decomposition; estimator tests use an independent oracle.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-12);

}  // namespace evkit
