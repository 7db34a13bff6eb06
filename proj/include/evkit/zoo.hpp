#pragma once

#include <string>
#include <vector>

#include "evkit/core.hpp"
#include "evkit/varbayes.hpp"

namespace evkit {

/// A model resolved from its CLI name, with the analytic log evidence when
/// one exists and a sensible start point for mode search.
struct ZooEntry {
  std::string name;  // canonical "name:key=value,..." form
  ModelSpec spec;
  bool has_closed_form = false;
  double closed_form_log_z = 0.0;
  std::vector<double> laplace_start;
  bool supports_vb = false;
  std::vector<double> vb_data;  // data for the mean/precision model
  GaussMeanPrecHyper vb_hyper;
};

/// Parses names like "conjugate", "gaussian-uniform:n=5,d-bar=0.3",
/// "mixture:K=2", "gauss-mean-prec:n=20" or "constant:log-c=-3.7" and
/// builds the model. Unknown names or keys throw std::invalid_argument.
ZooEntry make_model(const std::string& name);

/// The fixed mixture used to generate synthetic order-selection data.
struct MixtureTruth {
  std::vector<double> weights;
  std::vector<double> locations;
  std::vector<double> scales;
};

MixtureTruth mixture_truth(int k);

/// n draws from mixture_truth(k) on a dedicated stream of `seed`.
std::vector<double> mixture_dataset(int k, int n, std::uint64_t seed);

}  // namespace evkit
