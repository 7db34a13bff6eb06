#pragma once

#include <functional>
#include <vector>

#include "evkit/core.hpp"

namespace evkit {

using LogDensityFn = std::function<double(const std::vector<double>&)>;

struct LaplaceResult {
  std::vector<double> mode;
  double log_p_at_mode = 0.0;
  std::vector<std::vector<double>> hessian;  // A = -grad grad log p, symmetric
  double log_z = 0.0;
  bool boundary_mode = false;  // mode within 2h of a prior bound
};

/// Derivative-free ascent (Nelder-Mead) of log_joint from `start`, clamped
/// to `bounds`. Converges when the simplex diameter in scaled coordinates
/// drops below 1e-8; throws "mode search failed" at the iteration cap.
std::vector<double> find_mode(const LogDensityFn& log_joint,
                              std::vector<double> start,
                              const std::vector<Bounds>& bounds);

/// -grad grad log_joint by central second differences with per-coordinate
/// steps h, symmetrized as (H + H^T)/2.
std::vector<std::vector<double>> hessian_fd(const LogDensityFn& log_joint,
                                            const std::vector<double>& x0,
                                            const std::vector<double>& h);

/// Default finite-difference steps: max(|x0_i|, 1) * eps^(1/3).
std::vector<double> default_fd_steps(const std::vector<double>& x0);

/// Laplace approximation log Z = log p(x0) + (N/2) log 2pi - (1/2) log det A
/// of the model's prior * likelihood. Throws "saddle or ridge at mode" when
/// A is not positive definite.
LaplaceResult laplace_log_evidence(const ModelSpec& model,
                                   const std::vector<double>& start);

}  // namespace evkit
