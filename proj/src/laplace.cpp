#include "evkit/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace evkit {

namespace {

double clamp_to(double x, const Bounds& b) {
  return std::min(std::max(x, b.lo), b.hi);
}

std::vector<double> clamp_point(std::vector<double> x,
                                const std::vector<Bounds>& bounds) {
  for (std::size_t i = 0; i < x.size() && i < bounds.size(); ++i)
    x[i] = clamp_to(x[i], bounds[i]);
  return x;
}

// Cholesky factor of a symmetric matrix; empty result if not positive
// definite.
std::vector<std::vector<double>> cholesky(
    const std::vector<std::vector<double>>& a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      if (i == j) {
        if (!(s > 0.0)) return {};
        l[i][i] = std::sqrt(s);
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  return l;
}

}  // namespace

std::vector<double> find_mode(const LogDensityFn& log_joint,
                              std::vector<double> start,
                              const std::vector<Bounds>& bounds) {
  const int n = static_cast<int>(start.size());
  start = clamp_point(std::move(start), bounds);
  if (!std::isfinite(log_joint(start)))
    throw std::invalid_argument("find_mode: log density not finite at start");

  std::vector<double> scale(n);
  for (int i = 0; i < n; ++i) scale[i] = std::max(std::abs(start[i]), 1.0);

  // Initial simplex around the start.
  std::vector<std::vector<double>> simplex(n + 1, start);
  for (int i = 0; i < n; ++i) {
    simplex[i + 1][i] += 0.05 * scale[i];
    simplex[i + 1] = clamp_point(std::move(simplex[i + 1]), bounds);
    if (simplex[i + 1][i] == start[i]) simplex[i + 1][i] -= 0.05 * scale[i];
    simplex[i + 1] = clamp_point(std::move(simplex[i + 1]), bounds);
  }
  std::vector<double> value(n + 1);
  for (int i = 0; i <= n; ++i) value[i] = log_joint(simplex[i]);

  auto diameter = [&]() {
    double d = 0.0;
    for (int i = 1; i <= n; ++i)
      for (int j = 0; j < n; ++j)
        d = std::max(d, std::abs(simplex[i][j] - simplex[0][j]) / scale[j]);
    return d;
  };

  constexpr int kMaxIter = 10000;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    // Order so that value[order[0]] is best (largest).
    std::vector<int> order(n + 1);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return value[a] > value[b]; });
    if (diameter() < 1e-8) return simplex[order[0]];

    int worst = order[n], second = order[n - 1], best = order[0];
    std::vector<double> centroid(n, 0.0);
    for (int i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (int j = 0; j < n; ++j) centroid[j] += simplex[i][j] / n;
    }
    auto point_along = [&](double t) {
      std::vector<double> p(n);
      for (int j = 0; j < n; ++j)
        p[j] = centroid[j] + t * (centroid[j] - simplex[worst][j]);
      return clamp_point(std::move(p), bounds);
    };

    std::vector<double> reflected = point_along(1.0);
    double fr = log_joint(reflected);
    if (fr > value[best]) {
      std::vector<double> expanded = point_along(2.0);
      double fe = log_joint(expanded);
      if (fe > fr) {
        simplex[worst] = std::move(expanded);
        value[worst] = fe;
      } else {
        simplex[worst] = std::move(reflected);
        value[worst] = fr;
      }
      continue;
    }
    if (fr > value[second]) {
      simplex[worst] = std::move(reflected);
      value[worst] = fr;
      continue;
    }
    std::vector<double> contracted = point_along(-0.5);
    double fc = log_joint(contracted);
    if (fc > value[worst]) {
      simplex[worst] = std::move(contracted);
      value[worst] = fc;
      continue;
    }
    // Shrink toward the best vertex.
    for (int i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (int j = 0; j < n; ++j)
        simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
      simplex[i] = clamp_point(std::move(simplex[i]), bounds);
      value[i] = log_joint(simplex[i]);
    }
  }
  throw std::runtime_error("mode search failed");
}

std::vector<double> default_fd_steps(const std::vector<double>& x0) {
  // eps^(1/4) balances truncation against roundoff for a second-difference
  // stencil; eps^(1/3) (the first-derivative balance) leaves a roundoff
  // floor near 1e-5 in log Z.
  double step = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
  std::vector<double> h(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i)
    h[i] = std::max(std::abs(x0[i]), 1.0) * step;
  return h;
}

std::vector<std::vector<double>> hessian_fd(const LogDensityFn& log_joint,
                                            const std::vector<double>& x0,
                                            const std::vector<double>& h) {
  const int n = static_cast<int>(x0.size());
  auto eval = [&](std::vector<double> x) {
    double v = log_joint(x);
    if (!std::isfinite(v))
      throw std::runtime_error("hessian_fd: non-finite value on stencil");
    return v;
  };
  double f0 = eval(x0);
  std::vector<std::vector<double>> hess(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    std::vector<double> xp = x0, xm = x0;
    xp[i] += h[i];
    xm[i] -= h[i];
    hess[i][i] = (eval(xp) - 2.0 * f0 + eval(xm)) / (h[i] * h[i]);
    for (int j = i + 1; j < n; ++j) {
      std::vector<double> xpp = x0, xpm = x0, xmp = x0, xmm = x0;
      xpp[i] += h[i]; xpp[j] += h[j];
      xpm[i] += h[i]; xpm[j] -= h[j];
      xmp[i] -= h[i]; xmp[j] += h[j];
      xmm[i] -= h[i]; xmm[j] -= h[j];
      double d = (eval(xpp) - eval(xpm) - eval(xmp) + eval(xmm)) /
                 (4.0 * h[i] * h[j]);
      hess[i][j] = d;
      hess[j][i] = d;
    }
  }
  // A = -H, symmetrized.
  std::vector<std::vector<double>> a(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i][j] = -0.5 * (hess[i][j] + hess[j][i]);
  return a;
}

LaplaceResult laplace_log_evidence(const ModelSpec& model,
                                   const std::vector<double>& start) {
  const int n = model.dim;
  LogDensityFn log_joint = [&model](const std::vector<double>& t) {
    double lp = model.log_prior(t);
    if (lp == kNegInf) return kNegInf;
    return lp + model.log_likelihood(t);
  };

  LaplaceResult result;
  result.mode = find_mode(log_joint, start, model.bounds);
  result.log_p_at_mode = log_joint(result.mode);

  std::vector<double> h = default_fd_steps(result.mode);
  for (int i = 0; i < n && i < static_cast<int>(model.bounds.size()); ++i) {
    const Bounds& b = model.bounds[i];
    if ((std::isfinite(b.lo) && result.mode[i] - b.lo < 2.0 * h[i]) ||
        (std::isfinite(b.hi) && b.hi - result.mode[i] < 2.0 * h[i]))
      result.boundary_mode = true;  // Taylor expansion unreliable here
  }
  result.hessian = hessian_fd(log_joint, result.mode, h);

  auto l = cholesky(result.hessian);
  if (l.empty()) throw std::runtime_error("saddle or ridge at mode");
  double log_det = 0.0;
  for (int i = 0; i < n; ++i) log_det += 2.0 * std::log(l[i][i]);

  result.log_z = result.log_p_at_mode + 0.5 * n * std::log(2.0 * M_PI) -
                 0.5 * log_det;
  return result;
}

}  // namespace evkit
