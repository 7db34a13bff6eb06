#include "evkit/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evkit {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

void check_gaussian_uniform(const GaussianUniformModel& m) {
  if (!(m.x_max - m.x_min > 0.0))
    throw std::invalid_argument("gaussian_uniform: prior width must be > 0");
  if (!(m.sigma > 0.0))
    throw std::invalid_argument("gaussian_uniform: sigma must be > 0");
  if (m.n < 1) throw std::invalid_argument("gaussian_uniform: n must be >= 1");
  if (!(m.v >= 0.0))
    throw std::invalid_argument("gaussian_uniform: sample variance < 0");
}

// log((erf(a1) + erf(a2)) / 2) where a1 + a2 > 0. When one argument is
// negative the two erf values nearly cancel, so switch to erfc.
double log_half_erf_sum(double a1, double a2) {
  if (a1 >= 0.0 && a2 >= 0.0)
    return std::log(0.5 * (std::erf(a1) + std::erf(a2)));
  double aneg = std::min(a1, a2);
  double apos = std::max(a1, a2);
  // erf(a1) + erf(a2) = erfc(-aneg) - erfc(apos), with erfc(-aneg) the
  // larger of the two.
  double big = log_erfc(-aneg);
  double small = log_erfc(apos);
  return big + std::log1p(-std::exp(small - big)) - std::log(2.0);
}

}  // namespace

double GaussianUniformModel::log_l_max() const {
  return -0.5 * n * (v / (sigma * sigma) + std::log(kTwoPi * sigma * sigma));
}

double GaussianUniformModel::log_likelihood_at(double x) const {
  double r = x - d_bar;
  return -0.5 * n * std::log(kTwoPi * sigma * sigma) -
         0.5 * n / (sigma * sigma) * (r * r + v);
}

ModelSpec GaussianUniformModel::to_model_spec() const {
  check_gaussian_uniform(*this);
  GaussianUniformModel m = *this;
  ModelSpec spec;
  spec.dim = 1;
  spec.bounds = {{m.x_min, m.x_max}};
  double log_inv_width = -std::log(m.x_max - m.x_min);
  spec.log_prior = [m, log_inv_width](const std::vector<double>& t) {
    return (t[0] >= m.x_min && t[0] <= m.x_max) ? log_inv_width : kNegInf;
  };
  spec.log_likelihood = [m](const std::vector<double>& t) {
    return m.log_likelihood_at(t[0]);
  };
  spec.prior_sample = [m](RngHandle& rng) {
    return std::vector<double>{rng.uniform_in(m.x_min, m.x_max)};
  };
  return spec;
}

double gaussian_uniform_log_evidence(const GaussianUniformModel& model) {
  check_gaussian_uniform(model);
  double root_half_n = std::sqrt(0.5 * model.n);
  double a1 = root_half_n * (model.x_max - model.d_bar) / model.sigma;
  double a2 = root_half_n * (model.d_bar - model.x_min) / model.sigma;
  return model.log_l_max() + 0.5 * std::log(kTwoPi / model.n) +
         std::log(model.sigma) - std::log(model.prior_width()) +
         log_half_erf_sum(a1, a2);
}

double ConjugateGaussianModel::posterior_mean() const {
  double n = static_cast<double>(data.size());
  double sum = 0.0;
  for (double y : data) sum += y;
  double prec = 1.0 / prior_var + n / noise_var;
  return (prior_mean / prior_var + sum / noise_var) / prec;
}

double ConjugateGaussianModel::posterior_var() const {
  double n = static_cast<double>(data.size());
  return 1.0 / (1.0 / prior_var + n / noise_var);
}

ModelSpec ConjugateGaussianModel::to_model_spec() const {
  if (!(prior_var > 0.0) || !(noise_var > 0.0))
    throw std::invalid_argument("conjugate: variances must be > 0");
  ConjugateGaussianModel m = *this;
  ModelSpec spec;
  spec.dim = 1;
  spec.bounds = {{kNegInf, kPosInf}};
  spec.log_prior = [m](const std::vector<double>& t) {
    double r = t[0] - m.prior_mean;
    return -0.5 * std::log(kTwoPi * m.prior_var) -
           0.5 * r * r / m.prior_var;
  };
  spec.log_likelihood = [m](const std::vector<double>& t) {
    double ll = -0.5 * m.data.size() * std::log(kTwoPi * m.noise_var);
    for (double y : m.data) {
      double r = y - t[0];
      ll -= 0.5 * r * r / m.noise_var;
    }
    return ll;
  };
  spec.prior_sample = [m](RngHandle& rng) {
    return std::vector<double>{m.prior_mean +
                               std::sqrt(m.prior_var) * rng.normal()};
  };
  return spec;
}

double conjugate_log_evidence(const ConjugateGaussianModel& model) {
  if (!(model.prior_var > 0.0) || !(model.noise_var > 0.0))
    throw std::invalid_argument("conjugate: variances must be > 0");
  double n = static_cast<double>(model.data.size());
  if (n == 0.0) return 0.0;
  double sum = 0.0, sum_sq = 0.0;
  for (double y : model.data) {
    sum += y;
    sum_sq += y * y;
  }
  double prec_n = 1.0 / model.prior_var + n / model.noise_var;
  double mean_n = (model.prior_mean / model.prior_var + sum / model.noise_var) /
                  prec_n;
  return -0.5 * n * std::log(kTwoPi * model.noise_var) -
         0.5 * std::log(model.prior_var * prec_n) -
         0.5 * (model.prior_mean * model.prior_mean / model.prior_var +
                sum_sq / model.noise_var - mean_n * mean_n * prec_n);
}

// ---------------------------------------------------------------------------

namespace {

double simpson_recurse(const std::function<double(double)>& f, double a,
                       double b, double fa, double fm, double fb, double whole,
                       double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol) {
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 48);
}

OccamDecomposition occam_decomposition(const ModelSpec& model) {
  if (model.dim != 1)
    throw std::invalid_argument("occam_decomposition: 1-D models only");
  if (model.bounds.size() != 1 || !std::isfinite(model.bounds[0].lo) ||
      !std::isfinite(model.bounds[0].hi))
    throw std::invalid_argument(
        "occam_decomposition: needs a finite uniform prior interval");
  double lo = model.bounds[0].lo, hi = model.bounds[0].hi;
  double width = hi - lo;

  auto log_like = [&model](double x) {
    return model.log_likelihood(std::vector<double>{x});
  };

  // Dense scan for the likelihood peak.
  constexpr int kGrid = 2048;
  double best_x = lo, best = kNegInf;
  for (int j = 0; j <= kGrid; ++j) {
    double x = lo + width * j / kGrid;
    double ll = log_like(x);
    if (std::isnan(ll) || ll == kPosInf)
      throw std::runtime_error("occam_decomposition: non-finite likelihood");
    if (ll > best) {
      best = ll;
      best_x = x;
    }
  }

  // Golden-section refinement around the grid maximum.
  double a = std::max(lo, best_x - width / kGrid);
  double b = std::min(hi, best_x + width / kGrid);
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = log_like(c), fd = log_like(d);
  while (b - a > 1e-13 * width) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = log_like(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = log_like(d);
    }
  }
  double log_l_max = std::max({best, fc, fd});

  // Effective width by quadrature of the likelihood scaled to peak 1.
  double delta_x = adaptive_simpson(
      [&](double x) { return std::exp(log_like(x) - log_l_max); }, lo, hi);
  OccamDecomposition result;
  result.log_l_max = log_l_max;
  result.log_w = std::log(delta_x) - std::log(width);
  return result;
}

// ---------------------------------------------------------------------------

std::vector<double> mixture_weights_from_sticks(const std::vector<double>& u) {
  std::vector<double> w(u.size());
  double total = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    w[k] = -std::log(std::max(u[k], 1e-300));
    total += w[k];
  }
  if (total <= 0.0) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(u.size()));
    return w;
  }
  for (double& wk : w) wk /= total;
  return w;
}

ModelSpec make_mixture_problem(int k, const std::vector<double>& data,
                               const MixtureBoxes& boxes) {
  if (k < 1 || k > 4)
    throw std::invalid_argument("make_mixture_problem: K must be in 1..4");
  if (data.empty())
    throw std::invalid_argument("make_mixture_problem: empty data");
  if (!(boxes.loc_hi > boxes.loc_lo) || !(boxes.scale_hi > boxes.scale_lo) ||
      !(boxes.scale_lo > 0.0))
    throw std::invalid_argument("make_mixture_problem: bad prior boxes");

  const int dim = 3 * k;
  ModelSpec spec;
  spec.dim = dim;
  spec.bounds.reserve(dim);
  for (int c = 0; c < k; ++c) {
    spec.bounds.push_back({0.0, 1.0});
    spec.bounds.push_back({boxes.loc_lo, boxes.loc_hi});
    spec.bounds.push_back({boxes.scale_lo, boxes.scale_hi});
  }
  double log_prior_const =
      -k * (std::log(boxes.loc_hi - boxes.loc_lo) +
            std::log(boxes.scale_hi - boxes.scale_lo));

  MixtureBoxes bx = boxes;
  spec.log_prior = [k, bx, log_prior_const](const std::vector<double>& t) {
    for (int c = 0; c < k; ++c) {
      double u = t[3 * c], loc = t[3 * c + 1], sc = t[3 * c + 2];
      if (u < 0.0 || u > 1.0 || loc < bx.loc_lo || loc > bx.loc_hi ||
          sc < bx.scale_lo || sc > bx.scale_hi)
        return kNegInf;
    }
    return log_prior_const;
  };

  std::vector<double> obs = data;
  spec.log_likelihood = [k, obs](const std::vector<double>& t) {
    std::vector<double> sticks(k), locs(k), scales(k);
    for (int c = 0; c < k; ++c) {
      sticks[c] = t[3 * c];
      locs[c] = t[3 * c + 1];
      scales[c] = t[3 * c + 2];
    }
    std::vector<double> w = mixture_weights_from_sticks(sticks);
    std::vector<double> log_w_norm(k);
    for (int c = 0; c < k; ++c)
      log_w_norm[c] = std::log(std::max(w[c], 1e-300)) -
                      0.5 * std::log(kTwoPi) - std::log(scales[c]);
    double ll = 0.0;
    std::vector<double> terms(k);
    for (double x : obs) {
      for (int c = 0; c < k; ++c) {
        double z = (x - locs[c]) / scales[c];
        terms[c] = log_w_norm[c] - 0.5 * z * z;
      }
      ll += log_sum_exp(terms);
    }
    return ll;
  };

  spec.prior_sample = [k, bx](RngHandle& rng) {
    std::vector<double> t(3 * k);
    for (int c = 0; c < k; ++c) {
      t[3 * c] = rng.uniform();
      t[3 * c + 1] = rng.uniform_in(bx.loc_lo, bx.loc_hi);
      t[3 * c + 2] = rng.uniform_in(bx.scale_lo, bx.scale_hi);
    }
    return t;
  };
  return spec;
}

MixtureBoxes default_mixture_boxes(const std::vector<double>& data) {
  if (data.empty())
    throw std::invalid_argument("default_mixture_boxes: empty data");
  auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
  double lo = *lo_it, hi = *hi_it;
  double range = std::max(hi - lo, 1e-6);
  MixtureBoxes boxes;
  boxes.loc_lo = lo - 0.1 * range;
  boxes.loc_hi = hi + 0.1 * range;
  boxes.scale_lo = range / 50.0;
  boxes.scale_hi = range;
  return boxes;
}

std::vector<double> sample_mixture_data(RngHandle& rng,
                                        const std::vector<double>& weights,
                                        const std::vector<double>& locations,
                                        const std::vector<double>& scales,
                                        int n) {
  if (weights.empty() || weights.size() != locations.size() ||
      weights.size() != scales.size())
    throw std::invalid_argument("sample_mixture_data: size mismatch");
  std::vector<double> cum(weights.size());
  double total = 0.0;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    total += weights[c];
    cum[c] = total;
  }
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform() * total;
    std::size_t c =
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
    if (c >= weights.size()) c = weights.size() - 1;
    out[i] = locations[c] + scales[c] * rng.normal();
  }
  return out;
}

}  // namespace evkit
