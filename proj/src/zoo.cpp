#include "evkit/zoo.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "evkit/models.hpp"

namespace evkit {

namespace {

using ParamMap = std::map<std::string, std::string>;

ParamMap parse_params(const std::string& text) {
  ParamMap out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("model parameters: expected key=value, got '" +
                                  item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

double take_double(ParamMap& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  double v = std::stod(it->second);
  params.erase(it);
  return v;
}

std::uint64_t take_u64(ParamMap& params, const std::string& key,
                       std::uint64_t fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  std::uint64_t v = std::stoull(it->second);
  params.erase(it);
  return v;
}

void reject_leftovers(const ParamMap& params, const std::string& model) {
  if (!params.empty())
    throw std::invalid_argument("unknown parameter '" + params.begin()->first +
                                "' for model " + model);
}

std::vector<double> gaussian_draws(std::uint64_t seed, int n, double mean,
                                   double std_dev) {
  RngHandle rng(seed, 7001);  // dedicated data stream
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = mean + std_dev * rng.normal();
  return out;
}

ZooEntry make_constant(ParamMap params) {
  double log_c = take_double(params, "log-c", -3.7);
  reject_leftovers(params, "constant");
  ZooEntry entry;
  entry.name = "constant";
  entry.has_closed_form = true;
  entry.closed_form_log_z = log_c;
  entry.laplace_start = {0.5};
  ModelSpec& spec = entry.spec;
  spec.dim = 1;
  spec.bounds = {{0.0, 1.0}};
  spec.log_prior = [](const std::vector<double>& t) {
    return (t[0] >= 0.0 && t[0] <= 1.0) ? 0.0 : kNegInf;
  };
  spec.log_likelihood = [log_c](const std::vector<double>&) { return log_c; };
  spec.prior_sample = [](RngHandle& rng) {
    return std::vector<double>{rng.uniform()};
  };
  return entry;
}

ZooEntry make_conjugate(ParamMap params) {
  ConjugateGaussianModel m;
  m.prior_mean = take_double(params, "prior-mean", 0.0);
  m.prior_var = take_double(params, "prior-var", 1.0);
  m.noise_var = take_double(params, "noise-var", 1.0);
  int n = static_cast<int>(take_u64(params, "n", 20));
  std::uint64_t data_seed = take_u64(params, "data-seed", 1);
  double data_mean = take_double(params, "data-mean", 0.4);
  reject_leftovers(params, "conjugate");
  m.data = gaussian_draws(data_seed, n, data_mean, std::sqrt(m.noise_var));
  ZooEntry entry;
  entry.name = "conjugate";
  entry.spec = m.to_model_spec();
  entry.has_closed_form = true;
  entry.closed_form_log_z = conjugate_log_evidence(m);
  entry.laplace_start = {m.prior_mean};
  return entry;
}

ZooEntry make_gaussian_uniform(ParamMap params) {
  GaussianUniformModel m;
  m.n = static_cast<int>(take_u64(params, "n", 5));
  m.sigma = take_double(params, "sigma", 1.0);
  m.x_min = take_double(params, "x-min", -2.0);
  m.x_max = take_double(params, "x-max", 2.0);
  m.d_bar = take_double(params, "d-bar", 0.3);
  m.v = take_double(params, "v", 0.8);
  reject_leftovers(params, "gaussian-uniform");
  ZooEntry entry;
  entry.name = "gaussian-uniform";
  entry.spec = m.to_model_spec();
  entry.has_closed_form = true;
  entry.closed_form_log_z = gaussian_uniform_log_evidence(m);
  entry.laplace_start = {0.5 * (m.x_min + m.x_max)};
  return entry;
}

ZooEntry make_mixture(ParamMap params) {
  int k = static_cast<int>(take_u64(params, "K", 2));
  int truth_k = static_cast<int>(take_u64(params, "truth-k", k));
  int n = static_cast<int>(take_u64(params, "n", 200));
  std::uint64_t data_seed = take_u64(params, "data-seed", 42);
  reject_leftovers(params, "mixture");
  std::vector<double> data = mixture_dataset(truth_k, n, data_seed);
  ZooEntry entry;
  entry.name = "mixture:K=" + std::to_string(k);
  entry.spec = make_mixture_problem(k, data, default_mixture_boxes(data));
  std::vector<double> start(entry.spec.dim);
  for (int c = 0; c < k; ++c) {
    start[3 * c] = 0.5;
    start[3 * c + 1] = 0.5 * (entry.spec.bounds[3 * c + 1].lo +
                              entry.spec.bounds[3 * c + 1].hi);
    start[3 * c + 2] = 0.5 * (entry.spec.bounds[3 * c + 2].lo +
                              entry.spec.bounds[3 * c + 2].hi);
  }
  entry.laplace_start = start;
  return entry;
}

ZooEntry make_gauss_mean_prec(ParamMap params) {
  GaussMeanPrecHyper hyper;
  hyper.prior_mean = take_double(params, "prior-mean", 0.0);
  hyper.prior_mean_var = take_double(params, "prior-mean-var", 1.0);
  hyper.prec_shape = take_double(params, "prec-shape", 2.0);
  hyper.prec_rate = take_double(params, "prec-rate", 2.0);
  int n = static_cast<int>(take_u64(params, "n", 20));
  std::uint64_t data_seed = take_u64(params, "data-seed", 1);
  double data_mean = take_double(params, "data-mean", 0.4);
  double data_std = take_double(params, "data-std", 1.0);
  reject_leftovers(params, "gauss-mean-prec");
  ZooEntry entry;
  entry.name = "gauss-mean-prec";
  entry.vb_data = gaussian_draws(data_seed, n, data_mean, data_std);
  entry.vb_hyper = hyper;
  entry.supports_vb = true;
  entry.spec = gauss_mean_prec_model(entry.vb_data, hyper);
  entry.laplace_start = {hyper.prior_mean, hyper.prec_shape / hyper.prec_rate};
  return entry;
}

}  // namespace

ZooEntry make_model(const std::string& name) {
  std::string base = name;
  ParamMap params;
  auto colon = name.find(':');
  if (colon != std::string::npos) {
    base = name.substr(0, colon);
    params = parse_params(name.substr(colon + 1));
  }
  if (base == "constant") return make_constant(std::move(params));
  if (base == "conjugate") return make_conjugate(std::move(params));
  if (base == "gaussian-uniform") return make_gaussian_uniform(std::move(params));
  if (base == "mixture") return make_mixture(std::move(params));
  if (base == "gauss-mean-prec") return make_gauss_mean_prec(std::move(params));
  throw std::invalid_argument("unknown model '" + base + "'");
}

MixtureTruth mixture_truth(int k) {
  switch (k) {
    case 1:
      return {{1.0}, {0.0}, {1.0}};
    case 2:
      return {{0.5, 0.5}, {-3.0, 3.0}, {0.7, 0.7}};
    case 3:
      return {{0.4, 0.35, 0.25}, {-4.0, 0.0, 4.0}, {0.6, 0.8, 0.6}};
    case 4:
      return {{0.3, 0.3, 0.2, 0.2}, {-6.0, -2.0, 2.0, 6.0}, {0.5, 0.7, 0.7, 0.5}};
    default:
      throw std::invalid_argument("mixture_truth: k must be in 1..4");
  }
}

std::vector<double> mixture_dataset(int k, int n, std::uint64_t seed) {
  MixtureTruth truth = mixture_truth(k);
  RngHandle rng(seed, 8001);  // dedicated data stream
  return sample_mixture_data(rng, truth.weights, truth.locations, truth.scales, n);
}

}  // namespace evkit
