#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "evkit/models.hpp"
#include "evkit/thermal.hpp"
#include "evkit/zoo.hpp"
#include "support/quad_oracle.hpp"

using namespace evkit;

TEST_SUITE_BEGIN("thermal");

namespace {

ConjugateGaussianModel reference_conjugate() {
  ConjugateGaussianModel m;
  m.data = {0.5, -0.2, 1.1, 0.7, 0.1, -0.4, 0.9, 0.3, 1.4, -0.1,
            0.6, 0.2,  0.8, 0.0, 0.5, 1.0,  -0.3, 0.4, 0.7, 0.2};
  return m;
}

ModelSpec constant_model(double log_c) {
  return make_model("constant:log-c=" + std::to_string(log_c)).spec;
}

}  // namespace

TEST_CASE("make_schedule shapes") {
  Schedule one = make_schedule(1);
  CHECK(one.betas == std::vector<double>{0.0, 1.0});

  Schedule lin = make_schedule(4, ScheduleShape::linear());
  CHECK(lin.betas == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});

  Schedule pow2 = make_schedule(4, ScheduleShape::power(2.0));
  CHECK(pow2.betas[1] == doctest::Approx(0.0625));
  CHECK(pow2.betas[2] == doctest::Approx(0.25));
  CHECK(pow2.betas[3] == doctest::Approx(0.5625));
  CHECK(pow2.betas[4] == 1.0);

  CHECK_THROWS_AS(make_schedule(0), std::invalid_argument);
}

TEST_CASE("importance expectation") {
  RngHandle rng(4);
  SUBCASE("p = q reduces to the plain sample mean") {
    std::vector<std::vector<double>> samples(2000);
    double mean = 0.0;
    for (auto& s : samples) {
      s = {rng.normal()};
      mean += s[0] / samples.size();
    }
    auto log_n01 = [](const std::vector<double>& t) {
      return -0.5 * t[0] * t[0];
    };
    double est = importance_expectation(
        [](const std::vector<double>& t) { return t[0]; }, log_n01, log_n01,
        samples);
    CHECK(est == doctest::Approx(mean).epsilon(1e-12));
  }
  SUBCASE("f = 1 returns exactly 1") {
    std::vector<std::vector<double>> samples(100);
    for (auto& s : samples) s = {rng.normal()};
    double est = importance_expectation(
        [](const std::vector<double>&) { return 1.0; },
        [](const std::vector<double>& t) { return -0.2 * t[0] * t[0]; },
        [](const std::vector<double>& t) { return -0.5 * t[0] * t[0]; },
        samples);
    CHECK(est == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("mean of N(1,1) from N(0,4) proposal draws") {
    std::vector<std::vector<double>> samples(100000);
    for (auto& s : samples) s = {2.0 * rng.normal()};
    double est = importance_expectation(
        [](const std::vector<double>& t) { return t[0]; },
        [](const std::vector<double>& t) {
          return -0.5 * (t[0] - 1.0) * (t[0] - 1.0);
        },
        [](const std::vector<double>& t) { return -t[0] * t[0] / 8.0; },
        samples);
    CHECK(est == doctest::Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("importance evidence ratio") {
  SUBCASE("p = q gives a log ratio of exactly 0") {
    std::vector<std::vector<double>> samples = {{0.1}, {0.5}, {-0.3}, {2.0}};
    auto log_q = [](const std::vector<double>& t) { return -0.5 * t[0] * t[0]; };
    EvidenceEstimate est =
        importance_log_evidence_ratio(log_q, log_q, samples, ImportanceMode::Simple);
    CHECK(est.log_z == 0.0);
  }
  SUBCASE("prior proposal recovers the conjugate evidence") {
    ConjugateGaussianModel m = reference_conjugate();
    RngHandle rng(11);
    EvidenceEstimate est =
        importance_log_evidence(m.to_model_spec(), 100000, rng);
    double truth = conjugate_log_evidence(m);
    CHECK(std::abs(est.log_z - truth) < 3.0 * est.std_err);
    CHECK(est.n_likelihood_evals == 100000);
    CHECK(est.diagnostics.at("extreme_weights") == 0.0);
  }
  SUBCASE("the two modes differ; each approaches its own limit") {
    // The simple mode is consistent for Z_p/Z_q. The ratio-of-sums form
    // sum(p^2/q^2)/sum(p/q) instead converges to Z_p/Z_q times the
    // chi-square factor int phat^2/qhat, which is 1 only when p = q; both
    // limits are checked against quadrature.
    ConjugateGaussianModel m = reference_conjugate();
    ModelSpec spec = m.to_model_spec();
    double truth = conjugate_log_evidence(m);
    double mn = m.posterior_mean(), vn = m.posterior_var();
    double log_chi2 = oracle::log_integral(
        [&](double x) {
          double dp = x - mn;
          double log_post =
              -0.5 * std::log(2.0 * M_PI * vn) - dp * dp / (2.0 * vn);
          return 2.0 * log_post - spec.log_prior({x});
        },
        mn - 20.0, mn + 20.0);

    for (int count : {10000, 1000000}) {
      RngHandle rng(21);
      std::vector<std::vector<double>> samples(count);
      for (auto& s : samples) s = spec.prior_sample(rng);
      auto log_p = [&spec](const std::vector<double>& t) {
        return spec.log_prior(t) + spec.log_likelihood(t);
      };
      EvidenceEstimate simple = importance_log_evidence_ratio(
          log_p, spec.log_prior, samples, ImportanceMode::Simple);
      EvidenceEstimate self = importance_log_evidence_ratio(
          log_p, spec.log_prior, samples, ImportanceMode::SelfNormalized);
      CHECK(simple.log_z != self.log_z);
      CHECK(std::abs(simple.log_z - truth) < 3.0 * simple.std_err);
      CHECK(std::abs(self.log_z - (truth + log_chi2)) < 3.0 * self.std_err);
    }
  }
  SUBCASE("a proposal missing the support is an error") {
    std::vector<std::vector<double>> samples = {{0.1}, {0.2}};
    CHECK_THROWS_AS(
        importance_log_evidence_ratio(
            [](const std::vector<double>&) { return kNegInf; },
            [](const std::vector<double>&) { return 0.0; }, samples,
            ImportanceMode::Simple),
        std::runtime_error);
  }
}

TEST_CASE("thermodynamic integration is exact for a constant likelihood") {
  ModelSpec model = constant_model(-3.7);
  TiConfig cfg;
  cfg.sweeps = 100;
  RngHandle rng(5);
  EvidenceEstimate est =
      thermodynamic_integration(model, make_schedule(10), cfg, rng);
  CHECK(est.log_z == doctest::Approx(-3.7).epsilon(1e-12));
  CHECK(est.std_err == doctest::Approx(0.0));
}

TEST_CASE("thermodynamic integration matches the analytic oracles") {
  TiConfig cfg;  // 500 sweeps per rung
  SUBCASE("conjugate Gaussian") {
    ConjugateGaussianModel m = reference_conjugate();
    RngHandle rng(31);
    EvidenceEstimate est =
        thermodynamic_integration(m.to_model_spec(), make_schedule(50), cfg, rng);
    CHECK(std::abs(est.log_z - conjugate_log_evidence(m)) < 3.0 * est.std_err);
    CHECK(est.diagnostics.at("accept_min") > 0.01);
  }
  SUBCASE("gaussian-uniform") {
    GaussianUniformModel m;
    m.n = 12;
    m.sigma = 0.8;
    m.x_min = -2.0;
    m.x_max = 2.0;
    m.d_bar = 0.4;
    m.v = 0.5;
    RngHandle rng(32);
    EvidenceEstimate est =
        thermodynamic_integration(m.to_model_spec(), make_schedule(50), cfg, rng);
    CHECK(std::abs(est.log_z - gaussian_uniform_log_evidence(m)) <
          3.0 * est.std_err);
  }
}

TEST_CASE("TI integrand is non-decreasing in beta") {
  ConjugateGaussianModel m = reference_conjugate();
  TiConfig cfg;
  RngHandle rng(33);
  Schedule schedule = make_schedule(20);
  EvidenceEstimate est =
      thermodynamic_integration(m.to_model_spec(), schedule, cfg, rng);
  for (int k = 0; k + 1 < schedule.rungs(); ++k) {
    double lo = est.diagnostics.at("rung_mean_" + std::to_string(k));
    double hi = est.diagnostics.at("rung_mean_" + std::to_string(k + 1));
    double se_lo = est.diagnostics.at("rung_se_" + std::to_string(k));
    double se_hi = est.diagnostics.at("rung_se_" + std::to_string(k + 1));
    CHECK(hi >= lo - 2.0 * (se_lo + se_hi));
  }
}

TEST_CASE("TI left-Riemann option reproduces the displayed sum") {
  // On the constant model both quadratures agree exactly.
  ModelSpec model = constant_model(-1.25);
  TiConfig cfg;
  cfg.sweeps = 50;
  cfg.riemann_left = true;
  RngHandle rng(6);
  EvidenceEstimate est =
      thermodynamic_integration(model, make_schedule(8), cfg, rng);
  CHECK(est.log_z == doctest::Approx(-1.25).epsilon(1e-12));
}

TEST_CASE("TI reports a frozen chain instead of returning garbage") {
  ConjugateGaussianModel m = reference_conjugate();
  TiConfig cfg;
  cfg.sweeps = 100;
  cfg.init_step_scales = {1e9};  // every proposal lands far in the tails
  RngHandle rng(34);
  CHECK_THROWS_AS(
      thermodynamic_integration(m.to_model_spec(), make_schedule(5), cfg, rng),
      std::runtime_error);
}

TEST_CASE("pooled AIS weights over many runs stay unbiased") {
  ConjugateGaussianModel m = reference_conjugate();
  ModelSpec spec = m.to_model_spec();
  double truth = conjugate_log_evidence(m);
  std::vector<double> pooled;
  AisConfig cfg;
  cfg.steps_per_rung = 5;
  for (int r = 0; r < 50; ++r) {
    RngHandle rng(8800, r);
    auto [est, run] = ais_log_evidence(spec, make_schedule(30), 16, cfg, rng);
    pooled.insert(pooled.end(), run.log_weights.begin(), run.log_weights.end());
  }
  double log_z = log_mean_exp(pooled);
  // Delta-method std error of the pooled arithmetic mean.
  double mx = *std::max_element(pooled.begin(), pooled.end());
  double s1 = 0.0, s2 = 0.0;
  for (double lw : pooled) {
    double a = std::exp(lw - mx);
    s1 += a;
    s2 += a * a;
  }
  double n = static_cast<double>(pooled.size());
  double mean_a = s1 / n;
  double se = std::sqrt(std::max(s2 / n - mean_a * mean_a, 0.0) / n) / mean_a;
  CHECK(std::abs(log_z - truth) < 3.0 * se);
}

TEST_CASE("schedule refinement does not hurt on the conjugate model") {
  ConjugateGaussianModel m = reference_conjugate();
  double truth = conjugate_log_evidence(m);
  TiConfig cfg;
  cfg.sweeps = 400;
  RngHandle rng_a(41), rng_b(42);
  EvidenceEstimate coarse =
      thermodynamic_integration(m.to_model_spec(), make_schedule(25), cfg, rng_a);
  EvidenceEstimate fine =
      thermodynamic_integration(m.to_model_spec(), make_schedule(50), cfg, rng_b);
  double band = 3.0 * (coarse.std_err + fine.std_err);
  CHECK(std::abs(fine.log_z - truth) <
        std::abs(coarse.log_z - truth) + band);
}

TEST_CASE("AIS weights are exact for a constant likelihood") {
  ModelSpec model = constant_model(-2.2);
  AisConfig cfg;
  cfg.steps_per_rung = 3;
  RngHandle rng(7);
  auto [est, run] = ais_log_evidence(model, make_schedule(12), 8, cfg, rng);
  CHECK(est.log_z == doctest::Approx(-2.2).epsilon(1e-12));
  for (double lw : run.log_weights)
    CHECK(lw == doctest::Approx(-2.2).epsilon(1e-12));
}

TEST_CASE("AIS matches the conjugate oracle") {
  ConjugateGaussianModel m = reference_conjugate();
  AisConfig cfg;
  RngHandle rng(51);
  auto [est, run] = ais_log_evidence(m.to_model_spec(), make_schedule(50), 64,
                                     cfg, rng);
  CHECK(std::abs(est.log_z - conjugate_log_evidence(m)) < 3.0 * est.std_err);
  CHECK(run.log_weights.size() == 64);
  CHECK(est.n_likelihood_evals > 0);
}

TEST_CASE("single-rung AIS degenerates to importance sampling from the prior") {
  ConjugateGaussianModel m = reference_conjugate();
  ModelSpec spec = m.to_model_spec();
  AisConfig cfg;
  RngHandle rng(61);
  auto [ais, run] = ais_log_evidence(spec, make_schedule(1), 4000, cfg, rng);
  RngHandle rng2(62);
  EvidenceEstimate is = importance_log_evidence(spec, 4000, rng2);
  CHECK(std::abs(ais.log_z - is.log_z) <
        3.0 * std::sqrt(ais.std_err * ais.std_err + is.std_err * is.std_err));
  CHECK_THROWS_AS(ais_log_evidence(spec, make_schedule(1), 1, cfg, rng),
                  std::invalid_argument);
}

TEST_CASE("arithmetic vs geometric averaging of AIS weights") {
  SUBCASE("identical weights coincide") {
    AisRun run;
    run.log_weights = {-1.3, -1.3, -1.3};
    AisTiContrast c = ais_ti_contrast(run);
    CHECK(c.log_z_arith == doctest::Approx(c.log_z_geom).epsilon(1e-14));
  }
  SUBCASE("hand-computed pair") {
    AisRun run;
    run.log_weights = {0.0, std::log(4.0)};
    AisTiContrast c = ais_ti_contrast(run);
    CHECK(c.log_z_arith == doctest::Approx(std::log(2.5)).epsilon(1e-14));
    CHECK(c.log_z_geom == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  }
  SUBCASE("Jensen ordering on random weight vectors") {
    RngHandle rng(71);
    for (int trial = 0; trial < 100; ++trial) {
      AisRun run;
      int n = 2 + static_cast<int>(rng.uniform_index(20));
      run.log_weights.resize(n);
      for (double& w : run.log_weights) w = rng.uniform_in(-80.0, 30.0);
      AisTiContrast c = ais_ti_contrast(run);
      CHECK(c.log_z_arith >= c.log_z_geom - 1e-12);
    }
  }
}

TEST_SUITE_END();
