#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evkit/detect.hpp"
#include "support/quad_oracle.hpp"

using namespace evkit;

TEST_SUITE_BEGIN("detect");

namespace {

DetectionProblem tiny_problem() {
  DetectionProblem p;
  p.channels = 1;
  p.window_len = 2;
  p.template_s = {1.0, 2.0};
  p.couplings = {1.0};
  p.sigma_n = 1.0;
  p.sigma_alpha = 1.0;
  p.alpha_hat = 0.0;
  return p;
}

// Odds ratio by direct quadrature over the amplitude: the marginal of the
// likelihood ratio under the (truncated, normalized) Gaussian prior.
double quadrature_log_or(const EpochData& x, const DetectionProblem& p,
                         bool positive_only) {
  double cross = 0.0, energy = 0.0;
  for (int m = 0; m < p.channels; ++m)
    for (int t = 0; t < p.window_len; ++t) {
      cross += p.couplings[m] * x[m][t] * p.template_s[t];
      energy += p.couplings[m] * p.couplings[m] * p.template_s[t] * p.template_s[t];
    }
  auto log_f = [&](double a) {
    double da = a - p.alpha_hat;
    double log_prior_kernel = -da * da / (2.0 * p.sigma_alpha * p.sigma_alpha);
    double log_lik_ratio =
        (2.0 * a * cross - a * a * energy) / (2.0 * p.sigma_n * p.sigma_n);
    return log_prior_kernel + log_lik_ratio;
  };
  auto log_prior_kernel = [&](double a) {
    double da = a - p.alpha_hat;
    return -da * da / (2.0 * p.sigma_alpha * p.sigma_alpha);
  };
  double radius = 14.0 * (p.sigma_alpha + p.sigma_n / std::sqrt(energy + 1.0)) +
                  std::abs(p.alpha_hat) + std::abs(cross) / (energy + 1.0);
  double lo = positive_only ? 0.0 : -radius;
  double log_num = oracle::log_integral(log_f, lo, radius, 1e-14);
  double log_den = oracle::log_integral(log_prior_kernel, lo, radius, 1e-14);
  return log_num - log_den;
}

}  // namespace

TEST_CASE("detection statistics on a hand-computed instance") {
  DetectionProblem p = tiny_problem();
  EpochData x = {{3.0, 4.0}};
  DetectionStats s = detection_statistics(x, p);
  CHECK(s.s2 == 1.0);
  CHECK(s.d == 6.0);   // 1 + (1*1 + 4*1)... s^2 + sum C^2 s^2 = 1 + 5
  CHECK(s.e == 11.0);  // 0 + (3*1 + 4*2)
  CHECK(s.f == 25.0);  // 0 + (9 + 16)
  CHECK(s.d > 0.0);
}

TEST_CASE("zero couplings reduce the statistics to their prior terms") {
  DetectionProblem p = tiny_problem();
  p.alpha_hat = 0.7;
  p.couplings = {0.0};
  EpochData x = {{3.0, 4.0}};
  DetectionStats s = detection_statistics(x, p);
  CHECK(s.d == doctest::Approx(s.s2));
  CHECK(s.e == doctest::Approx(s.s2 * p.alpha_hat));
}

TEST_CASE("zero data with zero prior mean zeroes E and F") {
  DetectionProblem p = tiny_problem();
  EpochData x = {{0.0, 0.0}};
  DetectionStats s = detection_statistics(x, p);
  CHECK(s.e == 0.0);
  CHECK(s.f == 0.0);
}

TEST_CASE("dimension mismatches are rejected") {
  DetectionProblem p = tiny_problem();
  EpochData bad_rows = {{1.0, 2.0}, {3.0, 4.0}};
  CHECK_THROWS_AS(detection_statistics(bad_rows, p), std::invalid_argument);
  EpochData bad_cols = {{1.0, 2.0, 3.0}};
  CHECK_THROWS_AS(detection_statistics(bad_cols, p), std::invalid_argument);
}

TEST_CASE("log OR limits: ignoring the signal drives the odds to one") {
  DetectionProblem p = tiny_problem();
  p.alpha_range = AlphaRange::FullLine;
  SUBCASE("zero couplings") {
    p.couplings = {0.0};
    EpochData x = {{0.4, -0.9}};
    CHECK(log_or_pm(x, p) == doctest::Approx(0.0).epsilon(1e-14));
    p.alpha_range = AlphaRange::PositiveHalfLine;
    CHECK(log_or_plus(x, p) == doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("vanishing amplitude prior") {
    EpochData x = {{0.4, -0.9}};
    double prev = 1e9;
    for (int k = 1; k <= 6; ++k) {
      p.sigma_alpha = std::pow(10.0, -k);
      double v = std::abs(log_or_pm(x, p));
      CHECK(v < prev);
      prev = v;
    }
    CHECK(prev < 1e-8);
  }
}

TEST_CASE("both log OR forms match amplitude quadrature") {
  RngHandle rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    DetectionProblem p;
    p.channels = 1 + static_cast<int>(rng.uniform_index(3));
    p.window_len = 2 + static_cast<int>(rng.uniform_index(7));
    p.template_s.resize(p.window_len);
    for (double& s : p.template_s) s = rng.uniform_in(-1.0, 1.0);
    p.couplings.resize(p.channels);
    for (double& c : p.couplings) c = rng.uniform_in(-1.5, 1.5);
    p.sigma_n = rng.uniform_in(0.4, 2.0);
    p.sigma_alpha = rng.uniform_in(0.3, 1.5);
    p.alpha_hat = rng.uniform_in(-0.5, 1.5);
    EpochData x(p.channels, std::vector<double>(p.window_len));
    for (auto& row : x)
      for (double& v : row) v = rng.uniform_in(-2.0, 2.0);

    p.alpha_range = AlphaRange::FullLine;
    CHECK(log_or_pm(x, p) ==
          doctest::Approx(quadrature_log_or(x, p, false)).epsilon(1e-8));
    p.alpha_range = AlphaRange::PositiveHalfLine;
    CHECK(log_or_plus(x, p) ==
          doctest::Approx(quadrature_log_or(x, p, true)).epsilon(1e-8));
  }
}

TEST_CASE("log OR+ erf ratio adds log 2 for strong positive evidence") {
  DetectionProblem p = tiny_problem();
  EpochData x = {{40.0, 80.0}};  // E >> 0
  p.alpha_range = AlphaRange::FullLine;
  double core = log_or_pm(x, p);
  p.alpha_range = AlphaRange::PositiveHalfLine;
  CHECK(log_or_plus(x, p) ==
        doctest::Approx(core + std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("correlation statistic") {
  DetectionProblem p;
  p.channels = 3;
  p.window_len = 16;
  p.template_s = make_biphasic_template(16);
  p.couplings = {1.0, -0.5, 0.25};
  p.sigma_n = 1.0;
  p.sigma_alpha = 0.5;

  SUBCASE("zero data scores zero") {
    EpochData x(3, std::vector<double>(16, 0.0));
    CHECK(correlation_stat(x, p) == 0.0);
  }
  SUBCASE("the embedded template correlates positively with itself") {
    EpochData x(3, std::vector<double>(16));
    double expected = 0.0;
    for (int m = 0; m < 3; ++m)
      for (int t = 0; t < 16; ++t) {
        x[m][t] = p.couplings[m] * p.template_s[t];
        expected += p.couplings[m] * p.couplings[m] * p.template_s[t] *
                    p.template_s[t];
      }
    CHECK(expected > 0.0);
    CHECK(correlation_stat(x, p) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("jointly permuting channels changes nothing") {
    RngHandle rng(12);
    EpochData x(3, std::vector<double>(16));
    for (auto& row : x)
      for (double& v : row) v = rng.normal();
    double base_corr = correlation_stat(x, p);
    DetectionStats base_stats = detection_statistics(x, p);

    std::vector<int> perm = {2, 0, 1};
    DetectionProblem q = p;
    EpochData y(3);
    for (int m = 0; m < 3; ++m) {
      y[m] = x[perm[m]];
      q.couplings[m] = p.couplings[perm[m]];
    }
    CHECK(correlation_stat(y, q) == doctest::Approx(base_corr).epsilon(1e-12));
    DetectionStats s = detection_statistics(y, q);
    CHECK(s.d == doctest::Approx(base_stats.d).epsilon(1e-12));
    CHECK(s.e == doctest::Approx(base_stats.e).epsilon(1e-12));
    CHECK(s.f == doctest::Approx(base_stats.f).epsilon(1e-12));
  }
}

TEST_CASE("synthetic datasets") {
  DetectionProblem p;
  p.channels = 3;
  p.window_len = 60;
  p.template_s = make_biphasic_template(60);
  p.couplings = {1.0, 0.7, 0.4};
  p.sigma_n = 1.0;
  p.sigma_alpha = 0.5;
  p.alpha_hat = 1.0;
  NoiseSpec noise;

  SUBCASE("0 dB means the inserted signal RMS equals the noise RMS") {
    double alpha = amplitude_for_snr(0.0, p);
    double energy = 0.0;
    for (int m = 0; m < 3; ++m)
      for (int t = 0; t < 60; ++t)
        energy += p.couplings[m] * p.couplings[m] * alpha * alpha *
                  p.template_s[t] * p.template_s[t];
    double signal_rms = std::sqrt(energy / (3.0 * 60.0));
    CHECK(std::abs(signal_rms - p.sigma_n) < 1e-10);
  }
  SUBCASE("labels count the planted targets; zero targets, all noise") {
    RngHandle rng(77);
    Dataset d = synth_dataset(rng, 5.0, 40, 7, 200, p, noise);
    CHECK(d.epochs.size() == 40);
    int planted = 0;
    for (int l : d.labels) planted += l;
    CHECK(planted == 7);

    Dataset none = synth_dataset(rng, 5.0, 10, 0, 200, p, noise);
    for (int l : none.labels) CHECK(l == 0);
  }
  SUBCASE("AR(2) background is normalized to the requested RMS") {
    RngHandle rng(78);
    NoiseSpec steady = noise;
    steady.burst_log_std = 0.0;  // isolate the stationary normalization
    Dataset d = synth_dataset(rng, 0.0, 60, 0, 200, p, steady);
    double sq = 0.0;
    std::size_t count = 0;
    for (const EpochData& e : d.epochs)
      for (const auto& row : e)
        for (double v : row) {
          sq += v * v;
          ++count;
        }
    CHECK(std::sqrt(sq / count) == doctest::Approx(p.sigma_n).epsilon(0.05));
  }
  SUBCASE("template longer than the epoch is rejected") {
    RngHandle rng(79);
    CHECK_THROWS_AS(synth_dataset(rng, 0.0, 4, 0, 30, p, noise),
                    std::invalid_argument);
  }
}

TEST_CASE("roc curve and AUC") {
  SUBCASE("perfect separation") {
    EpochScores s;
    s.scores = {0.9, 0.8, 0.2, 0.1};
    s.labels = {1, 1, 0, 0};
    RocCurve roc = roc_curve(s);
    CHECK(roc.auc == 1.0);
    CHECK(roc.points.front() == std::pair<double, double>{0.0, 0.0});
    CHECK(roc.points.back() == std::pair<double, double>{1.0, 1.0});
  }
  SUBCASE("all ties give 0.5") {
    EpochScores s;
    s.scores = {0.4, 0.4, 0.4, 0.4};
    s.labels = {1, 0, 1, 0};
    CHECK(roc_curve(s).auc == 0.5);
  }
  SUBCASE("brute-force pair counting on the reference example") {
    EpochScores s;
    s.scores = {0.1, 0.4, 0.35, 0.8};
    s.labels = {0, 0, 1, 1};
    CHECK(roc_curve(s).auc == doctest::Approx(0.75));
  }
  SUBCASE("operating points step monotonically") {
    RngHandle rng(31);
    EpochScores s;
    for (int i = 0; i < 200; ++i) {
      s.labels.push_back(i % 2);
      s.scores.push_back(rng.normal() + 0.8 * (i % 2));
    }
    RocCurve roc = roc_curve(s);
    for (std::size_t i = 1; i < roc.points.size(); ++i) {
      CHECK(roc.points[i].first >= roc.points[i - 1].first);
      CHECK(roc.points[i].second >= roc.points[i - 1].second);
    }
    CHECK(roc.auc > 0.5);
  }
  SUBCASE("single-class labels are an error") {
    EpochScores s;
    s.scores = {0.1, 0.2};
    s.labels = {1, 1};
    CHECK_THROWS_AS(roc_curve(s), std::invalid_argument);
  }
}

TEST_CASE("null calibration: pure-noise epochs have negative median log OR+-") {
  // Matched-noise setting: white background at the filter's sigma_n, one
  // aligned window per epoch. The Occam term log(S^2/D) then dominates.
  DetectionProblem p;
  p.channels = 3;
  p.window_len = 60;
  p.template_s = make_biphasic_template(60);
  p.couplings = {1.0, 0.7, 0.4};
  p.sigma_n = 1.0;
  p.sigma_alpha = 1.0;  // prior spread on the order of the noise scale
  p.alpha_hat = 1.0;
  NoiseSpec noise;
  noise.kind = NoiseModel::White;
  RngHandle rng(55);
  Dataset d = synth_dataset(rng, 0.0, 1000, 0, p.window_len, p, noise);
  std::vector<double> scores;
  for (const EpochData& e : d.epochs)
    scores.push_back(epoch_score(e, p, DetectionMethod::LogOrPm));
  std::nth_element(scores.begin(), scores.begin() + scores.size() / 2,
                   scores.end());
  CHECK(scores[scores.size() / 2] < 0.0);
}

TEST_CASE("log OR+ beats correlation at 5 dB (smoke, 3 seeds)") {
  DetectionProblem p;
  p.channels = 3;
  p.window_len = 60;
  p.template_s = make_biphasic_template(60);
  p.couplings = {1.0, 0.7, 0.4};
  p.sigma_n = 1.0;
  NoiseSpec noise;
  int wins = 0;
  for (int seed = 0; seed < 3; ++seed) {
    double alpha = amplitude_for_snr(5.0, p);
    DetectionProblem q = p;
    q.alpha_hat = alpha;
    q.sigma_alpha = 0.5 * alpha;
    RngHandle rng(2000 + seed);
    Dataset d = synth_dataset(rng, 5.0, 300, 30, 200, q, noise);
    double auc_corr =
        roc_curve(score_epochs(d, q, DetectionMethod::Correlation)).auc;
    double auc_plus =
        roc_curve(score_epochs(d, q, DetectionMethod::LogOrPlus)).auc;
    if (auc_plus > auc_corr) ++wins;
  }
  CHECK(wins >= 2);
}

TEST_SUITE_END();
