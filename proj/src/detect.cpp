#include "evkit/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace evkit {

namespace {

void check_problem(const DetectionProblem& p) {
  if (p.channels < 1 || p.window_len < 1)
    throw std::invalid_argument("detection: M and T must be >= 1");
  if (static_cast<int>(p.template_s.size()) != p.window_len ||
      static_cast<int>(p.couplings.size()) != p.channels)
    throw std::invalid_argument("detection: template/coupling size mismatch");
  if (!(p.sigma_n > 0.0) || !(p.sigma_alpha > 0.0))
    throw std::invalid_argument("detection: sigma_n and sigma_alpha must be > 0");
}

void check_window(const EpochData& x, const DetectionProblem& p) {
  if (static_cast<int>(x.size()) != p.channels)
    throw std::invalid_argument("detection: channel count mismatch");
  for (const auto& row : x)
    if (static_cast<int>(row.size()) != p.window_len)
      throw std::invalid_argument("detection: window length mismatch");
}

struct WindowSums {
  double cross = 0.0;  // sum C_m x_m(t) s(t)
  double power = 0.0;  // sum x_m^2(t)
};

WindowSums window_sums(const EpochData& x, int offset, const DetectionProblem& p) {
  WindowSums w;
  for (int m = 0; m < p.channels; ++m) {
    const double* row = x[m].data() + offset;
    double cm = p.couplings[m];
    for (int t = 0; t < p.window_len; ++t) {
      w.cross += cm * row[t] * p.template_s[t];
      w.power += row[t] * row[t];
    }
  }
  return w;
}

double template_energy(const DetectionProblem& p) {
  double e = 0.0;
  for (int m = 0; m < p.channels; ++m) {
    double c2 = p.couplings[m] * p.couplings[m];
    for (int t = 0; t < p.window_len; ++t)
      e += c2 * p.template_s[t] * p.template_s[t];
  }
  return e;
}

DetectionStats stats_from_sums(const WindowSums& w, double d_energy,
                               const DetectionProblem& p) {
  DetectionStats s;
  s.s2 = p.s_squared();
  s.d = s.s2 + d_energy;
  s.e = s.s2 * p.alpha_hat + w.cross;
  s.f = s.s2 * p.alpha_hat * p.alpha_hat + w.power;
  return s;
}

double log_or_pm_core(const DetectionStats& s, const DetectionProblem& p) {
  return 0.5 * (s.e * s.e / (s.d * p.sigma_n * p.sigma_n) -
                p.alpha_hat * p.alpha_hat / (p.sigma_alpha * p.sigma_alpha) +
                std::log(s.s2 / s.d));
}

// log(1 + erf(z)) = log(erfc(-z)), safe for large-negative z.
double log_one_plus_erf(double z) { return log_erfc(-z); }

double log_or_plus_from_stats(const DetectionStats& s, const DetectionProblem& p) {
  double z_num = s.e / (std::sqrt(2.0 * s.d) * p.sigma_n);
  double z_den = p.alpha_hat / (std::sqrt(2.0) * p.sigma_alpha);
  return log_or_pm_core(s, p) + log_one_plus_erf(z_num) - log_one_plus_erf(z_den);
}

}  // namespace

DetectionStats detection_statistics(const EpochData& x, const DetectionProblem& p) {
  check_problem(p);
  check_window(x, p);
  return stats_from_sums(window_sums(x, 0, p), template_energy(p), p);
}

double log_or_pm(const EpochData& x, const DetectionProblem& p) {
  if (p.alpha_range != AlphaRange::FullLine)
    throw std::invalid_argument("log_or_pm: needs alpha_range = full line");
  return log_or_pm_core(detection_statistics(x, p), p);
}

double log_or_plus(const EpochData& x, const DetectionProblem& p) {
  if (p.alpha_range != AlphaRange::PositiveHalfLine)
    throw std::invalid_argument("log_or_plus: needs alpha_range = positive half line");
  return log_or_plus_from_stats(detection_statistics(x, p), p);
}

double correlation_stat(const EpochData& x, const DetectionProblem& p) {
  check_problem(p);
  check_window(x, p);
  return window_sums(x, 0, p).cross;
}

std::vector<double> make_biphasic_template(int len) {
  if (len < 4) throw std::invalid_argument("make_biphasic_template: too short");
  std::vector<double> s(len);
  int dip_len = static_cast<int>(0.35 * len);
  for (int t = 0; t < dip_len; ++t) {
    double tau = (t + 0.5) / dip_len;
    s[t] = -0.4 * 0.5 * (1.0 - std::cos(2.0 * M_PI * tau));
  }
  int lobe_len = len - dip_len;
  for (int t = 0; t < lobe_len; ++t) {
    double tau = (t + 0.5) / lobe_len;
    s[dip_len + t] = 0.5 * (1.0 - std::cos(2.0 * M_PI * tau));
  }
  return s;
}

double amplitude_for_snr(double snr_db, const DetectionProblem& p) {
  check_problem(p);
  double energy = template_energy(p);
  if (!(energy > 0.0))
    throw std::invalid_argument("amplitude_for_snr: zero template energy");
  // RMS of C_m s(t) over the template support, pooled across channels.
  double rms_unit = std::sqrt(energy / (p.channels * p.window_len));
  double a_noise = p.sigma_n;  // stationary noise RMS by construction
  return std::pow(10.0, snr_db / 20.0) * a_noise / rms_unit;
}

Dataset synth_dataset(RngHandle& rng, double snr_db, int n_epochs,
                      int n_targets, int epoch_len, const DetectionProblem& p,
                      const NoiseSpec& noise) {
  check_problem(p);
  if (n_targets > n_epochs)
    throw std::invalid_argument("synth_dataset: n_targets > n_epochs");
  if (epoch_len < p.window_len)
    throw std::invalid_argument("synth_dataset: template longer than epoch");
  if (!std::isfinite(snr_db))
    throw std::invalid_argument("synth_dataset: snr_db must be finite");

  // AR(2) stationary variance for unit innovations, used to normalize the
  // background so its pooled RMS equals sigma_n.
  double ar_gain = 1.0;
  std::vector<double> chan_scale(p.channels, 1.0);
  if (noise.kind == NoiseModel::Ar2) {
    double a1 = noise.ar1, a2 = noise.ar2;
    double denom = (1.0 + a2) * ((1.0 - a2) * (1.0 - a2) - a1 * a1);
    if (!(denom > 0.0))
      throw std::invalid_argument("synth_dataset: unstable AR(2) coefficients");
    ar_gain = std::sqrt((1.0 - a2) / denom);
    double ms = 0.0;
    for (int m = 0; m < p.channels; ++m) {
      chan_scale[m] = noise.channel_scale.empty()
                          ? 1.0
                          : noise.channel_scale[m % noise.channel_scale.size()];
      ms += chan_scale[m] * chan_scale[m];
    }
    double rms = std::sqrt(ms / p.channels);
    for (double& c : chan_scale) c /= rms;
  }

  double alpha = amplitude_for_snr(snr_db, p);

  Dataset out;
  out.epochs.resize(n_epochs);
  out.labels.assign(n_epochs, 0);

  // Random distinct target epochs via partial Fisher-Yates.
  std::vector<int> order(n_epochs);
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < n_targets; ++i) {
    int j = i + static_cast<int>(rng.uniform_index(n_epochs - i));
    std::swap(order[i], order[j]);
    out.labels[order[i]] = 1;
  }

  constexpr int kWarmup = 3000;
  for (int e = 0; e < n_epochs; ++e) {
    EpochData& epoch = out.epochs[e];
    epoch.assign(p.channels, std::vector<double>(epoch_len, 0.0));
    double burst = 1.0;
    if (noise.kind == NoiseModel::Ar2 && noise.burst_log_std > 0.0)
      burst = std::exp(noise.burst_log_std * rng.normal() -
                       noise.burst_log_std * noise.burst_log_std);
    for (int m = 0; m < p.channels; ++m) {
      if (noise.kind == NoiseModel::White) {
        for (int t = 0; t < epoch_len; ++t)
          epoch[m][t] = p.sigma_n * rng.normal();
      } else {
        // ar_gain is the std of the raw process; divide it out, then apply
        // sigma_n, the burst level and the channel weighting.
        double scale = burst * p.sigma_n * chan_scale[m] / ar_gain;
        double v1 = 0.0, v2 = 0.0;
        for (int t = -kWarmup; t < epoch_len; ++t) {
          double v = noise.ar1 * v1 + noise.ar2 * v2 + rng.normal();
          v2 = v1;
          v1 = v;
          if (t >= 0) epoch[m][t] = scale * v;
        }
      }
    }
    if (out.labels[e]) {
      int latency =
          static_cast<int>(rng.uniform_index(epoch_len - p.window_len + 1));
      double sign =
          rng.uniform() < noise.target_flip_prob ? -1.0 : 1.0;
      for (int m = 0; m < p.channels; ++m)
        for (int t = 0; t < p.window_len; ++t)
          epoch[m][latency + t] +=
              sign * alpha * p.couplings[m] * p.template_s[t];
    }
  }
  return out;
}

double epoch_score(const EpochData& epoch, const DetectionProblem& p,
                   DetectionMethod method) {
  check_problem(p);
  if (static_cast<int>(epoch.size()) != p.channels)
    throw std::invalid_argument("epoch_score: channel count mismatch");
  int epoch_len = static_cast<int>(epoch[0].size());
  if (epoch_len < p.window_len)
    throw std::invalid_argument("epoch_score: epoch shorter than template");
  double d_energy = template_energy(p);

  // The correlation baseline is the classical normalized template match:
  // the cosine between the window and the coupling-weighted template,
  // peak-picked over latency. The odds ratios instead treat the latency as
  // one more unknown, uniform over the window positions, so the epoch-level
  // odds are the mean of the per-latency odds. (Peak-picking the raw cross
  // term would make log OR+ a monotone map of it and the two ROC curves
  // would coincide by construction.)
  std::vector<double> window_scores;
  window_scores.reserve(epoch_len - p.window_len + 1);
  for (int off = 0; off + p.window_len <= epoch_len; ++off) {
    WindowSums w = window_sums(epoch, off, p);
    switch (method) {
      case DetectionMethod::Correlation:
        window_scores.push_back(
            w.power > 0.0 ? w.cross / std::sqrt(w.power * d_energy) : 0.0);
        break;
      case DetectionMethod::LogOrPm:
        window_scores.push_back(log_or_pm_core(stats_from_sums(w, d_energy, p), p));
        break;
      case DetectionMethod::LogOrPlus:
        window_scores.push_back(
            log_or_plus_from_stats(stats_from_sums(w, d_energy, p), p));
        break;
    }
  }
  if (method == DetectionMethod::Correlation)
    return *std::max_element(window_scores.begin(), window_scores.end());
  return log_mean_exp(window_scores);
}

EpochScores score_epochs(const Dataset& data, const DetectionProblem& p,
                         DetectionMethod method) {
  EpochScores out;
  out.labels = data.labels;
  out.scores.reserve(data.epochs.size());
  for (const EpochData& epoch : data.epochs)
    out.scores.push_back(epoch_score(epoch, p, method));
  return out;
}

void write_scores_csv(double snr_db, const EpochScores& corr,
                      const EpochScores& or_plus, const EpochScores& or_pm,
                      std::ostream& out, bool header) {
  const std::size_t n = corr.scores.size();
  if (or_plus.scores.size() != n || or_pm.scores.size() != n ||
      corr.labels.size() != n)
    throw std::invalid_argument("write_scores_csv: size mismatch");
  if (header) out << "snr_db,epoch,label,corr,log_or_plus,log_or_pm\n";
  char buf[200];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%zu,%d,%.17g,%.17g,%.17g\n", snr_db,
                  i, corr.labels[i], corr.scores[i], or_plus.scores[i],
                  or_pm.scores[i]);
    out << buf;
  }
}

RocCurve roc_curve(const EpochScores& scores) {
  const std::size_t n = scores.scores.size();
  if (n == 0 || scores.labels.size() != n)
    throw std::invalid_argument("roc_curve: size mismatch");
  std::size_t n_pos = 0;
  for (int l : scores.labels) n_pos += l ? 1 : 0;
  std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("roc_curve: both classes must be present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores.scores[a] > scores.scores[b];
  });

  RocCurve roc;
  roc.points.emplace_back(0.0, 0.0);
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < n) {
    double v = scores.scores[order[i]];
    while (i < n && scores.scores[order[i]] == v) {
      if (scores.labels[order[i]]) ++tp; else ++fp;
      ++i;
    }
    roc.points.emplace_back(static_cast<double>(fp) / n_neg,
                            static_cast<double>(tp) / n_pos);
  }

  // Mann-Whitney with midranks for ties.
  std::vector<std::size_t> rank_order(n);
  std::iota(rank_order.begin(), rank_order.end(), 0);
  std::sort(rank_order.begin(), rank_order.end(), [&](std::size_t a, std::size_t b) {
    return scores.scores[a] < scores.scores[b];
  });
  double rank_sum_pos = 0.0;
  std::size_t j = 0;
  while (j < n) {
    double v = scores.scores[rank_order[j]];
    std::size_t k = j;
    while (k < n && scores.scores[rank_order[k]] == v) ++k;
    double mid_rank = 0.5 * static_cast<double>(j + 1 + k);  // average rank
    for (std::size_t t = j; t < k; ++t)
      if (scores.labels[rank_order[t]]) rank_sum_pos += mid_rank;
    j = k;
  }
  roc.auc = (rank_sum_pos - 0.5 * n_pos * (n_pos + 1.0)) /
            (static_cast<double>(n_pos) * static_cast<double>(n_neg));
  return roc;
}

}  // namespace evkit
