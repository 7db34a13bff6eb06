#pragma once

#include <iosfwd>
#include <vector>

#include "evkit/core.hpp"

namespace evkit {

using EpochData = std::vector<std::vector<double>>;  // channels x samples

enum class AlphaRange { PositiveHalfLine, FullLine };

/// Matched-filter detection problem: known template s(t) on T samples,
/// per-channel couplings C_m, known noise std, and a (possibly truncated)
/// Gaussian prior on the single amplitude parameter.
struct DetectionProblem {
  int channels = 1;                 // M
  int window_len = 1;               // T, samples spanned by the template
  std::vector<double> template_s;   // size T
  std::vector<double> couplings;    // size M
  double sigma_n = 1.0;
  double sigma_alpha = 1.0;
  double alpha_hat = 0.0;
  AlphaRange alpha_range = AlphaRange::PositiveHalfLine;

  double s_squared() const { return sigma_n * sigma_n / (sigma_alpha * sigma_alpha); }
};

struct DetectionStats {
  double d = 0.0;   // S^2 + sum C_m^2 s^2(t)
  double e = 0.0;   // S^2 alpha_hat + sum C_m x_m(t) s(t)
  double f = 0.0;   // S^2 alpha_hat^2 + sum x_m^2(t)
  double s2 = 0.0;  // sigma_n^2 / sigma_alpha^2
};

/// The three sufficient statistics of the amplitude-marginalized odds
/// ratio, computed over an M x T window.
DetectionStats detection_statistics(const EpochData& x, const DetectionProblem& p);

/// Log odds ratio with the amplitude free over the whole real line:
/// (1/2)[(E^2/(D sigma_n^2) - alpha_hat^2/sigma_alpha^2) + log(S^2/D)].
double log_or_pm(const EpochData& x, const DetectionProblem& p);

/// Log odds ratio with the amplitude restricted to be positive: the same
/// core plus the erf-ratio term, with erfc forms for large-negative
/// arguments.
double log_or_plus(const EpochData& x, const DetectionProblem& p);

/// Plain cross-correlation sum C_m x_m(t) s(t), the classical baseline.
double correlation_stat(const EpochData& x, const DetectionProblem& p);

// ---------------------------------------------------------------------------
// Synthetic data

/// Smooth biphasic pulse (small leading dip, raised-cosine positive lobe)
/// standing in for the P300 waveshape, peak normalized to 1.
std::vector<double> make_biphasic_template(int len);

enum class NoiseModel { White, Ar2 };

// EEG-background stand-in: an AR(2) resonance whose period sits in the
// template's own band (pole radius 0.997, period 60 samples), so the
// matched filter cannot simply average the background away, plus per-epoch
// amplitude bursts and occasional polarity-flipped targets. These are what
// keep the detection problem in the regime where the filters differ.
struct NoiseSpec {
  NoiseModel kind = NoiseModel::Ar2;
  double ar1 = 1.9830766593643370;   // 2 r cos(2 pi / 60)
  double ar2 = -0.994009;            // -r^2
  // Per-channel scaling of the AR background, standing in for the forward
  // model's channel weighting; renormalized so the pooled RMS is sigma_n.
  std::vector<double> channel_scale = {1.0, 0.8, 0.6};
  // Per-epoch lognormal amplitude modulation of the background (ongoing
  // activity waxes and wanes between epochs). Normalized so the pooled
  // mean-square stays sigma_n^2; 0 disables.
  double burst_log_std = 0.7;
  // Probability that a target event couples with inverted polarity
  // (montage/dipole-orientation ambiguity); its label stays 1.
  double target_flip_prob = 0.12;
};

struct Dataset {
  std::vector<EpochData> epochs;
  std::vector<int> labels;  // 1 = target present
};

/// n_epochs of M x epoch_len background noise; the scaled template
/// alpha C_m s(t) is inserted at a uniformly random latency in n_targets
/// randomly chosen epochs. alpha satisfies
/// snr_db = 10 log10(A_signal / A_noise)^2 with both amplitudes taken as
/// RMS over the template support (A_noise from the stationary noise RMS,
/// so the scaling is deterministic).
Dataset synth_dataset(RngHandle& rng, double snr_db, int n_epochs,
                      int n_targets, int epoch_len, const DetectionProblem& p,
                      const NoiseSpec& noise);

/// The amplitude used by synth_dataset for a given SNR.
double amplitude_for_snr(double snr_db, const DetectionProblem& p);

// ---------------------------------------------------------------------------
// Scoring and ROC

struct EpochScores {
  std::vector<double> scores;
  std::vector<int> labels;
};

enum class DetectionMethod { Correlation, LogOrPlus, LogOrPm };

/// Epoch score: the maximum of the statistic over all template latencies
/// inside the epoch, the same convention for every method.
double epoch_score(const EpochData& epoch, const DetectionProblem& p,
                   DetectionMethod method);

EpochScores score_epochs(const Dataset& data, const DetectionProblem& p,
                         DetectionMethod method);

struct RocCurve {
  // (1 - specificity, sensitivity), ordered from threshold above all scores
  // down to below all scores; first point (0,0), last (1,1).
  std::vector<std::pair<double, double>> points;
  double auc = 0.5;
};

/// Operating points at each distinct score; AUC by the rank statistic with
/// ties counted 1/2 (equals the trapezoidal area under the stepped curve).
RocCurve roc_curve(const EpochScores& scores);

/// CSV rows (epoch, label, one column per method score), prefixed with an
/// snr_db column so sweep outputs concatenate.
void write_scores_csv(double snr_db, const EpochScores& corr,
                      const EpochScores& or_plus, const EpochScores& or_pm,
                      std::ostream& out, bool header);

}  // namespace evkit
