#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "safe/recorder.hpp"

namespace safe {

// One stimulus-locked window, values[channel][sample]; sample `pre_samples`
// is the anchor frame.
struct Trial {
  std::vector<std::vector<double>> values;
  std::int64_t anchor_frame = 0;
  double true_time_s = 0.0;
  bool clean = true;
};

struct TrialSet {
  std::vector<Trial> trials;
  std::int64_t pre_samples = 0;
  std::int64_t post_samples = 0;
  double sample_rate_hz = 0.0;
  int channel_count = 0;
  // Triggers whose window runs past either end of the session.
  std::int64_t skipped_at_edges = 0;

  std::int64_t clean_count() const;
  std::int64_t window_samples() const { return pre_samples + post_samples + 1; }
};

// Cuts [anchor - round(pre_ms fs), anchor + round(post_ms fs)] around every
// trigger anchor. Trials touching a gap are kept but marked unclean.
TrialSet epoch_vep(const Recording& rec, double pre_ms = 200.0, double post_ms = 200.0);

struct AveragedTrace {
  std::vector<std::vector<double>> channels;
  std::int64_t pre_samples = 0;
  double sample_rate_hz = 0.0;
  std::int64_t trial_count = 0;
};

// Pointwise mean over clean trials. Throws AnalysisError with none.
AveragedTrace vep_average(const TrialSet& trials);

struct VepMetrics {
  double amplitude_uv = 0.0;  // max - min over the post window
  double snr_db = 0.0;        // 10 log10(var(post) / var(pre))
  double peak_time_ms = 0.0;  // latency of the largest |value| in the post window
};

// `trace` spans -pre..+pre samples around the anchor at index `pre_samples`.
// Windows are [0, pre_samples) after and [-pre_samples, 0) before the anchor.
// Throws AnalysisError if the pre-window variance is zero.
VepMetrics vep_metrics(std::span<const double> trace, std::int64_t pre_samples, double sample_rate_hz,
                       std::optional<double> manual_peak_ms = std::nullopt);

// The three metrics individually, same windows as vep_metrics.
double vep_amplitude(std::span<const double> trace, std::int64_t pre_samples);
double vep_peak_time_ms(std::span<const double> trace, std::int64_t pre_samples, double sample_rate_hz);
double vep_snr_db(std::span<const double> trace, std::int64_t pre_samples);

double sample_variance_population(std::span<const double> values);

}  // namespace safe
