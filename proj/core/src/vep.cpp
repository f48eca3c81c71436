#include "safe/vep.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "safe/errors.hpp"

namespace safe {

std::int64_t TrialSet::clean_count() const {
  std::int64_t n = 0;
  for (const auto& t : trials) n += t.clean ? 1 : 0;
  return n;
}

TrialSet epoch_vep(const Recording& rec, double pre_ms, double post_ms) {
  if (!(pre_ms > 0.0 && post_ms > 0.0)) throw std::invalid_argument("epoch_vep: windows must be positive");
  if (rec.triggers.empty()) throw std::invalid_argument("epoch_vep: recording has no triggers");
  const auto& spec = rec.spec;
  const auto& r = rec.record;

  TrialSet set;
  set.sample_rate_hz = spec.sample_rate_hz;
  set.channel_count = r.channel_count();
  set.pre_samples = std::llround(pre_ms * 1e-3 * spec.sample_rate_hz);
  set.post_samples = std::llround(post_ms * 1e-3 * spec.sample_rate_hz);

  for (const auto& trig : rec.triggers) {
    const auto anchor = trig.anchor_frame(spec);
    const auto begin = anchor - set.pre_samples;
    const auto end = anchor + set.post_samples + 1;
    if (begin < 0 || end > r.total_frames()) {
      ++set.skipped_at_edges;
      continue;
    }
    Trial t;
    t.anchor_frame = anchor;
    t.true_time_s = trig.true_time_s;
    t.clean = !r.overlaps_gap(begin, end);
    t.values.resize(static_cast<std::size_t>(r.channel_count()));
    for (int c = 0; c < r.channel_count(); ++c) {
      auto ch = r.channel(c);
      t.values[static_cast<std::size_t>(c)].assign(ch.begin() + begin, ch.begin() + end);
    }
    set.trials.push_back(std::move(t));
  }
  return set;
}

AveragedTrace vep_average(const TrialSet& trials) {
  AveragedTrace avg;
  avg.pre_samples = trials.pre_samples;
  avg.sample_rate_hz = trials.sample_rate_hz;
  const auto len = static_cast<std::size_t>(trials.window_samples());
  avg.channels.assign(static_cast<std::size_t>(trials.channel_count), std::vector<double>(len, 0.0));
  for (const auto& t : trials.trials) {
    if (!t.clean) continue;
    ++avg.trial_count;
    for (std::size_t c = 0; c < avg.channels.size(); ++c)
      for (std::size_t i = 0; i < len; ++i) avg.channels[c][i] += t.values[c][i];
  }
  if (avg.trial_count == 0) throw AnalysisError("vep_average: no clean trials");
  const double inv = 1.0 / static_cast<double>(avg.trial_count);
  for (auto& ch : avg.channels)
    for (double& v : ch) v *= inv;
  return avg;
}

double sample_variance_population(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("variance of empty window");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size());
}

namespace {

void check_trace(std::span<const double> trace, std::int64_t pre_samples) {
  if (pre_samples < 1 || static_cast<std::int64_t>(trace.size()) < 2 * pre_samples)
    throw std::invalid_argument("vep_metrics: trace must span the pre and post windows");
}

std::span<const double> post_window(std::span<const double> trace, std::int64_t pre_samples) {
  return trace.subspan(static_cast<std::size_t>(pre_samples), static_cast<std::size_t>(pre_samples));
}

}  // namespace

double vep_amplitude(std::span<const double> trace, std::int64_t pre_samples) {
  check_trace(trace, pre_samples);
  const auto post = post_window(trace, pre_samples);
  const auto [lo, hi] = std::minmax_element(post.begin(), post.end());
  return *hi - *lo;
}

double vep_peak_time_ms(std::span<const double> trace, std::int64_t pre_samples, double sample_rate_hz) {
  check_trace(trace, pre_samples);
  const auto post = post_window(trace, pre_samples);
  std::size_t peak = 0;
  for (std::size_t i = 1; i < post.size(); ++i)
    if (std::abs(post[i]) > std::abs(post[peak])) peak = i;
  return static_cast<double>(peak) * 1e3 / sample_rate_hz;
}

double vep_snr_db(std::span<const double> trace, std::int64_t pre_samples) {
  check_trace(trace, pre_samples);
  const double var_pre = sample_variance_population(trace.subspan(0, static_cast<std::size_t>(pre_samples)));
  if (!(var_pre > 0.0)) throw AnalysisError("vep_metrics: pre-stimulus variance is zero, SNR undefined");
  return 10.0 * std::log10(sample_variance_population(post_window(trace, pre_samples)) / var_pre);
}

VepMetrics vep_metrics(std::span<const double> trace, std::int64_t pre_samples, double sample_rate_hz,
                       std::optional<double> manual_peak_ms) {
  VepMetrics m;
  m.amplitude_uv = vep_amplitude(trace, pre_samples);
  m.peak_time_ms = manual_peak_ms ? *manual_peak_ms : vep_peak_time_ms(trace, pre_samples, sample_rate_hz);
  m.snr_db = vep_snr_db(trace, pre_samples);
  return m;
}

}  // namespace safe
