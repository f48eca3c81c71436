#pragma once

#include <cstdint>
#include <vector>

#include "safe/device.hpp"

namespace safe {

// Function generator DAC followed by a resistive divider.
//
// The default ratio reproduces a 610 uV/bit generator seen through the
// divider as 3.39 pV/bit. That ratio (~1.8e8) is kept for the
// quantization-contribution check; it is not a physically usable divider
// for a +-5 V generator, so experiments may override it.
struct DacModel {
  double dac_step_v = 610e-6;
  double divider_ratio = 610e-6 / 3.39e-12;

  double post_divider_step_v() const noexcept { return dac_step_v / divider_ratio; }
  double post_divider_step_uv() const noexcept { return post_divider_step_v() * 1e6; }
  void validate() const;

  static DacModel from_config(const KeyValueConfig& cfg, const DacModel& base,
                              std::string_view prefix = "dac.");
};

// Sinusoid as the amplifier inputs see it: the generator output is quantized
// at DAC resolution, then divided down. `phase_rad` is the phase at t = 0.
SignalSource gen_sinusoid(double amplitude_uv, double freq_hz, const DacModel& dac, double duration_s,
                          double phase_rad = 0.0);

// Ideal analytic sinusoid, A sin(2 pi f t + phase), on every channel.
SignalSource analytic_sinusoid(double amplitude_uv, double freq_hz, double duration_s, double phase_rad = 0.0);

// 10..190 Hz in 10 Hz steps without mains (50 Hz) and its harmonics.
std::vector<double> sweep_frequencies();
// 10..100 uV in 10 uV steps.
std::vector<double> sweep_amplitudes();

// Biphasic raised-cosine evoked response: a positive lobe peaking at
// `peak_time_ms` (60 % of the peak-to-peak swing) followed by a negative lobe
// (40 %). Both lobes share half-width min(35 ms, peak, (200 - peak) / 3), so
// the waveform is zero outside [0, 200] ms.
struct VepTemplate {
  double peak_time_ms = 90.0;
  double peak_to_peak_uv = 100.0;

  static constexpr double kWindowMs = 200.0;
  static constexpr double kPositiveShare = 0.6;

  double operator()(double latency_ms) const;
  double lobe_half_width_ms() const;
  double trough_time_ms() const { return peak_time_ms + 2.0 * lobe_half_width_ms(); }
  void validate() const;
};

// White Gaussian background, independent per channel; a pure function of
// (channel, t) held constant over 1/8192 s cells.
SignalSource::Evaluator background_noise(double sigma_uv, std::uint64_t seed);

struct VepSession {
  SignalSource source;
  // Flash times k / flash_rate for k = 0 .. floor(duration * rate) - 1.
  std::vector<double> flash_times_s;
};

// Evoked responses at every flash plus background noise. `channel_gains`,
// when non-empty, scales the template per channel (channels beyond the list
// use gain 1).
VepSession gen_vep_session(const VepTemplate& tmpl, double flash_rate_hz, double duration_s,
                           double background_sigma_uv, std::uint64_t seed,
                           std::vector<double> channel_gains = {});

}  // namespace safe
