#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "safe/config.hpp"
#include "safe/random.hpp"

namespace safe {

// Amplifier and link parameters. Defaults are the SAFE implant's figures:
// 1024 Hz per channel, 0.125 uV/step, 16-bit codes, 10 us between channel
// conversions, 6 channels, 41 frames per BLE packet (~40 ms), 5 % loss.
struct DeviceSpec {
  double sample_rate_hz = 1024.0;
  double adc_step_uv = 0.125;
  int adc_bits = 16;
  double interchannel_skew_us = 10.0;
  int channel_count = 6;
  int frames_per_packet = 41;
  double noise_sigma_uv = 9.4;
  double loss_probability = 0.05;

  // SAFE implant preset (same as the defaults).
  static DeviceSpec safe();
  // Wired reference amplifier: 1200 Hz, simultaneous sampling, 4 uV noise, lossless link.
  static DeviceSpec reference();

  // Reads keys named exactly as the fields; missing keys keep `base` values.
  // `prefix` is prepended to every key (e.g. "safe." for scoped configs).
  static DeviceSpec from_config(const KeyValueConfig& cfg, const DeviceSpec& base,
                                std::string_view prefix = "");
  void to_config(KeyValueConfig& cfg, std::string_view prefix = "") const;

  // Throws std::invalid_argument naming the first violated constraint.
  void validate() const;

  std::int32_t max_code() const noexcept { return (std::int32_t{1} << (adc_bits - 1)) - 1; }
  std::int32_t min_code() const noexcept { return -(std::int32_t{1} << (adc_bits - 1)); }
  // Magnitude of the negative rail: step * 2^(bits-1).
  double full_scale_uv() const noexcept;
  double frame_period_s() const noexcept { return 1.0 / sample_rate_hz; }
  double packet_span_s() const noexcept { return frames_per_packet / sample_rate_hz; }

  bool operator==(const DeviceSpec&) const = default;
};

// One multiplexed conversion sweep over all channels.
struct SampleFrame {
  std::int64_t frame_index = 0;
  std::vector<double> channel_values_uv;

  bool operator==(const SampleFrame&) const = default;
};

// Continuous-time input to the amplifier. The evaluator must be a pure
// function of (channel, time) so acquisitions are reproducible and sources
// can be evaluated concurrently.
class SignalSource {
 public:
  using Evaluator = std::function<double(int channel, double t_s)>;

  SignalSource() = default;
  SignalSource(Evaluator eval, double duration_s, std::string description = {});

  double operator()(int channel, double t_s) const { return eval_(channel, t_s); }
  double duration_s() const noexcept { return duration_s_; }
  const std::string& description() const noexcept { return description_; }

  // Same waveform delayed by `offset_s`; the new source is `offset_s` longer
  // and evaluates `fill` (default zero) before the original's t = 0.
  SignalSource delayed(double offset_s, Evaluator fill = {}) const;

 private:
  Evaluator eval_ = [](int, double) { return 0.0; };
  double duration_s_ = 0.0;
  std::string description_;
};

// Quantize to the ADC grid: clamp(round_half_away(v / step), min, max) * step.
double adc_quantize(double v_uv, const DeviceSpec& spec);
// Integer code for a value; the value is quantized first.
std::int32_t adc_code(double v_uv, const DeviceSpec& spec);

// Samples one frame. Channel c sees time frame_index / fs + c * skew; white
// Gaussian noise is added before quantization.
SampleFrame sample_frame(const SignalSource& src, std::int64_t frame_index, const DeviceSpec& spec,
                         RandomStream& noise);

// Number of frames an acquisition of `duration_s` produces: floor(duration * fs).
std::int64_t frame_count_for(double duration_s, const DeviceSpec& spec);

std::vector<SampleFrame> run_acquisition(const SignalSource& src, const DeviceSpec& spec,
                                         double duration_s, std::uint64_t seed);

}  // namespace safe
