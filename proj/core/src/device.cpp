#include "safe/device.hpp"

#include <cmath>
#include <stdexcept>

namespace safe {

DeviceSpec DeviceSpec::safe() { return DeviceSpec{}; }

DeviceSpec DeviceSpec::reference() {
  DeviceSpec s;
  s.sample_rate_hz = 1200.0;
  s.interchannel_skew_us = 0.0;
  s.noise_sigma_uv = 4.0;
  s.loss_probability = 0.0;
  return s;
}

DeviceSpec DeviceSpec::from_config(const KeyValueConfig& cfg, const DeviceSpec& base,
                                   std::string_view prefix) {
  const std::string p(prefix);
  DeviceSpec s = base;
  s.sample_rate_hz = cfg.get_double(p + "sample_rate_hz", s.sample_rate_hz);
  s.adc_step_uv = cfg.get_double(p + "adc_step_uv", s.adc_step_uv);
  s.adc_bits = static_cast<int>(cfg.get_int(p + "adc_bits", s.adc_bits));
  s.interchannel_skew_us = cfg.get_double(p + "interchannel_skew_us", s.interchannel_skew_us);
  s.channel_count = static_cast<int>(cfg.get_int(p + "channel_count", s.channel_count));
  s.frames_per_packet = static_cast<int>(cfg.get_int(p + "frames_per_packet", s.frames_per_packet));
  s.noise_sigma_uv = cfg.get_double(p + "noise_sigma_uv", s.noise_sigma_uv);
  s.loss_probability = cfg.get_double(p + "loss_probability", s.loss_probability);
  return s;
}

void DeviceSpec::to_config(KeyValueConfig& cfg, std::string_view prefix) const {
  const std::string p(prefix);
  cfg.set(p + "sample_rate_hz", sample_rate_hz);
  cfg.set(p + "adc_step_uv", adc_step_uv);
  cfg.set(p + "adc_bits", std::int64_t{adc_bits});
  cfg.set(p + "interchannel_skew_us", interchannel_skew_us);
  cfg.set(p + "channel_count", std::int64_t{channel_count});
  cfg.set(p + "frames_per_packet", std::int64_t{frames_per_packet});
  cfg.set(p + "noise_sigma_uv", noise_sigma_uv);
  cfg.set(p + "loss_probability", loss_probability);
}

void DeviceSpec::validate() const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
    throw std::invalid_argument("sample_rate_hz must be positive");
  if (!(adc_step_uv > 0.0) || !std::isfinite(adc_step_uv))
    throw std::invalid_argument("adc_step_uv must be positive");
  if (adc_bits < 2 || adc_bits > 31) throw std::invalid_argument("adc_bits must be in [2, 31]");
  if (!(interchannel_skew_us >= 0.0)) throw std::invalid_argument("interchannel_skew_us must be >= 0");
  if (channel_count < 1) throw std::invalid_argument("channel_count must be positive");
  if (frames_per_packet < 1) throw std::invalid_argument("frames_per_packet must be positive");
  if (!(noise_sigma_uv >= 0.0) || !std::isfinite(noise_sigma_uv))
    throw std::invalid_argument("noise_sigma_uv must be >= 0");
  if (!(loss_probability >= 0.0 && loss_probability <= 1.0))
    throw std::invalid_argument("loss_probability must be in [0, 1]");
  if (!(interchannel_skew_us * channel_count < 1e6 / sample_rate_hz))
    throw std::invalid_argument("interchannel_skew_us * channel_count must fit inside one frame period");
}

double DeviceSpec::full_scale_uv() const noexcept {
  return adc_step_uv * static_cast<double>(std::int64_t{1} << (adc_bits - 1));
}

std::int32_t adc_code(double v_uv, const DeviceSpec& spec) {
  if (!std::isfinite(v_uv)) throw std::invalid_argument("adc_quantize: non-finite input");
  // std::round rounds half away from zero.
  const double code = std::round(v_uv / spec.adc_step_uv);
  if (code >= spec.max_code()) return spec.max_code();
  if (code <= spec.min_code()) return spec.min_code();
  return static_cast<std::int32_t>(code);
}

double adc_quantize(double v_uv, const DeviceSpec& spec) { return adc_code(v_uv, spec) * spec.adc_step_uv; }

SampleFrame sample_frame(const SignalSource& src, std::int64_t frame_index, const DeviceSpec& spec,
                         RandomStream& noise) {
  if (frame_index < 0) throw std::invalid_argument("sample_frame: negative frame index");
  const double t0 = static_cast<double>(frame_index) / spec.sample_rate_hz;
  if (t0 > src.duration_s()) {
    throw std::out_of_range("sample_frame: frame time " + format_double(t0) + " s beyond source duration " +
                            format_double(src.duration_s()) + " s");
  }
  const double skew_s = spec.interchannel_skew_us * 1e-6;
  SampleFrame frame;
  frame.frame_index = frame_index;
  frame.channel_values_uv.resize(static_cast<std::size_t>(spec.channel_count));
  for (int c = 0; c < spec.channel_count; ++c) {
    double v = src(c, t0 + c * skew_s);
    if (spec.noise_sigma_uv > 0.0) v += noise.normal(spec.noise_sigma_uv);
    frame.channel_values_uv[static_cast<std::size_t>(c)] = adc_quantize(v, spec);
  }
  return frame;
}

std::int64_t frame_count_for(double duration_s, const DeviceSpec& spec) {
  // The relative slack absorbs products like 0.3 * 1200 = 359.99999999999994.
  return static_cast<std::int64_t>(std::floor(duration_s * spec.sample_rate_hz * (1.0 + 1e-12)));
}

std::vector<SampleFrame> run_acquisition(const SignalSource& src, const DeviceSpec& spec,
                                         double duration_s, std::uint64_t seed) {
  spec.validate();
  if (!(duration_s > 0.0)) throw std::invalid_argument("run_acquisition: duration must be positive");
  if (duration_s > src.duration_s() * (1.0 + 1e-12)) {
    throw std::invalid_argument("run_acquisition: duration exceeds source duration");
  }
  const std::int64_t n = frame_count_for(duration_s, spec);
  RandomStream noise(seed);
  std::vector<SampleFrame> frames;
  frames.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) frames.push_back(sample_frame(src, i, spec, noise));
  return frames;
}

SignalSource::SignalSource(Evaluator eval, double duration_s, std::string description)
    : eval_(std::move(eval)), duration_s_(duration_s), description_(std::move(description)) {
  if (!eval_) throw std::invalid_argument("SignalSource: empty evaluator");
  if (!(duration_s >= 0.0)) throw std::invalid_argument("SignalSource: negative duration");
}

SignalSource SignalSource::delayed(double offset_s, Evaluator fill) const {
  if (!(offset_s >= 0.0)) throw std::invalid_argument("SignalSource::delayed: negative offset");
  auto inner = eval_;
  auto before = fill ? std::move(fill) : Evaluator([](int, double) { return 0.0; });
  return SignalSource(
      [inner, before, offset_s](int c, double t) { return t < offset_s ? before(c, t) : inner(c, t - offset_s); },
      duration_s_ + offset_s, description_);
}

}  // namespace safe
