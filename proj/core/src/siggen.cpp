#include "safe/siggen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace safe {

void DacModel::validate() const {
  if (!(dac_step_v > 0.0) || !std::isfinite(dac_step_v)) throw std::invalid_argument("dac_step_v must be positive");
  if (!(divider_ratio > 0.0) || !std::isfinite(divider_ratio))
    throw std::invalid_argument("divider_ratio must be positive");
}

DacModel DacModel::from_config(const KeyValueConfig& cfg, const DacModel& base, std::string_view prefix) {
  const std::string p(prefix);
  DacModel d = base;
  d.dac_step_v = cfg.get_double(p + "dac_step_v", d.dac_step_v);
  d.divider_ratio = cfg.get_double(p + "divider_ratio", d.divider_ratio);
  return d;
}

SignalSource gen_sinusoid(double amplitude_uv, double freq_hz, const DacModel& dac, double duration_s,
                          double phase_rad) {
  dac.validate();
  if (!(amplitude_uv >= 0.0) || !std::isfinite(amplitude_uv))
    throw std::invalid_argument("gen_sinusoid: amplitude must be non-negative");
  if (!(freq_hz > 0.0) || !std::isfinite(freq_hz)) throw std::invalid_argument("gen_sinusoid: frequency must be positive");
  if (!(duration_s >= 0.0)) throw std::invalid_argument("gen_sinusoid: negative duration");

  const double generator_amplitude_v = amplitude_uv * 1e-6 * dac.divider_ratio;
  const double step_v = dac.dac_step_v;
  const double ratio = dac.divider_ratio;
  const double w = 2.0 * std::numbers::pi * freq_hz;
  auto eval = [=](int, double t) {
    const double v = generator_amplitude_v * std::sin(w * t + phase_rad);
    const double q = std::round(v / step_v) * step_v;
    return q / ratio * 1e6;
  };
  return SignalSource(eval, duration_s,
                      "sine amplitude_uv=" + format_double(amplitude_uv) + " freq_hz=" + format_double(freq_hz));
}

SignalSource analytic_sinusoid(double amplitude_uv, double freq_hz, double duration_s, double phase_rad) {
  const double w = 2.0 * std::numbers::pi * freq_hz;
  return SignalSource([=](int, double t) { return amplitude_uv * std::sin(w * t + phase_rad); }, duration_s,
                      "analytic sine amplitude_uv=" + format_double(amplitude_uv) +
                          " freq_hz=" + format_double(freq_hz));
}

std::vector<double> sweep_frequencies() {
  std::vector<double> out;
  for (int f = 10; f <= 190; f += 10) {
    if (f % 50 == 0) continue;
    out.push_back(f);
  }
  return out;
}

std::vector<double> sweep_amplitudes() {
  std::vector<double> out;
  for (int a = 10; a <= 100; a += 10) out.push_back(a);
  return out;
}

void VepTemplate::validate() const {
  if (!(peak_time_ms > 0.0 && peak_time_ms < kWindowMs))
    throw std::invalid_argument("VepTemplate: peak_time_ms must be in (0, 200)");
  if (!(peak_to_peak_uv > 0.0) || !std::isfinite(peak_to_peak_uv))
    throw std::invalid_argument("VepTemplate: peak_to_peak_uv must be positive");
}

double VepTemplate::lobe_half_width_ms() const {
  return std::min({35.0, peak_time_ms, (kWindowMs - peak_time_ms) / 3.0});
}

double VepTemplate::operator()(double latency_ms) const {
  if (latency_ms < 0.0 || latency_ms > kWindowMs) return 0.0;
  const double w = lobe_half_width_ms();
  auto lobe = [w](double dt) { return std::abs(dt) < w ? 0.5 * (1.0 + std::cos(std::numbers::pi * dt / w)) : 0.0; };
  const double up = kPositiveShare * peak_to_peak_uv;
  const double down = (1.0 - kPositiveShare) * peak_to_peak_uv;
  return up * lobe(latency_ms - peak_time_ms) - down * lobe(latency_ms - trough_time_ms());
}

SignalSource::Evaluator background_noise(double sigma_uv, std::uint64_t seed) {
  if (!(sigma_uv >= 0.0)) throw std::invalid_argument("background_noise: negative sigma");
  if (sigma_uv == 0.0) return [](int, double) { return 0.0; };
  constexpr double kCellRate = 8192.0;
  return [sigma_uv, seed](int c, double t) {
    const auto cell = static_cast<std::int64_t>(std::floor(t * kCellRate));
    const std::uint64_t key = derive_seed(seed, static_cast<std::uint64_t>(c));
    return sigma_uv * hashed_normal(key, static_cast<std::uint64_t>(cell));
  };
}

VepSession gen_vep_session(const VepTemplate& tmpl, double flash_rate_hz, double duration_s,
                           double background_sigma_uv, std::uint64_t seed, std::vector<double> channel_gains) {
  tmpl.validate();
  if (!(flash_rate_hz > 0.0)) throw std::invalid_argument("gen_vep_session: flash rate must be positive");
  if (!(duration_s > 0.0)) throw std::invalid_argument("gen_vep_session: duration must be positive");
  if (!(flash_rate_hz * VepTemplate::kWindowMs * 1e-3 < 1.0))
    throw std::invalid_argument("gen_vep_session: flash rate makes response windows overlap");

  const auto n = static_cast<std::int64_t>(std::floor(duration_s * flash_rate_hz * (1.0 + 1e-12)));
  VepSession session;
  session.flash_times_s.reserve(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) session.flash_times_s.push_back(static_cast<double>(k) / flash_rate_hz);

  auto background = background_noise(background_sigma_uv, seed);
  auto eval = [tmpl, flash_rate_hz, n, background, gains = std::move(channel_gains)](int c, double t) {
    double v = background(c, t);
    // Responses last 200 ms and flashes are > 200 ms apart, so at most the
    // latest flash at or before t can contribute.
    const auto k = static_cast<std::int64_t>(std::floor(t * flash_rate_hz));
    for (std::int64_t j = std::max<std::int64_t>(0, k - 1); j <= std::min(k, n - 1); ++j) {
      const double latency_ms = (t - static_cast<double>(j) / flash_rate_hz) * 1e3;
      const double gain = static_cast<std::size_t>(c) < gains.size() ? gains[static_cast<std::size_t>(c)] : 1.0;
      v += gain * tmpl(latency_ms);
    }
    return v;
  };
  session.source = SignalSource(eval, duration_s,
                                "vep peak_time_ms=" + format_double(tmpl.peak_time_ms) +
                                    " peak_to_peak_uv=" + format_double(tmpl.peak_to_peak_uv) +
                                    " flash_rate_hz=" + format_double(flash_rate_hz));
  return session;
}

}  // namespace safe
