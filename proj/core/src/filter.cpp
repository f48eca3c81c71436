#include "safe/filter.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace safe {

SosCascade butterworth_highpass(int order, double cutoff_hz, double sample_rate_hz) {
  if (order < 2 || order % 2 != 0) throw std::invalid_argument("butterworth_highpass: order must be even and >= 2");
  if (!(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0))
    throw std::invalid_argument("butterworth_highpass: cutoff must be in (0, Nyquist)");

  const double fs2 = 2.0 * sample_rate_hz;
  const double warped = fs2 * std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
  SosCascade sos;
  for (int k = 0; k < order / 2; ++k) {
    // Low-pass prototype pole in the upper-left quadrant.
    const double theta = std::numbers::pi * (2.0 * k + 1.0 + order) / (2.0 * order);
    const std::complex<double> proto(std::cos(theta), std::sin(theta));
    // LP -> HP: s -> wc / s, zeros move to s = 0 (z = 1).
    const std::complex<double> s_pole = warped / proto;
    const std::complex<double> z_pole = (fs2 + s_pole) / (fs2 - s_pole);
    Biquad q;
    q.a1 = -2.0 * z_pole.real();
    q.a2 = std::norm(z_pole);
    // Unit gain at Nyquist (z = -1): numerator (1 - z^-1)^2 = 4 there.
    const double gain = (1.0 - q.a1 + q.a2) / 4.0;
    q.b0 = gain;
    q.b1 = -2.0 * gain;
    q.b2 = gain;
    sos.push_back(q);
  }
  return sos;
}

double magnitude_response(const SosCascade& sos, double freq_hz, double sample_rate_hz) {
  const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
  const std::complex<double> zi = std::polar(1.0, -w);
  std::complex<double> h = 1.0;
  for (const auto& q : sos) h *= (q.b0 + q.b1 * zi + q.b2 * zi * zi) / (1.0 + q.a1 * zi + q.a2 * zi * zi);
  return std::abs(h);
}

namespace {

// Transposed direct form II state for each section.
struct SectionState {
  double z1 = 0, z2 = 0;
};

// Step-response steady state of each section, scaled by the DC gain of the
// sections before it.
std::vector<SectionState> steady_state(const SosCascade& sos, double input_level) {
  std::vector<SectionState> zi(sos.size());
  double level = input_level;
  for (std::size_t i = 0; i < sos.size(); ++i) {
    const auto& q = sos[i];
    const double dc = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    const double y = dc * level;
    zi[i].z2 = q.b2 * level - q.a2 * y;
    zi[i].z1 = q.b1 * level - q.a1 * y + zi[i].z2;
    level = y;
  }
  return zi;
}

void run_cascade(const SosCascade& sos, std::vector<SectionState> state, std::vector<double>& x) {
  for (double& v : x) {
    double s = v;
    for (std::size_t i = 0; i < sos.size(); ++i) {
      const auto& q = sos[i];
      auto& z = state[i];
      const double y = q.b0 * s + z.z1;
      z.z1 = q.b1 * s - q.a1 * y + z.z2;
      z.z2 = q.b2 * s - q.a2 * y;
      s = y;
    }
    v = s;
  }
}

}  // namespace

std::vector<double> filtfilt(const SosCascade& sos, std::span<const double> x, std::size_t pad_len) {
  if (x.empty()) return {};
  pad_len = std::min(pad_len, x.size() - 1);
  const std::size_t n = x.size();
  std::vector<double> ext;
  ext.reserve(n + 2 * pad_len);
  for (std::size_t i = pad_len; i >= 1; --i) ext.push_back(x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad_len; ++i) ext.push_back(x[n - 1 - i]);

  run_cascade(sos, steady_state(sos, ext.front()), ext);
  std::reverse(ext.begin(), ext.end());
  run_cascade(sos, steady_state(sos, ext.front()), ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad_len), ext.begin() + static_cast<std::ptrdiff_t>(pad_len + n)};
}

ContiguousRecord highpass(const ContiguousRecord& record, double cutoff_hz, double sample_rate_hz,
                          const HighpassOptions& options) {
  const auto sos = butterworth_highpass(options.order, cutoff_hz, sample_rate_hz);
  const double period_frames = sample_rate_hz / cutoff_hz;
  const auto min_len = static_cast<std::int64_t>(std::ceil(options.min_segment_periods * period_frames));
  const auto pad = static_cast<std::size_t>(std::ceil(options.pad_periods * period_frames));

  ContiguousRecord out = record;
  for (const auto& seg : record.present_segments()) {
    if (seg.size() < min_len) {
      out.mark_absent(seg);
      continue;
    }
    for (int c = 0; c < record.channel_count(); ++c) {
      auto in = record.channel(c).subspan(static_cast<std::size_t>(seg.begin), static_cast<std::size_t>(seg.size()));
      auto y = filtfilt(sos, in, pad);
      std::copy(y.begin(), y.end(), out.channel(c).begin() + seg.begin);
    }
  }
  return out;
}

}  // namespace safe
