#include "safe/sine_fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "safe/errors.hpp"

namespace safe {

SineEpochs epoch_sine(const ContiguousRecord& record, int channel, double freq_hz, const DeviceSpec& spec,
                      std::int64_t max_epochs) {
  if (!(freq_hz > 0.0)) throw std::invalid_argument("epoch_sine: frequency must be positive");
  if (channel < 0 || channel >= record.channel_count()) throw std::out_of_range("epoch_sine: channel out of range");
  const double period = spec.sample_rate_hz / freq_hz;
  const auto data = record.channel(channel);

  SineEpochs out;
  for (std::int64_t k = 0;; ++k) {
    const auto begin = static_cast<std::int64_t>(std::llround(static_cast<double>(k) * period));
    const auto end = static_cast<std::int64_t>(std::llround(static_cast<double>(k + 1) * period));
    if (end > record.total_frames()) break;
    ++out.total_periods;
    if (record.overlaps_gap(begin, end)) continue;
    ++out.clean_available;
    if (max_epochs > 0 && static_cast<std::int64_t>(out.epochs.size()) >= max_epochs) continue;
    Epoch e;
    e.start_frame = begin;
    e.values.assign(data.begin() + begin, data.begin() + end);
    out.epochs.push_back(std::move(e));
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty sample");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::vector<Epoch> reject_artifacts(std::span<const Epoch> epochs, double k_mad) {
  if (epochs.size() < 8) throw std::invalid_argument("reject_artifacts: need at least 8 epochs");
  if (!(k_mad > 0.0)) throw std::invalid_argument("reject_artifacts: k_mad must be positive");

  std::vector<double> peaks;
  peaks.reserve(epochs.size());
  for (const auto& e : epochs) {
    double p = 0.0;
    for (double v : e.values) p = std::max(p, std::abs(v));
    peaks.push_back(p);
  }
  const double med = median(peaks);
  std::vector<double> dev;
  dev.reserve(peaks.size());
  for (double p : peaks) dev.push_back(std::abs(p - med));
  const double threshold = med + k_mad * median(dev);

  std::vector<Epoch> kept;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (!epochs[i].clean) continue;
    if (peaks[i] <= threshold) kept.push_back(epochs[i]);
  }
  if (kept.empty()) throw AnalysisError("reject_artifacts: every epoch was rejected");
  return kept;
}

double sine_residual_ss(std::span<const double> values, double t0_s, double amplitude_uv, double freq_hz,
                        double sample_rate_hz, double phase_rad) {
  const double w = 2.0 * std::numbers::pi * freq_hz;
  double ss = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double t = t0_s + static_cast<double>(i) / sample_rate_hz;
    const double r = values[i] - amplitude_uv * std::sin(w * t + phase_rad);
    ss += r * r;
  }
  return ss;
}

namespace {

double wrap_phase(double phi) {
  phi = std::remainder(phi, 2.0 * std::numbers::pi);
  if (phi <= -std::numbers::pi) phi += 2.0 * std::numbers::pi;
  return phi;
}

}  // namespace

SineFitResult fit_sine_phase(std::span<const double> values, double t0_s, double amplitude_uv, double freq_hz,
                             double sample_rate_hz) {
  if (values.empty()) throw std::invalid_argument("fit_sine_phase: empty epoch");
  const double w = 2.0 * std::numbers::pi * freq_hz;

  // With s_i = sin(w t_i), c_i = cos(w t_i) the model is
  // A (cos(phi) s_i + sin(phi) c_i), so
  //   SS(phi) = yy - 2A (P cos + Q sin) + A^2 (Sss cos^2 + 2 Ssc sin cos + Scc sin^2).
  double P = 0, Q = 0, Sss = 0, Scc = 0, Ssc = 0, yy = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double t = t0_s + static_cast<double>(i) / sample_rate_hz;
    const double s = std::sin(w * t);
    const double c = std::cos(w * t);
    const double y = values[i];
    P += y * s;
    Q += y * c;
    Sss += s * s;
    Scc += c * c;
    Ssc += s * c;
    yy += y * y;
  }
  const double A = amplitude_uv;
  auto ss = [&](double phi) {
    const double cp = std::cos(phi), sp = std::sin(phi);
    return yy - 2.0 * A * (P * cp + Q * sp) + A * A * (Sss * cp * cp + 2.0 * Ssc * sp * cp + Scc * sp * sp);
  };
  auto d1 = [&](double phi) {
    const double cp = std::cos(phi), sp = std::sin(phi);
    return -2.0 * A * (Q * cp - P * sp) + A * A * ((Scc - Sss) * 2.0 * sp * cp + 2.0 * Ssc * (cp * cp - sp * sp));
  };
  auto d2 = [&](double phi) {
    const double cp = std::cos(phi), sp = std::sin(phi);
    return 2.0 * A * (P * cp + Q * sp) +
           A * A * (2.0 * (Scc - Sss) * (cp * cp - sp * sp) - 8.0 * Ssc * sp * cp);
  };

  double best = 0.0;
  if (A != 0.0) {
    // SS(phi) is a degree-2 trigonometric polynomial: at most two minima.
    // A 64-point scan brackets the global one; Newton polishes it.
    constexpr int kScan = 64;
    double best_ss = INFINITY;
    for (int k = 0; k < kScan; ++k) {
      const double phi = -std::numbers::pi + 2.0 * std::numbers::pi * k / kScan;
      const double v = ss(phi);
      if (v < best_ss) {
        best_ss = v;
        best = phi;
      }
    }
    // The global minimum lies within one scan step of the best scan point.
    const double h = 2.0 * std::numbers::pi / kScan;
    double lo = best - h, hi = best + h;
    double phi = best;
    for (int it = 0; it < 50; ++it) {
      const double g = d1(phi);
      const double c = d2(phi);
      double next = c > 0.0 ? phi - g / c : (g > 0.0 ? lo : hi);
      if (g > 0.0) hi = phi; else lo = phi;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - phi) < 1e-14) {
        phi = next;
        break;
      }
      phi = next;
    }
    if (ss(phi) <= best_ss) best = phi;
  }
  const double residual = std::max(0.0, sine_residual_ss(values, t0_s, A, freq_hz, sample_rate_hz, best));
  return {wrap_phase(best), std::sqrt(residual / static_cast<double>(values.size()))};
}

SineFitResult fit_sine_phase(const Epoch& epoch, double amplitude_uv, double freq_hz, const DeviceSpec& spec) {
  if (!epoch.clean) throw std::invalid_argument("fit_sine_phase: epoch is not clean");
  return fit_sine_phase(epoch.values, static_cast<double>(epoch.start_frame) / spec.sample_rate_hz, amplitude_uv,
                        freq_hz, spec.sample_rate_hz);
}

}  // namespace safe
