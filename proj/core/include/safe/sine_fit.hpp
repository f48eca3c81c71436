#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "safe/device.hpp"
#include "safe/transport.hpp"

namespace safe {

struct Epoch {
  std::vector<double> values;
  std::int64_t start_frame = 0;
  bool clean = true;
};

struct SineEpochs {
  std::vector<Epoch> epochs;     // first `max_epochs` clean epochs
  std::int64_t clean_available = 0;  // clean epochs in the whole record
  std::int64_t total_periods = 0;    // complete periods in the record
};

// Epoch k spans frames [round(k fs / f), round((k + 1) fs / f)). Epochs
// touching a gap are unclean and skipped. `max_epochs` <= 0 means no limit.
SineEpochs epoch_sine(const ContiguousRecord& record, int channel, double freq_hz, const DeviceSpec& spec,
                      std::int64_t max_epochs = 200);

// Rejects epochs whose peak |value| exceeds median + k_mad * MAD of the
// peaks. Throws AnalysisError if nothing survives.
std::vector<Epoch> reject_artifacts(std::span<const Epoch> epochs, double k_mad = 5.0);

struct SineFitResult {
  double phase_rad = 0.0;  // in (-pi, pi]
  double rmse_uv = 0.0;
};

// Least-squares phase for A sin(2 pi f t + phase) with amplitude and
// frequency held at their delivered values; t is the absolute frame time.
SineFitResult fit_sine_phase(const Epoch& epoch, double amplitude_uv, double freq_hz, const DeviceSpec& spec);

// Lower-level form on raw samples: t_i = t0 + i / fs.
SineFitResult fit_sine_phase(std::span<const double> values, double t0_s, double amplitude_uv, double freq_hz,
                             double sample_rate_hz);

// Sum of squared residuals for a given phase; exposed for oracles.
double sine_residual_ss(std::span<const double> values, double t0_s, double amplitude_uv, double freq_hz,
                        double sample_rate_hz, double phase_rad);

double median(std::vector<double> values);

}  // namespace safe
