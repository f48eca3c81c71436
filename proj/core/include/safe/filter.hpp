#pragma once

#include <span>
#include <vector>

#include "safe/transport.hpp"

namespace safe {

// One second-order section, a0 normalized to 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

using SosCascade = std::vector<Biquad>;

// Digital Butterworth high-pass of even `order`, designed by bilinear
// transform with a pre-warped cutoff.
SosCascade butterworth_highpass(int order, double cutoff_hz, double sample_rate_hz);

// |H(e^{jw})| of the cascade at `freq_hz` for a single forward pass.
double magnitude_response(const SosCascade& sos, double freq_hz, double sample_rate_hz);

// Forward-backward filtering with reflected (even) edge padding and
// steady-state initial conditions. Zero phase; the magnitude is squared.
std::vector<double> filtfilt(const SosCascade& sos, std::span<const double> x, std::size_t pad_len);

struct HighpassOptions {
  int order = 6;
  // Segments shorter than this many cutoff periods cannot settle and are
  // marked absent.
  double min_segment_periods = 1.0;
  // Edge padding, in cutoff periods (clipped to the segment length - 1).
  double pad_periods = 3.0;
};

// Filters each gap-free segment of every channel independently. Segments
// shorter than the warm-up length are marked absent and appended to the gap
// list, so downstream epochs see them like lost packets.
//
// Order 6 applied forward and backward gives >= 72 dB at cutoff / 2 and
// < 0.07 dB passband droop above 1.5 * cutoff.
ContiguousRecord highpass(const ContiguousRecord& record, double cutoff_hz, double sample_rate_hz,
                          const HighpassOptions& options = {});

}  // namespace safe
