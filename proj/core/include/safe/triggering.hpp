#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "safe/device.hpp"
#include "safe/transport.hpp"

namespace safe {

enum class LabelMode { SampleAccurate, PacketGranular };

std::string_view to_string(LabelMode mode) noexcept;
LabelMode label_mode_from_string(std::string_view text);

// A stimulus onset as one recording arm knows it.
//
// SampleAccurate: `label` is the nearest sample, round(t * fs).
// PacketGranular: `label` is the packet in flight at t, floor(t * fs / fpp).
struct TriggerEvent {
  double true_time_s = 0.0;
  LabelMode mode = LabelMode::SampleAccurate;
  std::int64_t label = 0;

  // Frame an epoch is centred on. Packet-granular triggers anchor at the
  // end of their packet (first frame of seq + 1), so the anchor trails the
  // true onset by (0, fpp] frames, the same direction as the reference
  // arm's 0-40 ms trigger jitter.
  std::int64_t anchor_frame(const DeviceSpec& spec) const;

  bool operator==(const TriggerEvent&) const = default;
};

std::vector<TriggerEvent> label_sample_accurate(std::span<const double> times_s, const DeviceSpec& spec);
std::vector<TriggerEvent> label_packet_granular(std::span<const double> times_s, const DeviceSpec& spec);

// Delays every time by an independent U[0, range_ms) draw.
std::vector<double> jitter_triggers(std::span<const double> times_s, double range_ms, std::uint64_t seed);

// Sets trigger_flag on each packet whose half-open frame span
// [seq * fpp, (seq + 1) * fpp) contains a trigger timestamp. Merging is by
// timestamp only, so the order in which the two streams arrived does not matter.
void flag_trigger_packets(std::span<Packet> packets, std::span<const TriggerEvent> triggers, const DeviceSpec& spec);

// Two-column text file "true_time_s,label" preceded by "# label_mode=<mode>".
void write_trigger_file(const std::filesystem::path& path, std::span<const TriggerEvent> triggers);
std::vector<TriggerEvent> read_trigger_file(const std::filesystem::path& path);

}  // namespace safe
