#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "safe/device.hpp"

namespace safe {

// A batch of consecutive frames sent as one BLE notification.
struct Packet {
  std::uint32_t seq = 0;
  std::uint32_t first_frame_index = 0;
  std::vector<SampleFrame> frames;
  bool trigger_flag = false;

  bool operator==(const Packet&) const = default;
};

// Half-open interval of frame indices [begin, end).
struct FrameGap {
  std::int64_t begin = 0;
  std::int64_t end = 0;

  std::int64_t size() const noexcept { return end - begin; }
  bool contains(std::int64_t frame) const noexcept { return frame >= begin && frame < end; }
  bool overlaps(std::int64_t lo, std::int64_t hi) const noexcept { return begin < hi && lo < end; }
  bool operator==(const FrameGap&) const = default;
};

// Receiver-side time series on the global frame axis. Frames inside a gap
// are absent: their slots hold 0.0 but `present(frame)` is false and no
// analysis reads them.
class ContiguousRecord {
 public:
  ContiguousRecord() = default;
  ContiguousRecord(int channel_count, std::int64_t total_frames);

  int channel_count() const noexcept { return static_cast<int>(channels_.size()); }
  std::int64_t total_frames() const noexcept { return total_frames_; }

  bool present(std::int64_t frame) const { return present_[static_cast<std::size_t>(frame)] != 0; }
  std::span<const double> channel(int c) const { return channels_[static_cast<std::size_t>(c)]; }
  std::span<double> channel(int c) { return channels_[static_cast<std::size_t>(c)]; }
  double value(int c, std::int64_t frame) const {
    return channels_[static_cast<std::size_t>(c)][static_cast<std::size_t>(frame)];
  }

  const std::vector<FrameGap>& gaps() const noexcept { return gaps_; }
  std::int64_t frames_in_gaps() const noexcept;
  bool overlaps_gap(std::int64_t lo, std::int64_t hi) const;

  // Writes a received frame. The frame must not lie inside an existing gap.
  void set_frame(const SampleFrame& frame);
  // Marks [begin, end) absent and appends it to the gap list. Gaps must be
  // added in ascending order and must not overlap.
  void add_gap(FrameGap gap);
  // Marks [begin, end) absent, merging with any gap list order.
  void mark_absent(FrameGap gap);

  // Maximal runs of present frames.
  std::vector<FrameGap> present_segments() const;

  bool operator==(const ContiguousRecord&) const = default;

 private:
  std::int64_t total_frames_ = 0;
  std::vector<std::vector<double>> channels_;
  std::vector<std::uint8_t> present_;
  std::vector<FrameGap> gaps_;
};

struct PacketLossReport {
  std::int64_t expected = 0;
  std::int64_t received = 0;
  double fraction_received = 0.0;
};

// Splits contiguous frames (indices 0..n-1) into ceil(n / frames_per_packet)
// packets; only the last packet can be short.
std::vector<Packet> packetize(std::span<const SampleFrame> frames, const DeviceSpec& spec);

// i.i.d. Bernoulli loss per packet. Order is preserved.
std::vector<Packet> transmit(std::span<const Packet> packets, double loss_probability, std::uint64_t seed);

// Places received packets on the frame axis. Each missing sequence number
// becomes its own gap interval; adjacent lost packets are not merged.
ContiguousRecord reassemble(std::span<const Packet> received, const DeviceSpec& spec, std::int64_t total_frames);

PacketLossReport loss_stats(std::span<const Packet> received, std::int64_t expected);

std::int64_t packet_count_for(std::int64_t total_frames, const DeviceSpec& spec);

// Incremental form of `reassemble` for a consumer fed one packet at a time.
class StreamReassembler {
 public:
  StreamReassembler(const DeviceSpec& spec, std::int64_t total_frames);

  void push(const Packet& packet);
  std::int64_t received() const noexcept { return received_; }
  // Closes the stream: every sequence number not yet seen becomes a gap.
  ContiguousRecord finish() &&;

 private:
  DeviceSpec spec_;
  ContiguousRecord record_;
  std::int64_t next_seq_ = 0;
  std::int64_t expected_packets_ = 0;
  std::int64_t received_ = 0;
};

// Unbounded FIFO connecting a packet producer to a consumer thread.
class PacketChannel {
 public:
  void send(Packet packet);
  void close();
  // Blocks until a packet is available; nullopt once closed and drained.
  std::optional<Packet> receive();

 private:
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<Packet> queue_;
  bool closed_ = false;
};

// Binary packet layout, little-endian, version 1:
//   u32 seq, u32 first_frame_index, u8 trigger_flag, u8 frame_count,
//   frame_count * channel_count i16 ADC codes (frame-major).
inline constexpr std::uint16_t kPacketFormatVersion = 1;

std::vector<std::byte> encode_packet(const Packet& packet, const DeviceSpec& spec);
// Decodes one packet from the front of `bytes`; `consumed` receives its size.
Packet decode_packet(std::span<const std::byte> bytes, const DeviceSpec& spec, std::size_t* consumed = nullptr);

// Capture file: magic "SFPK", u16 version, u16 channel_count,
// u32 frames_per_packet, f64 sample_rate_hz, f64 adc_step_uv, then packets.
void write_capture(const std::filesystem::path& path, std::span<const Packet> packets, const DeviceSpec& spec);
std::vector<Packet> read_capture(const std::filesystem::path& path, DeviceSpec& spec);

}  // namespace safe
