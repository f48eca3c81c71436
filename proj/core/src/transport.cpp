#include "safe/transport.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "safe/errors.hpp"

namespace safe {

ContiguousRecord::ContiguousRecord(int channel_count, std::int64_t total_frames)
    : total_frames_(total_frames),
      channels_(static_cast<std::size_t>(channel_count), std::vector<double>(static_cast<std::size_t>(total_frames), 0.0)),
      present_(static_cast<std::size_t>(total_frames), 1) {
  if (channel_count < 1) throw std::invalid_argument("ContiguousRecord: channel_count must be positive");
  if (total_frames < 0) throw std::invalid_argument("ContiguousRecord: negative frame count");
}

std::int64_t ContiguousRecord::frames_in_gaps() const noexcept {
  std::int64_t n = 0;
  for (const auto& g : gaps_) n += g.size();
  return n;
}

bool ContiguousRecord::overlaps_gap(std::int64_t lo, std::int64_t hi) const {
  auto it = std::lower_bound(gaps_.begin(), gaps_.end(), lo,
                             [](const FrameGap& g, std::int64_t v) { return g.end <= v; });
  return it != gaps_.end() && it->overlaps(lo, hi);
}

void ContiguousRecord::set_frame(const SampleFrame& frame) {
  if (frame.frame_index < 0 || frame.frame_index >= total_frames_)
    throw std::out_of_range("frame index " + std::to_string(frame.frame_index) + " outside record");
  if (frame.channel_values_uv.size() != channels_.size())
    throw std::invalid_argument("frame channel count does not match record");
  const auto i = static_cast<std::size_t>(frame.frame_index);
  if (!present_[i]) throw std::logic_error("set_frame: frame lies inside a gap");
  for (std::size_t c = 0; c < channels_.size(); ++c) channels_[c][i] = frame.channel_values_uv[c];
}

void ContiguousRecord::add_gap(FrameGap gap) {
  if (gap.begin < 0 || gap.end > total_frames_ || gap.begin >= gap.end)
    throw std::out_of_range("add_gap: interval outside record");
  if (!gaps_.empty() && gap.begin < gaps_.back().end) throw std::logic_error("add_gap: gaps must be ascending");
  for (auto i = gap.begin; i < gap.end; ++i) {
    present_[static_cast<std::size_t>(i)] = 0;
    for (auto& ch : channels_) ch[static_cast<std::size_t>(i)] = 0.0;
  }
  gaps_.push_back(gap);
}

void ContiguousRecord::mark_absent(FrameGap gap) {
  if (gap.begin < 0 || gap.end > total_frames_ || gap.begin >= gap.end)
    throw std::out_of_range("mark_absent: interval outside record");
  for (auto i = gap.begin; i < gap.end; ++i) {
    present_[static_cast<std::size_t>(i)] = 0;
    for (auto& ch : channels_) ch[static_cast<std::size_t>(i)] = 0.0;
  }
  // Keep per-packet gaps intact; only the new span is inserted, split
  // around intervals already listed.
  std::vector<FrameGap> merged;
  merged.reserve(gaps_.size() + 1);
  std::int64_t cursor = gap.begin;
  for (const auto& g : gaps_) {
    if (g.end <= cursor || g.begin >= gap.end) {
      merged.push_back(g);
      continue;
    }
    if (g.begin > cursor) merged.push_back({cursor, g.begin});
    merged.push_back(g);
    cursor = std::max(cursor, g.end);
  }
  if (cursor < gap.end) merged.push_back({cursor, gap.end});
  std::sort(merged.begin(), merged.end(), [](const FrameGap& a, const FrameGap& b) { return a.begin < b.begin; });
  gaps_ = std::move(merged);
}

std::vector<FrameGap> ContiguousRecord::present_segments() const {
  std::vector<FrameGap> out;
  std::int64_t i = 0;
  while (i < total_frames_) {
    if (!present_[static_cast<std::size_t>(i)]) {
      ++i;
      continue;
    }
    std::int64_t j = i;
    while (j < total_frames_ && present_[static_cast<std::size_t>(j)]) ++j;
    out.push_back({i, j});
    i = j;
  }
  return out;
}

std::int64_t packet_count_for(std::int64_t total_frames, const DeviceSpec& spec) {
  return (total_frames + spec.frames_per_packet - 1) / spec.frames_per_packet;
}

std::vector<Packet> packetize(std::span<const SampleFrame> frames, const DeviceSpec& spec) {
  spec.validate();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].frame_index != static_cast<std::int64_t>(i))
      throw std::invalid_argument("packetize: frames are not contiguous from 0 (index " + std::to_string(i) + ")");
  }
  const auto fpp = static_cast<std::size_t>(spec.frames_per_packet);
  std::vector<Packet> packets;
  packets.reserve((frames.size() + fpp - 1) / fpp);
  for (std::size_t start = 0; start < frames.size(); start += fpp) {
    Packet p;
    p.seq = static_cast<std::uint32_t>(start / fpp);
    p.first_frame_index = static_cast<std::uint32_t>(start);
    const auto end = std::min(frames.size(), start + fpp);
    p.frames.assign(frames.begin() + static_cast<std::ptrdiff_t>(start), frames.begin() + static_cast<std::ptrdiff_t>(end));
    packets.push_back(std::move(p));
  }
  return packets;
}

std::vector<Packet> transmit(std::span<const Packet> packets, double loss_probability, std::uint64_t seed) {
  if (!(loss_probability >= 0.0 && loss_probability <= 1.0))
    throw std::invalid_argument("transmit: loss probability must be in [0, 1]");
  RandomStream rng(seed);
  std::vector<Packet> out;
  out.reserve(packets.size());
  for (const auto& p : packets) {
    // One draw per packet regardless of p keeps loss patterns nested across rates.
    const bool lost = rng.uniform() < loss_probability;
    if (!lost) out.push_back(p);
  }
  return out;
}

StreamReassembler::StreamReassembler(const DeviceSpec& spec, std::int64_t total_frames)
    : spec_(spec), record_(spec.channel_count, total_frames), expected_packets_(packet_count_for(total_frames, spec)) {}

void StreamReassembler::push(const Packet& packet) {
  const auto seq = static_cast<std::int64_t>(packet.seq);
  if (seq < next_seq_) {
    throw std::invalid_argument("reassemble: duplicate or out-of-order seq " + std::to_string(seq));
  }
  if (seq >= expected_packets_) throw std::out_of_range("reassemble: seq " + std::to_string(seq) + " beyond session");
  if (static_cast<std::int64_t>(packet.first_frame_index) != seq * spec_.frames_per_packet)
    throw std::invalid_argument("reassemble: packet " + std::to_string(seq) + " has inconsistent first_frame_index");
  for (; next_seq_ < seq; ++next_seq_) {
    const auto begin = next_seq_ * spec_.frames_per_packet;
    record_.add_gap({begin, std::min(begin + spec_.frames_per_packet, record_.total_frames())});
  }
  for (const auto& f : packet.frames) {
    if (f.frame_index >= record_.total_frames())
      throw std::out_of_range("reassemble: frame index " + std::to_string(f.frame_index) + " beyond total_frames");
    record_.set_frame(f);
  }
  next_seq_ = seq + 1;
  ++received_;
}

ContiguousRecord StreamReassembler::finish() && {
  for (; next_seq_ < expected_packets_; ++next_seq_) {
    const auto begin = next_seq_ * spec_.frames_per_packet;
    record_.add_gap({begin, std::min(begin + spec_.frames_per_packet, record_.total_frames())});
  }
  return std::move(record_);
}

ContiguousRecord reassemble(std::span<const Packet> received, const DeviceSpec& spec, std::int64_t total_frames) {
  spec.validate();
  StreamReassembler r(spec, total_frames);
  for (const auto& p : received) r.push(p);
  return std::move(r).finish();
}

PacketLossReport loss_stats(std::span<const Packet> received, std::int64_t expected) {
  if (expected <= 0) throw std::invalid_argument("loss_stats: expected packet count must be positive");
  const auto got = static_cast<std::int64_t>(received.size());
  if (got > expected) throw std::invalid_argument("loss_stats: received more packets than expected");
  return {expected, got, static_cast<double>(got) / static_cast<double>(expected)};
}

void PacketChannel::send(Packet packet) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) throw std::logic_error("PacketChannel: send after close");
    queue_.push_back(std::move(packet));
  }
  ready_.notify_one();
}

void PacketChannel::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  ready_.notify_all();
}

std::optional<Packet> PacketChannel::receive() {
  std::unique_lock lock(mutex_);
  ready_.wait(lock, [this] { return closed_ || !queue_.empty(); });
  if (queue_.empty()) return std::nullopt;
  Packet p = std::move(queue_.front());
  queue_.pop_front();
  return p;
}

namespace {

template <typename T>
void put_le(std::vector<std::byte>& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::byte>((u >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::span<const std::byte> in, std::size_t offset) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(std::to_integer<U>(in[offset + i]) << (8 * i));
  return static_cast<T>(u);
}

constexpr std::size_t kPacketHeaderBytes = 10;
constexpr char kCaptureMagic[4] = {'S', 'F', 'P', 'K'};
constexpr std::size_t kCaptureHeaderBytes = 4 + 2 + 2 + 4 + 8 + 8;

}  // namespace

std::vector<std::byte> encode_packet(const Packet& packet, const DeviceSpec& spec) {
  if (spec.adc_bits > 16) throw std::invalid_argument("encode_packet: codes wider than 16 bits");
  if (packet.frames.size() > 255) throw std::invalid_argument("encode_packet: more than 255 frames");
  std::vector<std::byte> out;
  out.reserve(kPacketHeaderBytes + packet.frames.size() * static_cast<std::size_t>(spec.channel_count) * 2);
  put_le<std::uint32_t>(out, packet.seq);
  put_le<std::uint32_t>(out, packet.first_frame_index);
  put_le<std::uint8_t>(out, packet.trigger_flag ? 1 : 0);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(packet.frames.size()));
  for (const auto& f : packet.frames) {
    if (f.channel_values_uv.size() != static_cast<std::size_t>(spec.channel_count))
      throw std::invalid_argument("encode_packet: frame channel count mismatch");
    for (double v : f.channel_values_uv) put_le<std::int16_t>(out, static_cast<std::int16_t>(adc_code(v, spec)));
  }
  return out;
}

Packet decode_packet(std::span<const std::byte> bytes, const DeviceSpec& spec, std::size_t* consumed) {
  if (bytes.size() < kPacketHeaderBytes) throw FormatError("decode_packet: truncated header");
  Packet p;
  p.seq = get_le<std::uint32_t>(bytes, 0);
  p.first_frame_index = get_le<std::uint32_t>(bytes, 4);
  const auto flag = get_le<std::uint8_t>(bytes, 8);
  if (flag > 1) throw FormatError("decode_packet: trigger flag must be 0 or 1");
  p.trigger_flag = flag == 1;
  const std::size_t n_frames = get_le<std::uint8_t>(bytes, 9);
  const auto channels = static_cast<std::size_t>(spec.channel_count);
  const std::size_t size = kPacketHeaderBytes + n_frames * channels * 2;
  if (bytes.size() < size) throw FormatError("decode_packet: truncated payload");
  std::size_t offset = kPacketHeaderBytes;
  p.frames.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    p.frames[i].frame_index = static_cast<std::int64_t>(p.first_frame_index) + static_cast<std::int64_t>(i);
    p.frames[i].channel_values_uv.resize(channels);
    for (std::size_t c = 0; c < channels; ++c, offset += 2)
      p.frames[i].channel_values_uv[c] = get_le<std::int16_t>(bytes, offset) * spec.adc_step_uv;
  }
  if (consumed) *consumed = size;
  return p;
}

void write_capture(const std::filesystem::path& path, std::span<const Packet> packets, const DeviceSpec& spec) {
  std::vector<std::byte> out;
  for (char ch : kCaptureMagic) out.push_back(static_cast<std::byte>(ch));
  put_le<std::uint16_t>(out, kPacketFormatVersion);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(spec.channel_count));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.frames_per_packet));
  put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(spec.sample_rate_hz));
  put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(spec.adc_step_uv));
  for (const auto& p : packets) {
    auto bytes = encode_packet(p, spec);
    out.insert(out.end(), bytes.begin(), bytes.end());
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open capture file for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing capture file: " + path.string());
}

std::vector<Packet> read_capture(const std::filesystem::path& path, DeviceSpec& spec) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open capture file: " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  std::span<const std::byte> bytes(reinterpret_cast<const std::byte*>(raw.data()), raw.size());
  if (bytes.size() < kCaptureHeaderBytes || std::memcmp(raw.data(), kCaptureMagic, 4) != 0)
    throw FormatError(path.string() + ": not a packet capture file");
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kPacketFormatVersion)
    throw UnknownVersionError(path.string() + ": unsupported capture version " + std::to_string(version));
  spec.channel_count = get_le<std::uint16_t>(bytes, 6);
  spec.frames_per_packet = static_cast<int>(get_le<std::uint32_t>(bytes, 8));
  spec.sample_rate_hz = std::bit_cast<double>(get_le<std::uint64_t>(bytes, 12));
  spec.adc_step_uv = std::bit_cast<double>(get_le<std::uint64_t>(bytes, 20));
  std::vector<Packet> packets;
  std::size_t offset = kCaptureHeaderBytes;
  while (offset < bytes.size()) {
    std::size_t used = 0;
    packets.push_back(decode_packet(bytes.subspan(offset), spec, &used));
    offset += used;
  }
  return packets;
}

}  // namespace safe
