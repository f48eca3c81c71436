#include "safe/triggering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "safe/errors.hpp"

namespace safe {

std::string_view to_string(LabelMode mode) noexcept {
  return mode == LabelMode::SampleAccurate ? "sample" : "packet";
}

LabelMode label_mode_from_string(std::string_view text) {
  if (text == "sample") return LabelMode::SampleAccurate;
  if (text == "packet") return LabelMode::PacketGranular;
  throw FormatError("unknown trigger label mode '" + std::string(text) + "'");
}

std::int64_t TriggerEvent::anchor_frame(const DeviceSpec& spec) const {
  if (mode == LabelMode::SampleAccurate) return label;
  return (label + 1) * spec.frames_per_packet;
}

namespace {

void check_time(double t) {
  if (!std::isfinite(t) || t < 0.0) throw std::invalid_argument("trigger time must be finite and non-negative");
}

double frame_position(double t, const DeviceSpec& spec) { return t * spec.sample_rate_hz; }

}  // namespace

std::vector<TriggerEvent> label_sample_accurate(std::span<const double> times_s, const DeviceSpec& spec) {
  spec.validate();
  std::vector<TriggerEvent> out;
  out.reserve(times_s.size());
  for (double t : times_s) {
    check_time(t);
    out.push_back({t, LabelMode::SampleAccurate, static_cast<std::int64_t>(std::round(frame_position(t, spec)))});
  }
  return out;
}

std::vector<TriggerEvent> label_packet_granular(std::span<const double> times_s, const DeviceSpec& spec) {
  spec.validate();
  std::vector<TriggerEvent> out;
  out.reserve(times_s.size());
  for (double t : times_s) {
    check_time(t);
    const auto seq = static_cast<std::int64_t>(std::floor(frame_position(t, spec) / spec.frames_per_packet));
    out.push_back({t, LabelMode::PacketGranular, seq});
  }
  return out;
}

std::vector<double> jitter_triggers(std::span<const double> times_s, double range_ms, std::uint64_t seed) {
  if (!(range_ms >= 0.0)) throw std::invalid_argument("jitter_triggers: range must be non-negative");
  RandomStream rng(seed);
  std::vector<double> out;
  out.reserve(times_s.size());
  for (double t : times_s) out.push_back(t + rng.uniform() * range_ms * 1e-3);
  return out;
}

void flag_trigger_packets(std::span<Packet> packets, std::span<const TriggerEvent> triggers, const DeviceSpec& spec) {
  std::vector<std::int64_t> seqs;
  seqs.reserve(triggers.size());
  for (const auto& t : triggers)
    seqs.push_back(static_cast<std::int64_t>(std::floor(frame_position(t.true_time_s, spec) / spec.frames_per_packet)));
  std::sort(seqs.begin(), seqs.end());
  for (auto& p : packets) p.trigger_flag = std::binary_search(seqs.begin(), seqs.end(), static_cast<std::int64_t>(p.seq));
}

void write_trigger_file(const std::filesystem::path& path, std::span<const TriggerEvent> triggers) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open trigger file for writing: " + path.string());
  const LabelMode mode = triggers.empty() ? LabelMode::SampleAccurate : triggers.front().mode;
  f << "# label_mode=" << to_string(mode) << "\n";
  for (const auto& t : triggers) {
    if (t.mode != mode) throw std::invalid_argument("write_trigger_file: mixed label modes");
    f << format_double(t.true_time_s) << "," << t.label << "\n";
  }
  if (!f) throw IoError("failed writing trigger file: " + path.string());
}

std::vector<TriggerEvent> read_trigger_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open trigger file: " + path.string());
  std::string line;
  if (!std::getline(f, line) || line.rfind("# label_mode=", 0) != 0)
    throw MalformedHeaderError(path.string() + ": missing '# label_mode=' header");
  const LabelMode mode = label_mode_from_string(trim(std::string_view(line).substr(13)));
  std::vector<TriggerEvent> out;
  long row = 1;
  while (std::getline(f, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw RaggedRowError(path.string() + ": row " + std::to_string(row) + " does not have two columns", row);
    auto t = parse_double(std::string_view(line).substr(0, comma));
    auto label = parse_int(std::string_view(line).substr(comma + 1));
    if (!t || !label) throw FormatError(path.string() + ": row " + std::to_string(row) + " is not numeric");
    out.push_back({*t, mode, *label});
  }
  return out;
}

}  // namespace safe
