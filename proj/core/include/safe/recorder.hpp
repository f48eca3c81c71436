#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "safe/device.hpp"
#include "safe/transport.hpp"
#include "safe/triggering.hpp"

namespace safe {

struct SessionMetadata {
  std::uint64_t seed = 0;
  std::string source;
  std::string start_time = "1970-01-01T00:00:00Z";
  // Free-form annotations (experiment, preset, condition parameters).
  std::map<std::string, std::string> extra;

  bool operator==(const SessionMetadata&) const = default;
};

struct Recording {
  DeviceSpec spec;
  ContiguousRecord record;
  std::vector<TriggerEvent> triggers;
  SessionMetadata meta;

  // Throws std::invalid_argument when the record's channel count differs from
  // the spec or a trigger anchor falls outside the session.
  void validate() const;

  bool operator==(const Recording&) const = default;
};

inline constexpr std::string_view kCsvVersionTag = "safe-csv-1";

// CSV dialect "safe-csv-1":
//
//   # safe-csv-1
//   # spec.<field>=<value>          DeviceSpec, one line per field
//   # meta.seed=... / meta.source=... / meta.start_time=... / meta.<key>=...
//   # trigger=<true_time_s>,<sample|packet>,<label>
//   frame_index,ch1,...,chN,trigger,gap
//   0,12.375000,...,0,0
//
// Channel values use fixed 6-decimal text, which is exact for multiples of
// 0.125 uV. Frames inside a gap have empty channel cells and gap=1. The
// trigger column is 1 on every epoch anchor frame. Gap runs are split at
// packet boundaries on read, matching the per-packet gap list produced by
// reassembly.
std::string to_csv(const Recording& rec);
Recording parse_csv(std::string_view text, std::string_view origin = "<string>");

void write_csv(const Recording& rec, const std::filesystem::path& path);
Recording read_csv(const std::filesystem::path& path);

// Reads only the version tag line; used to sort out foreign files cheaply.
std::string read_csv_version(const std::filesystem::path& path);

}  // namespace safe
