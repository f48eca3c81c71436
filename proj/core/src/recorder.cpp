#include "safe/recorder.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "safe/errors.hpp"

namespace safe {

void Recording::validate() const {
  spec.validate();
  if (record.channel_count() != spec.channel_count)
    throw std::invalid_argument("Recording: record has " + std::to_string(record.channel_count()) +
                                " channels, spec has " + std::to_string(spec.channel_count));
  for (const auto& t : triggers) {
    const auto anchor = t.anchor_frame(spec);
    if (anchor < 0 || anchor > record.total_frames())
      throw std::invalid_argument("Recording: trigger at " + format_double(t.true_time_s) + " s outside session");
  }
}

namespace {

void check_single_line(std::string_view key, std::string_view value) {
  if (value.find('\n') != std::string_view::npos || value.find('\r') != std::string_view::npos)
    throw std::invalid_argument("metadata '" + std::string(key) + "' contains a line break");
}

void append_fixed6(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
  if (ec != std::errc{}) throw std::logic_error("value too large for CSV cell");
  out.append(buf, ptr);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  while (true) {
    const auto comma = line.find(',');
    cells.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line = line.substr(comma + 1);
  }
  return cells;
}

}  // namespace

std::string to_csv(const Recording& rec) {
  rec.validate();
  const auto& spec = rec.spec;
  const auto& r = rec.record;
  const int channels = r.channel_count();

  std::string out;
  out.reserve(static_cast<std::size_t>(r.total_frames()) * static_cast<std::size_t>(channels * 12 + 16) + 1024);
  out += "# ";
  out += kCsvVersionTag;
  out += "\n";

  KeyValueConfig spec_kv;
  spec.to_config(spec_kv, "spec.");
  for (const auto& k : spec_kv.keys()) out += "# " + k + "=" + *spec_kv.get(k) + "\n";

  check_single_line("source", rec.meta.source);
  check_single_line("start_time", rec.meta.start_time);
  out += "# meta.seed=" + std::to_string(rec.meta.seed) + "\n";
  out += "# meta.source=" + rec.meta.source + "\n";
  out += "# meta.start_time=" + rec.meta.start_time + "\n";
  for (const auto& [k, v] : rec.meta.extra) {
    if (k.empty() || k.find('=') != std::string::npos) throw std::invalid_argument("invalid metadata key '" + k + "'");
    check_single_line(k, v);
    out += "# meta." + k + "=" + v + "\n";
  }
  for (const auto& t : rec.triggers) {
    out += "# trigger=" + format_double(t.true_time_s) + "," + std::string(to_string(t.mode)) + "," +
           std::to_string(t.label) + "\n";
  }

  out += "frame_index";
  for (int c = 1; c <= channels; ++c) out += ",ch" + std::to_string(c);
  out += ",trigger,gap\n";

  std::vector<std::uint8_t> anchor(static_cast<std::size_t>(r.total_frames()), 0);
  for (const auto& t : rec.triggers) {
    const auto a = t.anchor_frame(spec);
    if (a < r.total_frames()) anchor[static_cast<std::size_t>(a)] = 1;
  }

  for (std::int64_t i = 0; i < r.total_frames(); ++i) {
    out += std::to_string(i);
    const bool present = r.present(i);
    for (int c = 0; c < channels; ++c) {
      out += ',';
      if (present) append_fixed6(out, r.value(c, i));
    }
    out += anchor[static_cast<std::size_t>(i)] ? ",1" : ",0";
    out += present ? ",0\n" : ",1\n";
  }
  return out;
}

Recording parse_csv(std::string_view text, std::string_view origin) {
  const std::string where(origin);
  long row = 0;
  auto next_line = [&text, &row]() -> std::optional<std::string_view> {
    if (text.empty()) return std::nullopt;
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++row;
    return line;
  };

  auto first = next_line();
  if (!first || first->rfind("# safe-csv-", 0) != 0)
    throw MalformedHeaderError(where + ": missing '# safe-csv-<version>' tag on line 1");
  if (trim(first->substr(2)) != kCsvVersionTag)
    throw UnknownVersionError(where + ": unsupported version '" + std::string(trim(first->substr(2))) + "'");

  KeyValueConfig spec_kv;
  Recording rec;
  std::optional<std::string_view> header;
  while (auto line = next_line()) {
    if (line->empty() || line->front() != '#') {
      header = line;
      break;
    }
    auto body = trim(line->substr(1));
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw MalformedHeaderError(where + ": comment line " + std::to_string(row) + " is not key=value");
    const auto key = body.substr(0, eq);
    const auto value = body.substr(eq + 1);
    if (key.rfind("spec.", 0) == 0) {
      spec_kv.set(std::string(key.substr(5)), std::string(value));
    } else if (key == "meta.seed") {
      auto v = parse_int(value);
      if (!v) throw MalformedHeaderError(where + ": meta.seed is not an integer");
      rec.meta.seed = static_cast<std::uint64_t>(*v);
    } else if (key == "meta.source") {
      rec.meta.source = std::string(value);
    } else if (key == "meta.start_time") {
      rec.meta.start_time = std::string(value);
    } else if (key.rfind("meta.", 0) == 0) {
      rec.meta.extra[std::string(key.substr(5))] = std::string(value);
    } else if (key == "trigger") {
      auto cells = split_commas(value);
      if (cells.size() != 3) throw MalformedHeaderError(where + ": trigger line " + std::to_string(row) + " needs 3 fields");
      auto t = parse_double(cells[0]);
      auto label = parse_int(cells[2]);
      if (!t || !label) throw MalformedHeaderError(where + ": trigger line " + std::to_string(row) + " is not numeric");
      rec.triggers.push_back({*t, label_mode_from_string(cells[1]), *label});
    } else {
      throw MalformedHeaderError(where + ": unknown metadata key '" + std::string(key) + "'");
    }
  }

  try {
    rec.spec = DeviceSpec::from_config(spec_kv, DeviceSpec{});
    rec.spec.validate();
  } catch (const std::exception& e) {
    throw MalformedHeaderError(where + ": invalid spec metadata: " + e.what());
  }
  const int channels = rec.spec.channel_count;

  if (!header) throw MalformedHeaderError(where + ": missing column header row");
  {
    auto cols = split_commas(*header);
    bool ok = cols.size() == static_cast<std::size_t>(channels + 3) && cols.front() == "frame_index" &&
              cols[cols.size() - 2] == "trigger" && cols.back() == "gap";
    for (int c = 1; ok && c <= channels; ++c) ok = cols[static_cast<std::size_t>(c)] == "ch" + std::to_string(c);
    if (!ok) throw MalformedHeaderError(where + ": column header does not match " + std::to_string(channels) + " channels");
  }

  std::vector<std::vector<double>> values(static_cast<std::size_t>(channels));
  std::vector<std::uint8_t> gap_flags;
  std::vector<std::int64_t> anchors;
  const auto n_cols = static_cast<std::size_t>(channels + 3);
  while (auto line = next_line()) {
    if (line->empty() && text.empty()) break;
    auto cells = split_commas(*line);
    if (cells.size() != n_cols)
      throw RaggedRowError(where + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                               " fields, expected " + std::to_string(n_cols),
                           row);
    const auto index = parse_int(cells[0]);
    if (!index || *index != static_cast<std::int64_t>(gap_flags.size()))
      throw FormatError(where + ": row " + std::to_string(row) + " has a non-sequential frame_index");
    const auto trig = cells[n_cols - 2];
    const auto gap = cells[n_cols - 1];
    if ((trig != "0" && trig != "1") || (gap != "0" && gap != "1"))
      throw FormatError(where + ": row " + std::to_string(row) + " has an invalid trigger/gap flag");
    const bool in_gap = gap == "1";
    for (int c = 0; c < channels; ++c) {
      const auto cell = cells[static_cast<std::size_t>(c + 1)];
      if (in_gap) {
        if (!cell.empty()) throw FormatError(where + ": row " + std::to_string(row) + " has a value inside a gap");
        values[static_cast<std::size_t>(c)].push_back(0.0);
        continue;
      }
      auto v = parse_double(cell);
      if (!v) throw FormatError(where + ": row " + std::to_string(row) + " has a non-numeric channel value");
      values[static_cast<std::size_t>(c)].push_back(*v);
    }
    if (trig == "1") anchors.push_back(*index);
    gap_flags.push_back(in_gap ? 1 : 0);
  }

  const auto total = static_cast<std::int64_t>(gap_flags.size());
  rec.record = ContiguousRecord(channels, total);
  const std::int64_t fpp = rec.spec.frames_per_packet;
  for (std::int64_t i = 0; i < total;) {
    if (!gap_flags[static_cast<std::size_t>(i)]) {
      ++i;
      continue;
    }
    // One interval per packet span.
    std::int64_t j = i + 1;
    while (j < total && gap_flags[static_cast<std::size_t>(j)] && j % fpp != 0) ++j;
    rec.record.add_gap({i, j});
    i = j;
  }
  for (int c = 0; c < channels; ++c) {
    auto dst = rec.record.channel(c);
    const auto& src = values[static_cast<std::size_t>(c)];
    for (std::int64_t i = 0; i < total; ++i)
      if (!gap_flags[static_cast<std::size_t>(i)]) dst[static_cast<std::size_t>(i)] = src[static_cast<std::size_t>(i)];
  }

  std::vector<std::int64_t> expected_anchors;
  for (const auto& t : rec.triggers) {
    const auto a = t.anchor_frame(rec.spec);
    if (a < total) expected_anchors.push_back(a);
  }
  std::sort(expected_anchors.begin(), expected_anchors.end());
  expected_anchors.erase(std::unique(expected_anchors.begin(), expected_anchors.end()), expected_anchors.end());
  if (expected_anchors != anchors)
    throw FormatError(where + ": trigger column disagrees with trigger metadata");

  try {
    rec.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(where + ": " + e.what());
  }
  return rec;
}

void write_csv(const Recording& rec, const std::filesystem::path& path) {
  const auto text = to_csv(rec);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  f.close();
  if (!f) throw IoError("failed writing: " + path.string());
}

Recording read_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str(), path.string());
}

std::string read_csv_version(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  std::string line;
  std::getline(f, line);
  if (line.rfind("# safe-csv-", 0) != 0) return {};
  return std::string(trim(std::string_view(line).substr(2)));
}

}  // namespace safe
