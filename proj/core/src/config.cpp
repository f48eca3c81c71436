#include "safe/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "safe/errors.hpp"

namespace safe {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::logic_error("format_double: buffer too small");
  return std::string(buf.data(), ptr);
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<std::int64_t> parse_int(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::string_view origin) {
  KeyValueConfig cfg;
  cfg.origin_ = std::string(origin);
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    line = trim(line);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(cfg.origin_ + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(cfg.origin_ + ":" + std::to_string(line_no) + ": empty key");
    }
    if (cfg.entries_.count(key) != 0) {
      throw ConfigError(cfg.origin_ + ":" + std::to_string(line_no) + ": duplicate key '" +
                        std::string(key) + "'");
    }
    cfg.entries_.emplace(std::string(key), std::string(value));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

bool KeyValueConfig::contains(std::string_view key) const { return entries_.find(key) != entries_.end(); }

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_string(std::string_view key, std::string_view fallback) const {
  auto v = get(key);
  return v ? *v : std::string(fallback);
}

double KeyValueConfig::get_double(std::string_view key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  auto d = parse_double(*v);
  if (!d) throw ConfigError(origin_ + ": key '" + std::string(key) + "' is not a number: '" + *v + "'");
  return *d;
}

std::int64_t KeyValueConfig::get_int(std::string_view key, std::int64_t fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  auto i = parse_int(*v);
  if (!i) throw ConfigError(origin_ + ": key '" + std::string(key) + "' is not an integer: '" + *v + "'");
  return *i;
}

bool KeyValueConfig::get_bool(std::string_view key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw ConfigError(origin_ + ": key '" + std::string(key) + "' is not a boolean: '" + *v + "'");
}

std::vector<double> KeyValueConfig::get_double_list(std::string_view key,
                                                    std::vector<double> fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::vector<double> out;
  std::string_view rest = *v;
  if (trim(rest).empty()) return out;
  while (true) {
    const auto comma = rest.find(',');
    const auto item = rest.substr(0, comma);
    auto d = parse_double(item);
    if (!d) {
      throw ConfigError(origin_ + ": key '" + std::string(key) + "' has a non-numeric list item: '" +
                        std::string(trim(item)) + "'");
    }
    out.push_back(*d);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

void KeyValueConfig::set(std::string key, std::string value) { entries_[std::move(key)] = std::move(value); }
void KeyValueConfig::set(std::string key, double value) { set(std::move(key), format_double(value)); }
void KeyValueConfig::set(std::string key, std::int64_t value) { set(std::move(key), std::to_string(value)); }

std::vector<std::string> KeyValueConfig::keys() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

std::vector<std::string> KeyValueConfig::keys_with_prefix(std::string_view prefix) const {
  std::vector<std::string> out;
  for (auto it = entries_.lower_bound(prefix); it != entries_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    out.push_back(it->first);
  }
  return out;
}

std::string KeyValueConfig::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace safe
