#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace safe {

// Plain-text `key = value` configuration shared by every module.
//
// Lines starting with '#' or ';' are comments, blank lines are ignored and
// list values are comma separated. Keys may be dotted (`sine.frequencies_hz`)
// to scope them; the parser does not interpret the dots.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text, std::string_view origin = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;

  std::string get_string(std::string_view key, std::string_view fallback) const;
  double get_double(std::string_view key, double fallback) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<double> get_double_list(std::string_view key, std::vector<double> fallback) const;

  void set(std::string key, std::string value);
  void set(std::string key, double value);
  void set(std::string key, std::int64_t value);

  // Keys in lexicographic order.
  std::vector<std::string> keys() const;
  std::vector<std::string> keys_with_prefix(std::string_view prefix) const;

  const std::string& origin() const noexcept { return origin_; }

  // Serializes back to the `key = value` dialect.
  std::string to_string() const;

 private:
  std::map<std::string, std::string, std::less<>> entries_;
  std::string origin_ = "<empty>";
};

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

// Strict full-string numeric parse; nullopt on trailing garbage.
std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

std::string_view trim(std::string_view s);

}  // namespace safe
