#ifndef KDTL_TEXT_HPP
#define KDTL_TEXT_HPP

// Small text helpers shared by the data-file, CSV and config readers.
//
// Key-value grammar (constants, atomic weights, run configs):
//   line      := blank | comment | entry
//   comment   := '#' anything
//   entry     := key ws* '=' ws* value ws* [ '#' anything ]
//   key       := [A-Za-z0-9_.]+
// Keys are case-sensitive. A repeated key is an error.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "kdtl/error.hpp"

namespace kdtl::text {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

/// Strict decimal parse: the whole (trimmed) field must be consumed.
inline std::optional<double> parse_double(std::string_view field) {
  field = trim(field);
  if (field.empty()) return std::nullopt;
  if (field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

inline std::optional<long long> parse_int(std::string_view field) {
  field = trim(field);
  if (field.empty()) return std::nullopt;
  long long value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

/// Shortest representation that parses back to the identical double.
inline std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

/// At most `digits` significant digits, trailing zeros dropped (for derived unit conversions).
inline std::string format_significant(double value, int digits) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, digits);
  return std::string(buf, ptr);
}

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

inline bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

/// Parses one entry line (comments and blanks return nullopt).
inline std::optional<KeyValue> parse_kv_line(std::string_view raw, std::size_t line_no) {
  auto line = trim(raw);
  if (line.empty() || line.front() == '#') return std::nullopt;
  if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) throw FormatError("expected 'key = value'", line_no);
  const auto key = trim(line.substr(0, eq));
  const auto value = trim(line.substr(eq + 1));
  if (!valid_key(key)) throw FormatError("invalid key '" + std::string(key) + "'", line_no);
  if (value.empty()) throw FormatError("missing value for key '" + std::string(key) + "'", line_no);
  return KeyValue{std::string(key), std::string(value), line_no};
}

/// Parses a whole key-value document. Duplicate keys are rejected.
inline std::vector<KeyValue> parse_kv(std::string_view document) {
  std::vector<KeyValue> out;
  std::size_t line_no = 0;
  for (auto line : split(document, '\n')) {
    ++line_no;
    auto kv = parse_kv_line(line, line_no);
    if (!kv) continue;
    for (const auto& prev : out) {
      if (prev.key == kv->key) throw FormatError("duplicate key '" + kv->key + "'", line_no);
    }
    out.push_back(std::move(*kv));
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace kdtl::text

#endif  // KDTL_TEXT_HPP
