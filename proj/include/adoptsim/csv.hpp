#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "adoptsim/errors.hpp"

namespace adoptsim::csv {

// Splits one CSV line on commas. No quoting support: the file schemas used
// here forbid embedded commas. A trailing '\r' is stripped.
inline std::vector<std::string> split_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open file");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// `where` names the file position, e.g. "cities.csv line 12, column lat".
inline std::int64_t parse_int(std::string_view field, const std::string& where) {
  field = trim(field);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw ValidationError(where + ": expected integer, got '" + std::string(field) + "'");
  return value;
}

inline double parse_double(std::string_view field, const std::string& where) {
  field = trim(field);
  // std::from_chars for doubles is incomplete in some standard libraries;
  // go through strtod on a bounded copy instead.
  std::string buf(field);
  if (buf.empty()) throw ValidationError(where + ": expected number, got empty field");
  char* end = nullptr;
  double value = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size())
    throw ValidationError(where + ": expected number, got '" + buf + "'");
  return value;
}

inline std::uint64_t parse_uint(std::string_view field, const std::string& where) {
  std::int64_t v = parse_int(field, where);
  if (v < 0) throw ValidationError(where + ": expected non-negative integer, got " + std::to_string(v));
  return static_cast<std::uint64_t>(v);
}

}  // namespace adoptsim::csv
