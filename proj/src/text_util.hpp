#pragma once

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "gazeact/errors.hpp"

namespace gazeact::detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

inline double parse_double(std::string_view field, std::size_t line, const char* what) {
  const std::string s(field);
  if (s.empty()) throw ParseError(std::string("empty ") + what, line);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw ParseError(std::string("bad ") + what + " '" + s + "'", line);
  }
  return v;
}

inline std::uint64_t parse_uint(std::string_view field, std::size_t line, const char* what) {
  const std::string s(field);
  if (s.empty() || s.front() == '-') throw ParseError(std::string("bad ") + what + " '" + s + "'", line);
  char* end = nullptr;
  errno = 0;
  const auto v = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw ParseError(std::string("bad ") + what + " '" + s + "'", line);
  }
  return v;
}

// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

// Reads the header line; throws EmptyInputError on an empty stream and
// ParseError when it does not match.
inline void expect_header(std::istream& in, std::string_view header) {
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) break;
  }
  if (!in && line.empty()) throw EmptyInputError("empty input, expected header '" + std::string(header) + "'");
  std::string compact;
  for (char c : line) {
    if (c != ' ' && c != '\t' && c != '\r') compact.push_back(c);
  }
  if (compact != header) throw ParseError("expected header '" + std::string(header) + "', got '" + line + "'", 1);
}

}  // namespace gazeact::detail
