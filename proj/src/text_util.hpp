#pragma once

// Small parsing/formatting helpers shared by the text file formats.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "fixrocket/error.hpp"

namespace fixrocket::text {

// Shortest representation that round-trips exactly.
inline std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void append_shortest(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

inline std::string digits17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline double to_double(std::string_view s, ErrorCode code, std::string_view what) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(code, "bad number for " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

template <class Int>
Int to_int(std::string_view s, ErrorCode code, std::string_view what) {
  s = trim(s);
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(code, "bad integer for " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

// "key=value" -> {key, value}; throws when '=' is missing.
inline std::pair<std::string_view, std::string_view> key_value(std::string_view s, ErrorCode code) {
  const auto eq = s.find('=');
  if (eq == std::string_view::npos) fail(code, "expected key=value, got '" + std::string(s) + "'");
  return {trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
}

}  // namespace fixrocket::text
