#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

namespace cregmm {

// Shortest decimal that round-trips; missing values print as an empty string.
inline std::string format_shortest(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_fixed(double v, int decimals = 4) {
  if (std::isnan(v)) return {};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace cregmm
