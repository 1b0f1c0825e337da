#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>

namespace admmcert {

inline constexpr const char* kMissing = "NA";

/// Shortest-stable rendering at 17 significant digits.
inline std::string format_real(double v) {
  if (std::isnan(v)) return kMissing;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_real(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string(kMissing);
}

inline std::string format_count(const std::optional<long>& v) {
  return v ? std::to_string(*v) : std::string(kMissing);
}

}  // namespace admmcert
