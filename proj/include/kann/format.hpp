#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace kann {

/// Shortest decimal text that reads back to the same double (at most 17
/// significant digits). Non-finite values print as "nan", "inf", "-inf".
inline std::string format_double(double value) {
  if (std::isnan(value))
    return "nan";
  if (std::isinf(value))
    return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return res.ec == std::errc{} ? std::string(buf, res.ptr) : std::string("nan");
}

} // namespace kann
