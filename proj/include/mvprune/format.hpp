#pragma once

#include <cstdio>
#include <string>

namespace mvprune {

/// Text that round-trips the double exactly (%.17g); used for every
/// number written to CSV so reruns compare byte-for-byte.
inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace mvprune
