#include "tide/format.hpp"

#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

namespace tide {

std::string percent_one_decimal(double x) {
  const double tenths = x * 1000.0;
  const double floor_v = std::floor(tenths);
  const double frac = tenths - floor_v;
  // Products such as 0.0125 * 1000 land a few ulps off an exact tie.
  const double tie_tolerance = 1e-9 * std::max(1.0, std::abs(tenths));
  double rounded = 0.0;
  if (std::abs(frac - 0.5) <= tie_tolerance) {
    rounded = std::fmod(floor_v, 2.0) == 0.0 ? floor_v : floor_v + 1.0;
  } else {
    rounded = std::round(tenths);
  }
  const auto n = static_cast<long long>(rounded);
  if (n == 0) return "0.0";
  const long long mag = std::llabs(n);
  return fmt::format("{}{}.{}", n < 0 ? "-" : "", mag / 10, mag % 10);
}

std::string fixed6(double x) {
  std::string s = fmt::format("{:.6f}", x);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

}  // namespace tide
