#pragma once

#include <string>

namespace tide {

/// x * 100 with one decimal, ties rounded half-to-even ("53.1", "-0.5", "0.0").
std::string percent_one_decimal(double x);

/// Fixed six-decimal rendering used by curve exports.
std::string fixed6(double x);

}  // namespace tide
