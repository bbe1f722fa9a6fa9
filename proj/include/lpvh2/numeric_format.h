#pragma once

#include <string>

namespace lpvh2 {

/// `%.15g` rendering used by every text output of the project.
std::string format_number(double value);

/// Rounds `value` to 15 significant digits (value of format_number).
double round_significant(double value);

}  // namespace lpvh2
