#include "lpvh2/numeric_format.h"

#include <cstdio>
#include <cstdlib>

namespace lpvh2 {

std::string format_number(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.15g", value);
  return buffer;
}

double round_significant(double value) {
  return std::strtod(format_number(value).c_str(), nullptr);
}

}  // namespace lpvh2
