#pragma once

#include <string>

namespace smdl::harness {

// Shortest-stable text form used in every CSV: printf "%.17g".
std::string fmt_double(double v);

}  // namespace smdl::harness
