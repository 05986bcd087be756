#include "smdl/harness/format.hpp"

#include <cstdio>

namespace smdl::harness {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace smdl::harness
