#pragma once

#include <cmath>

// |a - b| / |b|; doctest::Approx adds an absolute term, which is too loose for tolerances.
inline double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }
