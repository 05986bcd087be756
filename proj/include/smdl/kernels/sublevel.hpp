#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "smdl/kernels/exec.hpp"
#include "smdl/zoo/box.hpp"

namespace smdl::kernels {

// Writes `outputs()` function values for one parameter point.
using MultiField = std::function<void(std::span<const double> w, std::span<double> out)>;

inline constexpr std::uint64_t kSampleBlock = 1u << 14;

// Draws `samples` uniform points of `box` and, for every field output j and threshold t,
// counts the points with value_j <= thresholds[t]. Result is indexed [j * T + t].
// Sample block b is drawn from RngStream(seed, b), so every caller using the same
// (box, samples, seed) sees the same points.
std::vector<std::uint64_t> count_sublevel(const zoo::Box& box, std::size_t outputs, const MultiField& field,
                                          std::span<const double> thresholds, std::uint64_t samples,
                                          std::uint64_t seed, Exec exec = Exec::parallel);

// Serial reference, kept separate from the dispatching entry point for testing.
std::vector<std::uint64_t> count_sublevel_serial(const zoo::Box& box, std::size_t outputs, const MultiField& field,
                                                 std::span<const double> thresholds, std::uint64_t samples,
                                                 std::uint64_t seed);

// Fills `w` with the i-th point of block `block` in the shared sample stream.
void sample_block(const zoo::Box& box, std::uint64_t seed, std::uint64_t block, std::uint64_t count,
                  std::vector<double>& points);

}  // namespace smdl::kernels
