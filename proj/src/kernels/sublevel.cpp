#include "smdl/kernels/sublevel.hpp"

#include <algorithm>

#include "smdl/core/error.hpp"
#include "smdl/core/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace smdl::kernels {

int worker_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void sample_block(const zoo::Box& box, std::uint64_t seed, std::uint64_t block, std::uint64_t count,
                  std::vector<double>& points) {
  const std::size_t d = box.dimension();
  points.resize(count * d);
  core::RngStream rng(seed, block);
  for (std::uint64_t i = 0; i < count; ++i)
    for (std::size_t k = 0; k < d; ++k) points[i * d + k] = rng.uniform(box.lo(k), box.hi(k));
}

namespace {

void count_block(const zoo::Box& box, std::size_t outputs, const MultiField& field,
                 std::span<const double> thresholds, std::uint64_t samples, std::uint64_t seed,
                 std::uint64_t block, std::vector<double>& points, std::vector<double>& values,
                 std::span<std::uint64_t> counts) {
  const std::size_t d = box.dimension();
  const std::uint64_t first = block * kSampleBlock;
  const std::uint64_t n = std::min<std::uint64_t>(kSampleBlock, samples - first);
  sample_block(box, seed, block, n, points);
  values.resize(outputs);
  const std::size_t T = thresholds.size();
  for (std::uint64_t i = 0; i < n; ++i) {
    field(std::span<const double>(points.data() + i * d, d), values);
    for (std::size_t j = 0; j < outputs; ++j)
      for (std::size_t t = 0; t < T; ++t)
        if (values[j] <= thresholds[t]) ++counts[j * T + t];
  }
}

void check_args(const zoo::Box& box, std::size_t outputs, std::uint64_t samples) {
  require(box.dimension() >= 1, "sublevel count: empty box");
  require(outputs >= 1, "sublevel count: need at least one field output");
  require(samples >= 1, "sublevel count: need at least one sample");
}

}  // namespace

std::vector<std::uint64_t> count_sublevel_serial(const zoo::Box& box, std::size_t outputs, const MultiField& field,
                                                 std::span<const double> thresholds, std::uint64_t samples,
                                                 std::uint64_t seed) {
  check_args(box, outputs, samples);
  std::vector<std::uint64_t> counts(outputs * thresholds.size(), 0);
  std::vector<double> points, values;
  const std::uint64_t blocks = (samples + kSampleBlock - 1) / kSampleBlock;
  for (std::uint64_t b = 0; b < blocks; ++b)
    count_block(box, outputs, field, thresholds, samples, seed, b, points, values, counts);
  return counts;
}

std::vector<std::uint64_t> count_sublevel(const zoo::Box& box, std::size_t outputs, const MultiField& field,
                                          std::span<const double> thresholds, std::uint64_t samples,
                                          std::uint64_t seed, Exec exec) {
  if (exec == Exec::serial) return count_sublevel_serial(box, outputs, field, thresholds, samples, seed);
  check_args(box, outputs, samples);
  const std::size_t width = outputs * thresholds.size();
  const std::uint64_t blocks = (samples + kSampleBlock - 1) / kSampleBlock;
  // Integer counts: the merge is exact in any order, but per-block storage keeps it simple.
  std::vector<std::uint64_t> per_block(blocks * width, 0);
#pragma omp parallel
  {
    std::vector<double> points, values;
#pragma omp for schedule(dynamic)
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(blocks); ++b)
      count_block(box, outputs, field, thresholds, samples, seed, static_cast<std::uint64_t>(b), points, values,
                  std::span<std::uint64_t>(per_block.data() + b * width, width));
  }
  std::vector<std::uint64_t> counts(width, 0);
  for (std::uint64_t b = 0; b < blocks; ++b)
    for (std::size_t k = 0; k < width; ++k) counts[k] += per_block[b * width + k];
  return counts;
}

}  // namespace smdl::kernels
