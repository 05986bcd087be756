#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace smdl::core {

// Deterministic random stream keyed by (seed, stream_id). Distinct stream ids give
// statistically independent sequences, so work can be partitioned across threads
// by id without changing results. Uniform and normal transforms are implemented here
// rather than through <random> distributions so output does not depend on the
// standard library vendor.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  void fill_normal(std::span<double> out);

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// 64-bit FNV-1a, used for config and spec fingerprints.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace smdl::core
