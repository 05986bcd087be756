#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smdl/kernels/exec.hpp"
#include "smdl/kernels/sublevel.hpp"
#include "smdl/zoo/landscape.hpp"

namespace smdl::volume {

struct VolumeEstimate {
  double volume = 0.0;
  double se = 0.0;
};

struct VolumeCurve {
  std::vector<double> epsilons;  // descending
  std::vector<double> volumes;
  std::vector<double> standard_errors;
  std::vector<std::uint64_t> hits;
  std::uint64_t mc_samples = 0;
  double box_volume = 0.0;

  std::size_t size() const noexcept { return epsilons.size(); }
};

// Vol(W) * hits / samples with binomial standard error.
VolumeEstimate volume_from_hits(std::uint64_t hits, std::uint64_t samples, double box_volume);

VolumeEstimate mc_sublevel_volume(const zoo::Landscape& k, double epsilon, std::uint64_t samples, std::uint64_t seed,
                                  kernels::Exec exec = kernels::Exec::parallel);

// One shared sample set for the whole ladder (common random numbers).
VolumeCurve volume_curve(const zoo::Landscape& k, std::vector<double> epsilons, std::uint64_t samples,
                         std::uint64_t seed, kernels::Exec exec = kernels::Exec::parallel);
VolumeCurve volume_curve(const zoo::Box& box, const std::function<double(std::span<const double>)>& field,
                         std::vector<double> epsilons, std::uint64_t samples, std::uint64_t seed,
                         kernels::Exec exec = kernels::Exec::parallel);

// Powers of two 2^-hi_exp .. 2^-lo_exp, descending.
std::vector<double> dyadic_ladder(int lo_exp, int hi_exp);

struct FitWindow {
  double max_relative_se = 0.2;
  double max_epsilon = 0.25;
  std::size_t min_points = 4;
  double min_decades = 2.0;
};

struct MultiplicityMode {
  std::optional<int> fixed;  // empty = select m in {1, 2, 3} by best R^2

  static MultiplicityMode select() { return {}; }
  static MultiplicityMode of(int m) { return {m}; }
};

struct ScalingFit {
  double lambda = 0.0;
  int multiplicity = 1;
  double log_c = 0.0;
  double r_squared = 0.0;
  double epsilon_min = 0.0;
  double epsilon_max = 0.0;
  std::size_t points = 0;
  // R^2 for m = 1, 2, 3 (NaN for modes not evaluated).
  std::array<double, 3> r_squared_by_m{};
};

// Indices of curve points admitted by the window: finite relative SE below the cap,
// epsilon in (0, min(max_epsilon, 1)), and volume strictly below Vol(W).
std::vector<std::size_t> fit_points(const VolumeCurve& curve, const FitWindow& window);

// Weighted least squares of log V - (m-1) log(-log eps) on log eps, weights (V/se)^2
// (unweighted when any admitted SE is zero, e.g. for noiseless synthetic curves).
ScalingFit fit_scaling(const VolumeCurve& curve, MultiplicityMode mode, const FitWindow& window = {});

std::string curve_csv(const VolumeCurve& curve);
std::string fit_record(const ScalingFit& fit);

}  // namespace smdl::volume
