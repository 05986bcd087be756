#include "smdl/volume/volume.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "smdl/core/error.hpp"
#include "smdl/core/linear_fit.hpp"
#include "smdl/harness/format.hpp"

namespace smdl::volume {

using harness::fmt_double;

VolumeEstimate volume_from_hits(std::uint64_t hits, std::uint64_t samples, double box_volume) {
  const double n = static_cast<double>(samples);
  const double p = static_cast<double>(hits) / n;
  return {box_volume * p, box_volume * std::sqrt(p * (1.0 - p) / n)};
}

VolumeEstimate mc_sublevel_volume(const zoo::Landscape& k, double epsilon, std::uint64_t samples, std::uint64_t seed,
                                  kernels::Exec exec) {
  require(epsilon > 0.0, "mc_sublevel_volume: epsilon must be positive");
  const auto c = volume_curve(k, {epsilon}, samples, seed, exec);
  return {c.volumes[0], c.standard_errors[0]};
}

VolumeCurve volume_curve(const zoo::Box& box, const std::function<double(std::span<const double>)>& field,
                         std::vector<double> epsilons, std::uint64_t samples, std::uint64_t seed,
                         kernels::Exec exec) {
  require(!epsilons.empty(), "volume curve: empty epsilon ladder");
  require(samples >= 1, "volume curve: need at least one sample");
  for (double e : epsilons) require(e > 0.0 && std::isfinite(e), "volume curve: epsilons must be positive");
  std::sort(epsilons.rbegin(), epsilons.rend());

  const kernels::MultiField f = [&](std::span<const double> w, std::span<double> out) { out[0] = field(w); };
  const auto hits = kernels::count_sublevel(box, 1, f, epsilons, samples, seed, exec);

  VolumeCurve c;
  c.epsilons = epsilons;
  c.mc_samples = samples;
  c.box_volume = box.volume();
  c.hits = hits;
  for (std::uint64_t h : hits) {
    const auto v = volume_from_hits(h, samples, c.box_volume);
    c.volumes.push_back(v.volume);
    c.standard_errors.push_back(v.se);
  }
  return c;
}

VolumeCurve volume_curve(const zoo::Landscape& k, std::vector<double> epsilons, std::uint64_t samples,
                         std::uint64_t seed, kernels::Exec exec) {
  return volume_curve(k.bounds(), [&](std::span<const double> w) { return k.value(w); }, std::move(epsilons),
                      samples, seed, exec);
}

std::vector<double> dyadic_ladder(int lo_exp, int hi_exp) {
  require(lo_exp <= hi_exp, "dyadic ladder: empty exponent range");
  std::vector<double> e;
  for (int k = lo_exp; k <= hi_exp; ++k) e.push_back(std::ldexp(1.0, -k));
  return e;
}

std::vector<std::size_t> fit_points(const VolumeCurve& curve, const FitWindow& window) {
  std::vector<std::size_t> keep;
  const double eps_cap = std::min(window.max_epsilon, 1.0);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double e = curve.epsilons[i], v = curve.volumes[i], se = curve.standard_errors[i];
    if (!(e > 0.0 && e <= eps_cap && e < 1.0)) continue;
    if (!(v > 0.0) || v >= curve.box_volume) continue;
    if (!(se / v <= window.max_relative_se)) continue;
    keep.push_back(i);
  }
  return keep;
}

ScalingFit fit_scaling(const VolumeCurve& curve, MultiplicityMode mode, const FitWindow& window) {
  if (mode.fixed) require(*mode.fixed >= 1, "fit_scaling: multiplicity must be >= 1");
  const auto idx = fit_points(curve, window);
  if (idx.size() < window.min_points)
    fail(ErrorKind::fit_window, "fit_scaling: only " + std::to_string(idx.size()) + " usable epsilon points (need " +
                                    std::to_string(window.min_points) + ")");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i : idx) {
    lo = std::min(lo, curve.epsilons[i]);
    hi = std::max(hi, curve.epsilons[i]);
  }
  if (std::log10(hi / lo) < window.min_decades)
    fail(ErrorKind::fit_window, "fit_scaling: usable epsilons span " + fmt_double(std::log10(hi / lo)) +
                                    " decades (need " + fmt_double(window.min_decades) + ")");

  std::vector<double> x, w, loglog, logv;
  bool any_zero_se = false;
  for (std::size_t i : idx) {
    const double e = curve.epsilons[i], v = curve.volumes[i], se = curve.standard_errors[i];
    x.push_back(std::log(e));
    loglog.push_back(std::log(-std::log(e)));
    logv.push_back(std::log(v));
    any_zero_se = any_zero_se || se == 0.0;
    w.push_back(se > 0.0 ? (v / se) * (v / se) : 0.0);
  }
  if (any_zero_se) w.clear();

  ScalingFit best;
  best.r_squared = -1.0;
  best.r_squared_by_m.fill(std::numeric_limits<double>::quiet_NaN());
  std::vector<int> candidates = mode.fixed ? std::vector<int>{*mode.fixed} : std::vector<int>{1, 2, 3};
  for (int m : candidates) {
    std::vector<double> y(logv.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = logv[i] - (m - 1) * loglog[i];
    const auto f = core::linear_fit(x, y, w);
    if (m >= 1 && m <= 3) best.r_squared_by_m[m - 1] = f.r_squared;
    if (f.r_squared > best.r_squared) {
      best.lambda = f.slope();
      best.log_c = f.intercept();
      best.r_squared = f.r_squared;
      best.multiplicity = m;
    }
  }
  best.epsilon_min = lo;
  best.epsilon_max = hi;
  best.points = idx.size();
  return best;
}

std::string curve_csv(const VolumeCurve& curve) {
  std::string out = "epsilon,volume,se\n";
  for (std::size_t i = 0; i < curve.size(); ++i)
    out += fmt_double(curve.epsilons[i]) + "," + fmt_double(curve.volumes[i]) + "," +
           fmt_double(curve.standard_errors[i]) + "\n";
  return out;
}

std::string fit_record(const ScalingFit& f) {
  return "lambda=" + fmt_double(f.lambda) + " multiplicity=" + std::to_string(f.multiplicity) +
         " log_c=" + fmt_double(f.log_c) + " r_squared=" + fmt_double(f.r_squared) +
         " epsilon_min=" + fmt_double(f.epsilon_min) + " epsilon_max=" + fmt_double(f.epsilon_max) +
         " points=" + std::to_string(f.points) + " r2_m1=" + fmt_double(f.r_squared_by_m[0]) +
         " r2_m2=" + fmt_double(f.r_squared_by_m[1]) + " r2_m3=" + fmt_double(f.r_squared_by_m[2]) + "\n";
}

}  // namespace smdl::volume
