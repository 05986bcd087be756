#include "smdl/compress/compress.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "smdl/core/error.hpp"
#include "smdl/core/rng.hpp"
#include "smdl/harness/format.hpp"

namespace smdl::compress {

// ---- quantization ---------------------------------------------------------------------

void validate(const QuantizationSpec& spec) {
  if (spec.n_q < 4 || spec.n_q % 2 != 0)
    fail(ErrorKind::invalid_input, "quantization: n_q must be even and >= 4, got " + std::to_string(spec.n_q));
  if (!(spec.m_clamp > 0.0) || !std::isfinite(spec.m_clamp))
    fail(ErrorKind::invalid_input, "quantization: m_clamp must be positive and finite");
}

double grid_step(const QuantizationSpec& spec) {
  validate(spec);
  return spec.m_clamp / static_cast<double>(spec.n_q / 2 - 1);
}

std::vector<double> quantize(std::span<const double> w, const QuantizationSpec& spec) {
  const double delta = grid_step(spec);
  const double m = spec.m_clamp;
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double c = std::clamp(w[i], -m, m);
    // Adding 0.0 turns -0.0 into +0.0 so the grid has a single zero.
    out[i] = std::round(c / delta) * delta + 0.0;
  }
  return out;
}

double max_abs(std::span<const double> w) {
  double m = 0.0;
  for (double x : w) m = std::max(m, std::abs(x));
  return m;
}

namespace {

double loss_at(std::span<const double> w, int n_q, double m, const LossEval& loss) {
  return loss(quantize(w, QuantizationSpec{n_q, m, MMode::loss_minimized}));
}

bool better(double a, double b) { return std::isfinite(a) && (!std::isfinite(b) || a < b); }

}  // namespace

MSearchResult quantize_loss_min_m(std::span<const double> w, int n_q, const LossEval& loss, double baseline,
                                  const MSearchConfig& cfg) {
  validate(QuantizationSpec{n_q, 1.0, MMode::loss_minimized});
  require(cfg.grid_points >= 2, "m search: need at least 2 grid points");
  require(cfg.lo_fraction > 0.0 && cfg.lo_fraction <= 1.0, "m search: lo_fraction must lie in (0, 1]");
  const double top = max_abs(w);
  if (top == 0.0) {
    // Zero vector: every grid contains it, any m is lossless.
    const double l = loss_at(w, n_q, 1.0, loss);
    if (!std::isfinite(l)) fail(ErrorKind::quantization_failed, "quantization failed: loss is non-finite");
    return {1.0, l, l - baseline};
  }

  const std::size_t g = cfg.grid_points;
  const double lo = cfg.lo_fraction * top;
  std::vector<double> ms(g), ls(g);
  std::size_t best = g;
  for (std::size_t i = 0; i < g; ++i) {
    // Geometric grid with the top point exactly max|w|.
    ms[i] = (i + 1 == g) ? top : lo * std::pow(top / lo, static_cast<double>(i) / static_cast<double>(g - 1));
    ls[i] = loss_at(w, n_q, ms[i], loss);
    if (best == g ? std::isfinite(ls[i]) : better(ls[i], ls[best])) best = i;
  }
  if (best == g) fail(ErrorKind::quantization_failed, "quantization failed: all candidate losses are non-finite");

  double best_m = ms[best], best_l = ls[best];
  double a = ms[best > 0 ? best - 1 : best];
  double b = ms[best + 1 < g ? best + 1 : best];
  if (b > a) {
    // Golden-section refinement; the loss is piecewise constant in m, so keep the best
    // point seen rather than trusting the final bracket.
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = loss_at(w, n_q, x1, loss), f2 = loss_at(w, n_q, x2, loss);
    for (int it = 0; it < 200 && (b - a) > cfg.relative_tolerance * best_m; ++it) {
      if (better(f1, best_l)) best_m = x1, best_l = f1;
      if (better(f2, best_l)) best_m = x2, best_l = f2;
      if (!std::isfinite(f2) || (std::isfinite(f1) && f1 <= f2)) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - phi * (b - a);
        f1 = loss_at(w, n_q, x1, loss);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + phi * (b - a);
        f2 = loss_at(w, n_q, x2, loss);
      }
    }
    if (better(f1, best_l)) best_m = x1, best_l = f1;
    if (better(f2, best_l)) best_m = x2, best_l = f2;
  }
  return {best_m, best_l, best_l - baseline};
}

MSearchResult quantize_loss_min_m(std::span<const double> w, int n_q, const LossEval& loss,
                                  const MSearchConfig& cfg) {
  return quantize_loss_min_m(w, n_q, loss, loss(w), cfg);
}

MSearchResult quantization_delta(std::span<const double> w, int n_q, MMode mode, const LossEval& loss,
                                 double baseline, const MSearchConfig& cfg) {
  if (mode == MMode::loss_minimized) return quantize_loss_min_m(w, n_q, loss, baseline, cfg);
  const double top = max_abs(w);
  const double m = top > 0.0 ? top : 1.0;
  const double l = loss_at(w, n_q, m, loss);
  if (!std::isfinite(l)) fail(ErrorKind::quantization_failed, "quantization failed: loss is non-finite");
  return {m, l, l - baseline};
}

CriticalNq critical_nq(std::span<const double> w, double epsilon, const LossEval& loss, const CriticalConfig& cfg) {
  require(epsilon > 0.0, "critical n_q: epsilon must be positive");
  require(cfg.nq_cap >= 4, "critical n_q: cap must be >= 4");
  const double baseline = loss(w);
  require(std::isfinite(baseline), "critical n_q: baseline loss is non-finite");

  CriticalNq out;
  std::map<int, MSearchResult> memo;
  auto eval = [&](int n) -> const MSearchResult& {
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    const auto r = quantization_delta(w, n, cfg.mode, loss, baseline, cfg.m_search);
    out.evaluated.emplace_back(n, r.delta_loss);
    return memo.emplace(n, r).first->second;
  };
  auto ok = [&](int n) { return eval(n).delta_loss <= epsilon; };

  int lo = 0, hi = 4;  // lo: largest known failing value (0 = none)
  while (!ok(hi)) {
    lo = hi;
    if (hi > cfg.nq_cap / 2)
      fail(ErrorKind::unreachable_tolerance,
           "critical n_q: tolerance " + harness::fmt_double(epsilon) + " unreachable below n_q cap " +
               std::to_string(cfg.nq_cap));
    hi *= 2;
  }
  if (lo > 0) {
    while (hi - lo > 2) {
      int mid = (lo + hi) / 2;
      mid -= mid % 2;
      if (ok(mid)) hi = mid;
      else lo = mid;
    }
  }
  // Verification: the result must satisfy the inequality as measured and the next even
  // value down must not. If a smaller value also passes, walk down to the first failure.
  while (hi > 4 && ok(hi - 2)) hi -= 2;
  const auto& r = eval(hi);
  out.n_q = hi;
  out.delta_loss = r.delta_loss;
  out.m = r.m;
  return out;
}

// ---- factorization --------------------------------------------------------------------

std::size_t factorized_parameter_count(std::size_t d1, std::size_t d2, std::size_t n) { return d1 * n + n + n * d2; }

std::size_t kept_rank(std::size_t d1, std::size_t d2, double keep_fraction) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0)
    fail(ErrorKind::invalid_input, "factorize: keep_fraction must lie in (0, 1]");
  const std::size_t r = std::min(d1, d2);
  require(r >= 1, "factorize: selected layer has an empty dimension");
  // Guard against 3/8 * 8 = 3.0000000000000004 rounding up to 4.
  const double x = keep_fraction * static_cast<double>(r);
  auto n = static_cast<std::size_t>(std::ceil(x - 1e-9 * x));
  return std::clamp<std::size_t>(n, 1, r);
}

std::vector<std::size_t> hidden_layer_selection(const zoo::MlpModel& model) {
  std::vector<std::size_t> out;
  for (std::size_t l = 1; l + 1 < model.layer_count(); ++l) out.push_back(l);
  return out;
}

FactorizeResult factorize(const zoo::MlpModel& model, std::span<const double> params, double keep_fraction,
                          const std::vector<std::size_t>& layers) {
  require(params.size() == model.parameter_count(), "factorize: parameter vector does not match model");
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0)
    fail(ErrorKind::invalid_input, "factorize: keep_fraction must lie in (0, 1]");
  FactorizeResult res;
  res.params.assign(params.begin(), params.end());
  res.model_params_before = model.parameter_count();
  std::size_t removed = 0, added = 0;
  for (std::size_t l : layers) {
    require(l < model.layer_count(), "factorize: layer index out of range");
    const auto& slot = model.layer(l);
    FactorizedLayer fl;
    fl.layer = l;
    fl.rank = kept_rank(slot.out, slot.in, keep_fraction);
    fl.factors = core::truncate(core::svd(model.weight(params, l)), fl.rank);
    fl.params_before = slot.out * slot.in;
    fl.params_after = factorized_parameter_count(slot.out, slot.in, fl.rank);
    model.set_weight(res.params, l, core::reconstruct(fl.factors));
    removed += fl.params_before;
    added += fl.params_after;
    res.layers.push_back(std::move(fl));
  }
  res.model_params_after = res.model_params_before - removed + added;
  res.compression_fraction =
      static_cast<double>(res.model_params_after) / static_cast<double>(res.model_params_before);
  return res;
}

CriticalFraction critical_compression_fraction(const zoo::MlpModel& model, std::span<const double> params,
                                               double epsilon, const LossEval& loss,
                                               const std::vector<std::size_t>& layers) {
  require(epsilon >= 0.0, "critical fraction: epsilon must be non-negative");
  require(!layers.empty(), "critical fraction: no layers selected");
  std::size_t grid = 0;
  for (std::size_t l : layers) {
    require(l < model.layer_count(), "critical fraction: layer index out of range");
    grid = std::max(grid, std::min(model.layer(l).in, model.layer(l).out));
  }
  const double baseline = loss(params);
  require(std::isfinite(baseline), "critical fraction: baseline loss is non-finite");

  CriticalFraction out;
  out.grid_size = grid;
  std::map<std::size_t, std::pair<double, double>> memo;  // t -> (ΔLoss, compression fraction)
  auto eval = [&](std::size_t t) -> std::pair<double, double> {
    auto it = memo.find(t);
    if (it != memo.end()) return it->second;
    const double keep = static_cast<double>(t) / static_cast<double>(grid);
    const auto f = factorize(model, params, keep, layers);
    const double d = loss(f.params) - baseline;
    out.evaluated.emplace_back(keep, d);
    return memo.emplace(t, std::make_pair(d, f.compression_fraction)).first->second;
  };
  auto ok = [&](std::size_t t) {
    const double d = eval(t).first;
    return std::isfinite(d) && d <= epsilon;
  };

  if (!ok(grid))
    fail(ErrorKind::unreachable_tolerance,
         "critical fraction: tolerance " + harness::fmt_double(epsilon) + " unreachable at full rank");
  std::size_t lo = 0, hi = grid;  // lo: largest known failing index (0 = none)
  if (!ok(1)) {
    lo = 1;
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (ok(mid)) hi = mid;
      else lo = mid;
    }
  } else {
    hi = 1;
  }
  while (hi > 1 && ok(hi - 1)) --hi;
  out.grid_index = hi;
  out.keep_fraction = static_cast<double>(hi) / static_cast<double>(grid);
  out.delta_loss = eval(hi).first;
  out.compression_fraction = eval(hi).second;
  return out;
}

// ---- Gaussian noise -------------------------------------------------------------------

std::vector<double> add_noise(std::span<const double> w, double sigma, NoiseMode mode, std::uint64_t seed) {
  require(sigma >= 0.0 && std::isfinite(sigma), "add_noise: sigma must be finite and non-negative");
  std::vector<double> xi(w.size());
  core::RngStream rng(seed, 0);
  rng.fill_normal(xi);
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    out[i] = mode == NoiseMode::absolute ? w[i] + sigma * xi[i] : w[i] + w[i] * sigma * xi[i];
  return out;
}

double mean_noise_delta(std::span<const double> w, double sigma, NoiseMode mode, const LossEval& loss,
                        double baseline, std::size_t draws, std::uint64_t seed) {
  require(draws >= 1, "critical sigma: noise_draws must be >= 1");
  double s = 0.0;
  for (std::size_t k = 0; k < draws; ++k) s += loss(add_noise(w, sigma, mode, seed + k)) - baseline;
  return s / static_cast<double>(draws);
}

CriticalSigma critical_sigma(std::span<const double> w, double epsilon, NoiseMode mode, const LossEval& loss,
                             std::uint64_t seed, const SigmaSearchConfig& cfg) {
  require(epsilon >= 0.0, "critical sigma: epsilon must be non-negative");
  require(cfg.draws >= 1, "critical sigma: noise_draws must be >= 1");
  require(cfg.sigma_lo > 0.0 && cfg.sigma_hi > cfg.sigma_lo, "critical sigma: bad search interval");
  const double baseline = loss(w);
  require(std::isfinite(baseline), "critical sigma: baseline loss is non-finite");
  auto f = [&](double s) {
    const double d = mean_noise_delta(w, s, mode, loss, baseline, cfg.draws, seed);
    return std::isfinite(d) ? d : std::numeric_limits<double>::infinity();
  };
  auto crossed = [&](double d) { return d >= epsilon; };

  double lo = cfg.sigma_lo, hi = cfg.sigma_hi;
  const double f_lo = f(lo);
  if (crossed(f_lo)) return {lo, f_lo};
  double f_hi = f(hi);
  if (!crossed(f_hi))
    fail(ErrorKind::unreachable_tolerance, "critical sigma: no crossing of " + harness::fmt_double(epsilon) +
                                               " within sigma in [" + harness::fmt_double(cfg.sigma_lo) + ", " +
                                               harness::fmt_double(cfg.sigma_hi) + "]");
  while (hi / lo > 1.0 + cfg.relative_tolerance) {
    const double mid = std::sqrt(lo * hi);
    const double fm = f(mid);
    if (crossed(fm)) hi = mid, f_hi = fm;
    else lo = mid;
  }
  return {hi, f_hi};
}

// ---- pruning --------------------------------------------------------------------------

std::size_t hidden_unit_count(const zoo::MlpModel& model) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < model.layer_count(); ++l) n += model.layer(l).out;
  return n;
}

PruneResult prune_and_retrain(const zoo::MlpModel& model, const zoo::Dataset& data, std::span<const double> params,
                              double keep_fraction, const zoo::TrainConfig& original, std::uint64_t seed,
                              std::size_t retrain_steps) {
  require(params.size() == model.parameter_count(), "prune: parameter vector does not match model");
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0)
    fail(ErrorKind::invalid_input, "prune: keep fraction p must lie in (0, 1]");
  PruneResult res;
  res.unit_count = hidden_unit_count(model);
  require(res.unit_count >= 1, "prune: model has no hidden units");
  const auto n_prune =
      static_cast<std::size_t>(std::floor((1.0 - keep_fraction) * static_cast<double>(res.unit_count) + 1e-9));
  res.no_op = n_prune == 0;

  // Partial Fisher-Yates: the first n_prune entries are a uniform random subset.
  std::vector<std::size_t> units(res.unit_count);
  std::iota(units.begin(), units.end(), 0);
  core::RngStream rng(seed, 0);
  for (std::size_t i = 0; i < n_prune; ++i) std::swap(units[i], units[i + rng.below(res.unit_count - i)]);
  res.pruned_units.assign(units.begin(), units.begin() + static_cast<std::ptrdiff_t>(n_prune));
  std::sort(res.pruned_units.begin(), res.pruned_units.end());

  res.mask.assign(model.parameter_count(), 1.0);
  for (std::size_t u : res.pruned_units) {
    std::size_t l = 0, j = u;
    while (j >= model.layer(l).out) j -= model.layer(l++).out;
    const auto& in = model.layer(l);  // unit j is output j of layer l
    for (std::size_t c = 0; c < in.in; ++c) res.mask[in.weight_offset + j * in.in + c] = 0.0;
    const auto& next = model.layer(l + 1);
    for (std::size_t r = 0; r < next.out; ++r) res.mask[next.weight_offset + r * next.in + j] = 0.0;
  }
  res.pruned.assign(params.begin(), params.end());
  for (std::size_t i = 0; i < res.pruned.size(); ++i) res.pruned[i] *= res.mask[i];

  res.baseline_loss = model.mean_loss(params, data);
  res.pruned_loss = model.mean_loss(res.pruned, data);
  res.min_retrain_loss = res.pruned_loss;
  res.retrained = res.pruned;
  if (retrain_steps > 0) {
    zoo::TrainConfig rc = original;
    rc.steps = static_cast<std::int64_t>(retrain_steps);
    rc.learning_rate = original.learning_rate / 10.0;
    rc.seed = seed;
    rc.schedule.clear();
    const auto trace = zoo::train_sgd(model, data, rc, res.pruned, res.mask, true);
    res.retrained = trace.final_params;
    res.min_retrain_loss = trace.min_loss;
  }
  res.delta_loss = res.min_retrain_loss - res.baseline_loss;
  return res;
}

// ---- records --------------------------------------------------------------------------

std::string sweep_csv_header() { return "step,scheme,control_parameter,delta_loss,critical_value,epsilon,seed"; }

std::string sweep_csv_row(const SweepRecord& r) {
  auto opt = [](double v) { return std::isnan(v) ? std::string() : harness::fmt_double(v); };
  return std::to_string(r.step) + "," + r.scheme + "," + harness::fmt_double(r.control_parameter) + "," +
         harness::fmt_double(r.delta_loss) + "," + opt(r.critical_value) + "," + opt(r.epsilon) + "," +
         std::to_string(r.seed);
}

}  // namespace smdl::compress
