#include "smdl/llc/llc.hpp"

#include <cmath>
#include <exception>
#include <limits>

#include "json.hpp"
#include "smdl/core/rng.hpp"
#include "smdl/harness/format.hpp"

namespace smdl::llc {

void LlcConfig::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    fail(ErrorKind::invalid_input, "llc config: " + field + " " + why);
  };
  if (!(n >= 1.0)) bad("n", "must be >= 1");
  if (!(beta_n > 0.0)) bad("beta_n", "must be > 0");
  if (!(gamma >= 0.0)) bad("gamma", "must be >= 0");
  if (!(step_size > 0.0)) bad("step_size", "must be > 0");
  if (chains < 1) bad("chains", "must be >= 1");
  if (steps_per_chain < 1) bad("steps_per_chain", "must be >= 1");
  if (effective_burn_in() >= steps_per_chain) bad("burn_in", "must be < steps_per_chain");
  if (preconditioner == Preconditioner::rmsprop) {
    if (!(rms_decay >= 0.0 && rms_decay < 1.0)) bad("rms_decay", "must lie in [0, 1)");
    if (!(rms_stabilizer > 0.0)) bad("rms_stabilizer", "must be > 0");
  }
}

namespace {

void check_dims(std::span<const double> w, std::span<const double> g, std::span<const double> ws,
                const zoo::Box& b, std::span<const double> noise) {
  require(g.size() == w.size() && ws.size() == w.size() && noise.size() == w.size() && b.dimension() == w.size(),
          "sgld: dimension mismatch");
}

std::size_t finish(std::span<double> w, const zoo::Box& bounds) {
  for (double v : w)
    if (!std::isfinite(v)) fail(ErrorKind::chain_diverged, "sgld: non-finite parameter after update");
  return bounds.clamp(w);
}

}  // namespace

std::size_t sgld_update(std::span<double> w, std::span<const double> grad_loss, std::span<const double> w_star,
                        const zoo::Box& bounds, const LlcConfig& cfg, std::span<const double> noise) {
  check_dims(w, grad_loss, w_star, bounds, noise);
  const double half = 0.5 * cfg.step_size, root = std::sqrt(cfg.step_size);
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] += -half * (cfg.beta_n * grad_loss[i] + cfg.gamma * (w[i] - w_star[i])) + root * noise[i];
  return finish(w, bounds);
}

std::size_t psgld_update(std::span<double> w, std::span<const double> grad_loss, std::span<const double> w_star,
                         const zoo::Box& bounds, const LlcConfig& cfg, std::span<const double> noise, RmsState& state) {
  check_dims(w, grad_loss, w_star, bounds, noise);
  if (state.v.size() != w.size()) state.v.assign(w.size(), 0.0);
  const double half = 0.5 * cfg.step_size, root = std::sqrt(cfg.step_size);
  for (std::size_t i = 0; i < w.size(); ++i) {
    state.v[i] = cfg.rms_decay * state.v[i] + (1.0 - cfg.rms_decay) * grad_loss[i] * grad_loss[i];
    const double g = 1.0 / (std::sqrt(state.v[i]) + cfg.rms_stabilizer);
    w[i] += -half * g * (cfg.beta_n * grad_loss[i] + cfg.gamma * (w[i] - w_star[i])) + root * std::sqrt(g) * noise[i];
  }
  return finish(w, bounds);
}

zoo::ParamPoint sgld_step(const zoo::ParamPoint& w, std::span<const double> grad_loss, const zoo::ParamPoint& w_star,
                          const LlcConfig& cfg, std::span<const double> noise) {
  std::vector<double> next = w.w;
  sgld_update(next, grad_loss, w_star.w, w.bounds, cfg, noise);
  return {std::move(next), w.bounds};
}

zoo::ParamPoint psgld_step(const zoo::ParamPoint& w, std::span<const double> grad_loss, const zoo::ParamPoint& w_star,
                           const LlcConfig& cfg, std::span<const double> noise, RmsState& state) {
  std::vector<double> next = w.w;
  psgld_update(next, grad_loss, w_star.w, w.bounds, cfg, noise, state);
  return {std::move(next), w.bounds};
}

namespace {

double baseline(const zoo::Objective& obj, std::span<const double> w_star, const LlcConfig& cfg) {
  const std::size_t nb = obj.batch_count();
  if (nb == 0) return obj.loss(w_star, 0);
  const std::size_t use = (cfg.baseline_batches == 0 || cfg.baseline_batches > nb) ? nb : cfg.baseline_batches;
  double s = 0.0;
  for (std::size_t b = 0; b < use; ++b) s += obj.loss(w_star, b);
  return s / static_cast<double>(use);
}

struct ChainResult {
  std::vector<double> trace;
  double mean = std::numeric_limits<double>::quiet_NaN();
  std::size_t clamps = 0;
  double distance = 0.0;
  std::exception_ptr error;
  std::size_t failed_step = 0;
};

void run_chain(const zoo::Objective& obj, const zoo::ParamPoint& w_star, const LlcConfig& cfg, std::uint64_t seed,
               std::size_t chain, ChainResult& out) {
  const std::size_t d = w_star.dimension(), burn = cfg.effective_burn_in();
  core::RngStream rng(seed, chain);
  std::vector<double> w = w_star.w, grad(d), noise(d);
  RmsState rms;
  out.trace.reserve(cfg.steps_per_chain);
  double sum = 0.0, dist = 0.0;
  std::size_t kept = 0;
  for (std::size_t t = 0; t < cfg.steps_per_chain; ++t) {
    out.failed_step = t;
    const std::size_t batch = obj.batch_count() == 0 ? 0 : rng.below(obj.batch_count());
    const double loss = obj.loss_and_grad(w, batch, grad);
    if (!std::isfinite(loss)) fail(ErrorKind::chain_diverged, "non-finite loss");
    out.trace.push_back(loss);
    if (t >= burn) {
      sum += loss;
      double r = 0.0;
      for (std::size_t i = 0; i < d; ++i) r += (w[i] - w_star.w[i]) * (w[i] - w_star.w[i]);
      dist += std::sqrt(r);
      ++kept;
      out.mean = sum / static_cast<double>(kept);
    }
    rng.fill_normal(noise);
    out.clamps += cfg.preconditioner == Preconditioner::rmsprop
                      ? psgld_update(w, grad, w_star.w, w_star.bounds, cfg, noise, rms)
                      : sgld_update(w, grad, w_star.w, w_star.bounds, cfg, noise);
  }
  out.distance = dist / static_cast<double>(kept);
}

}  // namespace

LlcEstimate estimate_llc(const zoo::Objective& objective, const zoo::ParamPoint& w_star, const LlcConfig& cfg,
                         std::uint64_t seed, kernels::Exec exec) {
  cfg.validate();
  require(objective.dimension() == w_star.dimension(), "estimate_llc: objective and w* dimensions differ");

  LlcEstimate est;
  est.config = cfg;
  est.seed = seed;
  est.baseline_loss = baseline(objective, w_star.w, cfg);
  if (!std::isfinite(est.baseline_loss)) fail(ErrorKind::chain_diverged, "estimate_llc: non-finite baseline loss");

  std::vector<ChainResult> res(cfg.chains);
  const bool parallel = exec == kernels::Exec::parallel;
#pragma omp parallel for schedule(static, 1) if (parallel)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(cfg.chains); ++c) {
    try {
      run_chain(objective, w_star, cfg, seed, static_cast<std::size_t>(c), res[c]);
    } catch (...) {
      res[c].error = std::current_exception();
    }
  }

  for (std::size_t c = 0; c < cfg.chains; ++c) {
    if (!res[c].error) continue;
    std::vector<double> partial;
    for (const auto& r : res) partial.push_back(r.mean);
    std::string why = "chain diverged";
    try {
      std::rethrow_exception(res[c].error);
    } catch (const std::exception& e) {
      why = e.what();
    }
    throw ChainDivergedError(c, res[c].failed_step, partial,
                             "llc chain " + std::to_string(c) + " diverged at step " +
                                 std::to_string(res[c].failed_step) + ": " + why);
  }

  double total = 0.0;
  for (auto& r : res) {
    est.per_chain_means.push_back(r.mean);
    est.clamp_events.push_back(r.clamps);
    est.mean_distance.push_back(r.distance);
    total += r.mean;
    est.trace.push_back(std::move(r.trace));
  }
  est.lambda_hat = cfg.beta_n * (total / static_cast<double>(cfg.chains) - est.baseline_loss);
  est.negative = est.lambda_hat < 0.0;
  return est;
}

double lambda_from_trace(const LlcEstimate& est) {
  const std::size_t burn = est.config.effective_burn_in();
  double total = 0.0;
  for (const auto& t : est.trace) {
    double s = 0.0;
    for (std::size_t i = burn; i < t.size(); ++i) s += t[i];
    total += s / static_cast<double>(t.size() - burn);
  }
  return est.config.beta_n * (total / static_cast<double>(est.trace.size()) - est.baseline_loss);
}

std::string to_json(const LlcEstimate& est) {
  const LlcConfig& c = est.config;
  nlohmann::ordered_json j;
  j["lambda_hat"] = est.lambda_hat;
  j["baseline_loss"] = est.baseline_loss;
  j["per_chain_means"] = est.per_chain_means;
  j["clamp_events"] = est.clamp_events;
  j["mean_distance"] = est.mean_distance;
  j["negative"] = est.negative;
  j["seed"] = est.seed;
  j["config"] = {{"n", c.n},
                 {"beta_n", c.beta_n},
                 {"gamma", c.gamma},
                 {"step_size", c.step_size},
                 {"chains", c.chains},
                 {"steps_per_chain", c.steps_per_chain},
                 {"burn_in", c.effective_burn_in()},
                 {"batch_size", c.batch_size},
                 {"baseline_batches", c.baseline_batches},
                 {"preconditioner", c.preconditioner == Preconditioner::rmsprop ? "rmsprop" : "none"},
                 {"rms_decay", c.rms_decay},
                 {"rms_stabilizer", c.rms_stabilizer}};
  return j.dump(2) + "\n";
}

std::string trace_csv(const LlcEstimate& est) {
  std::string out = "step,chain,loss\n";
  for (std::size_t c = 0; c < est.trace.size(); ++c)
    for (std::size_t t = 0; t < est.trace[c].size(); ++t)
      out += std::to_string(t) + "," + std::to_string(c) + "," + harness::fmt_double(est.trace[c][t]) + "\n";
  return out;
}

}  // namespace smdl::llc
