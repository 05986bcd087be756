#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smdl/core/error.hpp"
#include "smdl/kernels/exec.hpp"
#include "smdl/zoo/box.hpp"
#include "smdl/zoo/objective.hpp"

namespace smdl::llc {

enum class Preconditioner { none, rmsprop };

struct LlcConfig {
  double n = 1.0;  // sample size; only informational, nβ is the single knob
  double beta_n = 30.0;
  double gamma = 300.0;
  double step_size = 1e-3;
  std::size_t chains = 4;
  std::size_t steps_per_chain = 200;
  std::optional<std::size_t> burn_in;  // default: 10% of steps_per_chain
  std::size_t batch_size = 32;         // informational for analytic landscapes
  std::size_t baseline_batches = 8;    // 0 = all batches
  Preconditioner preconditioner = Preconditioner::none;
  double rms_decay = 0.99;
  double rms_stabilizer = 1e-8;

  std::size_t effective_burn_in() const {
    return burn_in ? *burn_in : steps_per_chain / 10;
  }
  // Throws invalid_input naming the offending field.
  void validate() const;
};

// Second-moment accumulator for the preconditioned sampler.
struct RmsState {
  std::vector<double> v;
};

// w <- w - (eps/2) [nβ grad + γ (w - w*)] + sqrt(eps) noise, clamped to `bounds`.
// Returns the number of clamped coordinates. Throws chain_diverged on a non-finite result.
std::size_t sgld_update(std::span<double> w, std::span<const double> grad_loss, std::span<const double> w_star,
                        const zoo::Box& bounds, const LlcConfig& cfg, std::span<const double> noise);

// RMSProp-preconditioned variant: v <- decay v + (1 - decay) grad^2, G = 1/(sqrt(v) + stabilizer);
// drift is scaled by G and noise by sqrt(G). No Γ correction term.
std::size_t psgld_update(std::span<double> w, std::span<const double> grad_loss, std::span<const double> w_star,
                         const zoo::Box& bounds, const LlcConfig& cfg, std::span<const double> noise, RmsState& state);

zoo::ParamPoint sgld_step(const zoo::ParamPoint& w, std::span<const double> grad_loss, const zoo::ParamPoint& w_star,
                          const LlcConfig& cfg, std::span<const double> noise);
zoo::ParamPoint psgld_step(const zoo::ParamPoint& w, std::span<const double> grad_loss, const zoo::ParamPoint& w_star,
                           const LlcConfig& cfg, std::span<const double> noise, RmsState& state);

struct LlcEstimate {
  double lambda_hat = 0.0;
  std::vector<double> per_chain_means;
  double baseline_loss = 0.0;
  std::vector<std::vector<double>> trace;  // [chain][step] loss at the current point
  LlcConfig config;
  std::uint64_t seed = 0;
  std::vector<std::size_t> clamp_events;        // per chain
  std::vector<double> mean_distance;            // per chain, post-burn-in mean ||w - w*||
  bool negative = false;
};

class ChainDivergedError : public Error {
 public:
  ChainDivergedError(std::size_t chain, std::size_t step, std::vector<double> partial_means, const std::string& what)
      : Error(ErrorKind::chain_diverged, what), chain_(chain), step_(step), partial_(std::move(partial_means)) {}

  std::size_t chain() const noexcept { return chain_; }
  std::size_t step() const noexcept { return step_; }
  // Running post-burn-in loss means of every chain at the time of failure (NaN if none yet).
  const std::vector<double>& partial_means() const noexcept { return partial_; }

 private:
  std::size_t chain_;
  std::size_t step_;
  std::vector<double> partial_;
};

// λ̂ = nβ (mean over chains of post-burn-in mean loss - L_n(w*)). Chains start at w*,
// use RngStream(seed, chain) and run in parallel; the reduction is ordered by chain.
LlcEstimate estimate_llc(const zoo::Objective& objective, const zoo::ParamPoint& w_star, const LlcConfig& cfg,
                         std::uint64_t seed, kernels::Exec exec = kernels::Exec::parallel);

// Recomputes λ̂ from the stored trace and baseline.
double lambda_from_trace(const LlcEstimate& est);

std::string to_json(const LlcEstimate& est);
// CSV rows (step, chain, loss).
std::string trace_csv(const LlcEstimate& est);

}  // namespace smdl::llc
