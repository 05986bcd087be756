#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smdl/core/svd.hpp"
#include "smdl/zoo/mlp.hpp"

namespace smdl::compress {

// Deterministic loss of a flat parameter vector (fixed data, fixed batches).
using LossEval = std::function<double(std::span<const double>)>;

// ---- quantization ---------------------------------------------------------------------

enum class MMode { loss_minimized, max_abs };

struct QuantizationSpec {
  int n_q = 4;
  double m_clamp = 1.0;
  MMode mode = MMode::loss_minimized;  // how m_clamp was chosen; quantize() ignores it
};

// Throws invalid_input unless n_q is even and >= 4 and m_clamp > 0.
void validate(const QuantizationSpec& spec);

// Grid spacing m / (n_q/2 - 1).
double grid_step(const QuantizationSpec& spec);

// Clamp to [-m, m], then round(w / Δ) Δ.
std::vector<double> quantize(std::span<const double> w, const QuantizationSpec& spec);

struct MSearchConfig {
  std::size_t grid_points = 64;
  double lo_fraction = 0.1;
  double relative_tolerance = 1e-3;
};

struct MSearchResult {
  double m = 0.0;
  double loss = 0.0;
  double delta_loss = 0.0;
};

double max_abs(std::span<const double> w);

// Geometric sweep of m over [lo_fraction max|w|, max|w|] followed by golden-section
// refinement around the best grid point. Since max|w| is a candidate, the result never
// exceeds the max-abs choice.
MSearchResult quantize_loss_min_m(std::span<const double> w, int n_q, const LossEval& loss,
                                  const MSearchConfig& cfg = {});
MSearchResult quantize_loss_min_m(std::span<const double> w, int n_q, const LossEval& loss, double baseline,
                                  const MSearchConfig& cfg);

// ΔLoss at n_q under either clamp mode.
MSearchResult quantization_delta(std::span<const double> w, int n_q, MMode mode, const LossEval& loss,
                                 double baseline, const MSearchConfig& cfg = {});

struct CriticalConfig {
  int nq_cap = 1 << 16;
  MMode mode = MMode::loss_minimized;
  MSearchConfig m_search;
};

struct CriticalNq {
  int n_q = 0;
  double delta_loss = 0.0;
  double m = 0.0;
  std::vector<std::pair<int, double>> evaluated;  // (n_q, ΔLoss) in evaluation order
};

// Smallest even n_q with ΔLoss <= ε under the monotone-search assumption: doubling
// bracket from 4, bisection over even values, then a verification pass at n_q* and n_q* - 2.
CriticalNq critical_nq(std::span<const double> w, double epsilon, const LossEval& loss,
                       const CriticalConfig& cfg = {});

// ---- factorization --------------------------------------------------------------------

// Per-layer parameter count of the stored triple (U: d1 x n, S: n, V: n x d2).
std::size_t factorized_parameter_count(std::size_t d1, std::size_t d2, std::size_t n);

// Number of singular values kept: ceil(keep_fraction * min(d1, d2)).
std::size_t kept_rank(std::size_t d1, std::size_t d2, double keep_fraction);

// All hidden-to-hidden weight matrices (first and last layers excluded).
std::vector<std::size_t> hidden_layer_selection(const zoo::MlpModel& model);

struct FactorizedLayer {
  std::size_t layer = 0;
  std::size_t rank = 0;
  core::SvdResult factors;
  std::size_t params_before = 0;
  std::size_t params_after = 0;
};

struct FactorizeResult {
  std::vector<double> params;  // dense parameters with each selected W replaced by U S V
  std::vector<FactorizedLayer> layers;
  std::size_t model_params_before = 0;
  std::size_t model_params_after = 0;
  double compression_fraction = 1.0;  // model_params_after / model_params_before
};

FactorizeResult factorize(const zoo::MlpModel& model, std::span<const double> params, double keep_fraction,
                          const std::vector<std::size_t>& layers);

struct CriticalFraction {
  double keep_fraction = 1.0;
  double compression_fraction = 1.0;
  double delta_loss = 0.0;
  std::size_t grid_index = 0;  // keep_fraction = grid_index / grid_size
  std::size_t grid_size = 0;
  std::vector<std::pair<double, double>> evaluated;  // (keep_fraction, ΔLoss)
};

// Keep fractions t / R for t = 1..R with R the largest min-dimension among selected layers.
// Returns the smallest fraction with ΔLoss <= ε (bisection plus verification).
CriticalFraction critical_compression_fraction(const zoo::MlpModel& model, std::span<const double> params,
                                               double epsilon, const LossEval& loss,
                                               const std::vector<std::size_t>& layers);

// ---- Gaussian noise -------------------------------------------------------------------

enum class NoiseMode { absolute, relative };

// absolute: w + σ ξ; relative: w + w σ ξ, with ξ from RngStream(seed, 0).
std::vector<double> add_noise(std::span<const double> w, double sigma, NoiseMode mode, std::uint64_t seed);

struct SigmaSearchConfig {
  std::size_t draws = 8;
  double sigma_lo = 1e-6;
  double sigma_hi = 10.0;
  double relative_tolerance = 1e-4;
};

// Mean ΔLoss over `draws` noise draws; draw k uses seed + k so every σ sees the same ξ.
double mean_noise_delta(std::span<const double> w, double sigma, NoiseMode mode, const LossEval& loss,
                        double baseline, std::size_t draws, std::uint64_t seed);

struct CriticalSigma {
  double sigma = 0.0;
  double delta_loss = 0.0;
};

// Smallest σ (to relative tolerance, by log-scale bisection) with mean ΔLoss >= ε.
CriticalSigma critical_sigma(std::span<const double> w, double epsilon, NoiseMode mode, const LossEval& loss,
                             std::uint64_t seed, const SigmaSearchConfig& cfg = {});

// ---- pruning --------------------------------------------------------------------------

struct PruneResult {
  std::vector<double> pruned;     // after zeroing, before retraining
  std::vector<double> retrained;  // final retrained parameters
  std::vector<double> mask;       // 0 on pruned weights
  std::vector<std::size_t> pruned_units;  // indices into the concatenated hidden units
  std::size_t unit_count = 0;
  double baseline_loss = 0.0;
  double pruned_loss = 0.0;
  double min_retrain_loss = 0.0;
  double delta_loss = 0.0;
  bool no_op = false;
};

std::size_t hidden_unit_count(const zoo::MlpModel& model);

// Zeroes incoming and outgoing weights of floor((1 - p) N_h) uniformly chosen hidden
// units (biases kept) and retrains for `retrain_steps` at lr / 10 with those weights masked.
// ΔLoss = minimum full-data loss seen during retraining minus the unpruned loss.
PruneResult prune_and_retrain(const zoo::MlpModel& model, const zoo::Dataset& data, std::span<const double> params,
                              double keep_fraction, const zoo::TrainConfig& original, std::uint64_t seed,
                              std::size_t retrain_steps = 1000);

// ---- records --------------------------------------------------------------------------

struct SweepRecord {
  std::int64_t step = 0;
  std::string scheme;
  double control_parameter = 0.0;
  double delta_loss = 0.0;
  double critical_value = std::numeric_limits<double>::quiet_NaN();  // NaN = absent
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  double lambda_hat = std::numeric_limits<double>::quiet_NaN();
};

std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRecord& r);

}  // namespace smdl::compress
