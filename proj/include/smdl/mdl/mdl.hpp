#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smdl/core/rng.hpp"
#include "smdl/kernels/exec.hpp"
#include "smdl/volume/volume.hpp"
#include "smdl/zoo/categorical.hpp"

namespace smdl::mdl {

// ---- restricted simplex ---------------------------------------------------------------

// Distribution on a finite outcome space whose entries sum to 1 (to 1e-12) and are all
// at least `floor`.
class SimplexDist {
 public:
  SimplexDist(std::vector<double> probs, double floor = 0.0);

  std::size_t size() const noexcept { return p_.size(); }
  double floor() const noexcept { return floor_; }
  double operator[](std::size_t x) const { return p_[x]; }
  std::span<const double> probs() const noexcept { return p_; }

 private:
  std::vector<double> p_;
  double floor_;
};

// KL(q || p) in nats. Throws invalid_input when the outcome spaces differ.
double kl(const SimplexDist& q, const SimplexDist& p);

inline constexpr double kNatsPerBit = 0.69314718055994530942;
inline double to_bits(double nats) { return nats / kNatsPerBit; }

// Multinomial outcome counts of n i.i.d. draws from q (exact sampler, O(sqrt n) per outcome).
std::vector<std::uint64_t> sample_counts(core::RngStream& rng, std::span<const double> q, std::uint64_t n);

// ---- epsilon-net ----------------------------------------------------------------------

struct NetConfig {
  std::size_t grid_per_axis = 801;   // pushforward candidates: a regular grid over W
  std::uint64_t mc_samples = 1000000;
  std::size_t audit_samples = 10000;
  // Greedy covers the candidates to ε (1 − margin) so points between grid nodes stay inside ε.
  double cover_margin = 0.1;
  // Grid refinements (g -> 2g − 1) tried after a failed audit before raising covering_failure.
  std::size_t max_refinements = 2;
  kernels::Exec exec = kernels::Exec::parallel;
};

struct EpsilonNet {
  double epsilon = 0.0;
  std::vector<std::vector<double>> centers;  // distributions from the model image
  std::vector<double> vr_volumes;
  std::vector<double> vr_standard_errors;
  std::vector<double> code_lengths;  // log(Vol(W) / V^R), nats; +inf when V^R has no hits
  double box_volume = 0.0;
  std::uint64_t mc_samples = 0;
  std::size_t audit_points = 0;
  std::size_t grid_per_axis = 0;  // grid that passed the audit

  std::size_t size() const noexcept { return centers.size(); }
  // Sum of V^R / Vol(W): 1 for a partition, larger when ε-balls overlap.
  double kraft_sum() const;
  std::size_t zero_volume_centers() const;
};

// Greedy farthest-point covering of the grid pushforward {p_w}, started from the image of
// the box center. Ties pick the lowest candidate index. V^R per center uses one shared
// Monte-Carlo sample of W. The covering property is audited on `audit_samples` uniform
// points; a failed audit refines the grid, and once refinements run out the uncovered
// point raises covering_failure naming the witness.
EpsilonNet build_eps_net(const zoo::CategoricalModel& model, double epsilon, std::uint64_t seed,
                         const NetConfig& cfg = {});

// Index of the center minimizing KL(p || center); ties go to the lowest index.
std::size_t nearest_center(const EpsilonNet& net, std::span<const double> p);

// Minimum over centers of KL(p || center).
double covering_distance(const EpsilonNet& net, std::span<const double> p);

// Code lengths in bits.
std::string net_csv(const EpsilonNet& net);

// ---- two-part code --------------------------------------------------------------------

struct RedundancyRun {
  std::uint64_t n = 0;
  double a = 0.0;
  std::uint64_t seed = 0;
  std::size_t center = 0;
  double code_length = 0.0;  // nats
  double excess = 0.0;       // n K_n(p*_n), nats
  double redundancy = 0.0;   // code_length + excess, nats
  std::vector<std::uint64_t> counts;
};

// Draws n samples from q (seeded), fits the MLE over the model image, snaps it to the
// nearest net center and assembles R_n = log(Vol(W)/V^R) + Σ log(q(x_i)/p*(x_i)).
// The net must have been built at ε = a / n.
RedundancyRun two_part_redundancy(const zoo::CategoricalModel& model, const EpsilonNet& net,
                                  std::span<const double> q, std::uint64_t n, double a, std::uint64_t seed);

// Builds the net at ε = a / n (net seed `net_seed`) and runs one redundancy draw.
RedundancyRun two_part_redundancy(const zoo::CategoricalModel& model, std::span<const double> q, std::uint64_t n,
                                  double a, std::uint64_t seed, std::uint64_t net_seed, const NetConfig& cfg = {});

// Lengths in bits.
std::string redundancy_csv_header();
std::string redundancy_csv_row(const RedundancyRun& r);

// ---- validators -----------------------------------------------------------------------

struct BoundCheck {
  double lower = 0.0;
  double value = 0.0;
  double upper = 0.0;
  bool pass = true;
};

// ½‖p−q‖² <= KL(q||p) <= ‖p−q‖² / (2m). Throws if either input is outside the restricted simplex.
BoundCheck validate_kl_l2(const SimplexDist& q, const SimplexDist& p, double m_simplex);

// KL(p||p') <= (1/(2m)) (KL(q||p) + KL(q||p')); lower is unused (0).
BoundCheck validate_triangle(const SimplexDist& q, const SimplexDist& p, const SimplexDist& p_prime,
                             double m_simplex);

// (c − KL) KL <= Var_q[log q/p] <= (c' − KL) KL with c = 2/max(1, e^{-inf ℓ}) and c' = 2/min(1, e^{-sup ℓ}).
BoundCheck validate_variance_bound(const SimplexDist& q, const SimplexDist& p);

struct FluctuationReport {
  std::uint64_t n = 0;
  std::size_t trials = 0;
  double kl = 0.0;
  double mean = 0.0;  // of n (K_n − KL)
  double se = 0.0;
  double p99_abs = 0.0;  // 99th percentile of |n (K_n − KL)|
  double bernstein_variance = 0.0;  // n Var_q[log q/p]
  double bound_m = 0.0;             // max_x |log q/p − KL|
  std::vector<double> t;
  std::vector<double> tail_fraction;  // empirical P(n |K_n − KL| >= t)
  std::vector<double> tail_bound;     // 2 exp(−t² / (2 (n Var + M t / 3)))
  bool pass = true;                   // every empirical tail at or below its bound
};

FluctuationReport validate_kn_fluctuation(const SimplexDist& q, const SimplexDist& p, std::uint64_t n,
                                          std::size_t trials, std::uint64_t seed,
                                          kernels::Exec exec = kernels::Exec::parallel);

struct InclusionCheck {
  double c = 0.0;  // 1/m
  double epsilon = 0.0;
  volume::VolumeEstimate inner;   // V_q(ε)
  volume::VolumeEstimate middle;  // V^R_{p*}(C ε)
  volume::VolumeEstimate outer;   // V_q((C/2)(C+1) ε)
  bool pass = true;               // both inequalities within 3 combined SE
};

// V_q(ε) <= V^R_{p*}(Cε) <= V_q((C/2)(C+1)ε) with C = 1/m, on common random numbers.
InclusionCheck validate_volume_inclusions(const zoo::CategoricalModel& model, const SimplexDist& q,
                                          const SimplexDist& p_star, double epsilon, std::uint64_t mc_samples,
                                          std::uint64_t seed, kernels::Exec exec = kernels::Exec::parallel);

// Uniform draw from the restricted simplex {p : min p >= m} on k outcomes.
SimplexDist random_restricted(core::RngStream& rng, std::size_t k, double m_simplex);

}  // namespace smdl::mdl
