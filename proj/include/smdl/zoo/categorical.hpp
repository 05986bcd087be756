#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "smdl/zoo/box.hpp"
#include "smdl/zoo/landscape.hpp"

namespace smdl::zoo {

// KL(q || p) in nats over a finite outcome space. Both vectors must have equal length
// and strictly positive entries wherever q is positive.
double kl_divergence(std::span<const double> q, std::span<const double> p);

// Parametric family w -> p_w on a finite outcome space, with every p_w bounded below by
// `simplex_floor()` and a realizable truth q = p_{w_dagger}.
class CategoricalModel {
 public:
  virtual ~CategoricalModel() = default;

  virtual std::size_t outcome_count() const = 0;
  virtual const Box& bounds() const = 0;
  virtual double simplex_floor() const = 0;
  virtual void distribution(std::span<const double> w, std::span<double> p) const = 0;
  virtual std::span<const double> truth_parameter() const = 0;

  // Maximum-likelihood distribution over the model image for the given outcome counts.
  virtual std::vector<double> mle(std::span<const std::uint64_t> counts) const = 0;

  std::size_t dimension() const { return bounds().dimension(); }
  std::vector<double> distribution(std::span<const double> w) const;
  std::vector<double> truth() const { return distribution(truth_parameter()); }
};

// Outcomes {0, 1} with p_w(1) = 1/2 + w_1 w_2. The default truth w = (0, 0) is the
// uniform distribution, where KL(q || p_w) vanishes on both axes.
class SingularBernoulli final : public CategoricalModel {
 public:
  SingularBernoulli(Box bounds, double m_simplex, std::vector<double> truth_w);

  std::size_t outcome_count() const override { return 2; }
  const Box& bounds() const override { return bounds_; }
  double simplex_floor() const override { return m_simplex_; }
  using CategoricalModel::distribution;
  void distribution(std::span<const double> w, std::span<double> p) const override;
  std::span<const double> truth_parameter() const override { return truth_w_; }
  std::vector<double> mle(std::span<const std::uint64_t> counts) const override;

  double prob_one(std::span<const double> w) const { return 0.5 + w[0] * w[1]; }
  // Range of p_w(1) over the box.
  std::pair<double, double> image_interval() const { return image_; }

 private:
  Box bounds_;
  double m_simplex_;
  std::vector<double> truth_w_;
  std::pair<double, double> image_;
};

std::shared_ptr<const SingularBernoulli> make_singular_bernoulli(
    Box bounds = Box::cube(2, -0.5, 0.5), double m_simplex = 0.2,
    std::vector<double> truth_w = {0.0, 0.0});

// K(w) = KL(q || p_w) for a singular Bernoulli model, as a landscape with gradient.
LandscapePtr make_kl_landscape(std::shared_ptr<const SingularBernoulli> model);

}  // namespace smdl::zoo
