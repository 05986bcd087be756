#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "smdl/zoo/box.hpp"
#include "smdl/zoo/objective.hpp"

namespace smdl::zoo {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

Rational reduced(std::int64_t num, std::int64_t den);

// Known learning coefficient and multiplicity at the reference point.
struct GroundTruth {
  Rational lambda;
  int multiplicity = 1;
};

// Non-negative loss K on a box W with K(w*) = 0 at a declared reference point.
class Landscape : public Objective {
 public:
  Landscape(std::string name, Box bounds, std::vector<double> reference,
            std::optional<GroundTruth> truth);

  virtual double value(std::span<const double> w) const = 0;
  virtual double value_and_gradient(std::span<const double> w, std::span<double> grad) const = 0;

  std::size_t dimension() const override { return bounds_.dimension(); }
  double loss(std::span<const double> w, std::size_t) const override { return value(w); }
  double loss_and_grad(std::span<const double> w, std::size_t, std::span<double> grad) const override {
    return value_and_gradient(w, grad);
  }

  const std::string& name() const noexcept { return name_; }
  const Box& bounds() const noexcept { return bounds_; }
  std::span<const double> reference_point() const noexcept { return reference_; }
  const std::optional<GroundTruth>& ground_truth() const noexcept { return truth_; }

 private:
  std::string name_;
  Box bounds_;
  std::vector<double> reference_;
  std::optional<GroundTruth> truth_;
};

using LandscapePtr = std::shared_ptr<const Landscape>;

// K(w) = sum_i w_i^2, ground truth (d/2, 1).
LandscapePtr make_quadratic(std::size_t d, Box bounds);
LandscapePtr make_quadratic(std::size_t d);

// K(w) = sum_i c_i w_i^2 with positive curvatures; regular, ground truth (d/2, 1).
LandscapePtr make_anisotropic_quadratic(std::vector<double> curvatures, Box bounds);

// Normal-crossing potential K(w) = prod_{i in active} w_i^(2 k_i). Coordinates outside
// `active` are free. Indices are zero-based.
struct NormalCrossingSpec {
  std::vector<int> exponents;       // length d; only active entries are used
  std::vector<std::size_t> active;  // subset of [0, d)
};

GroundTruth normal_crossing_truth(const NormalCrossingSpec& spec);
LandscapePtr make_normal_crossing(NormalCrossingSpec spec, Box bounds);
LandscapePtr make_normal_crossing(NormalCrossingSpec spec);

// K == 0 everywhere.
LandscapePtr make_flat(Box bounds);

}  // namespace smdl::zoo
