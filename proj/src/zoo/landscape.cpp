#include "smdl/zoo/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smdl/core/error.hpp"

namespace smdl::zoo {

Rational reduced(std::int64_t num, std::int64_t den) {
  require(den != 0, "rational: zero denominator");
  const std::int64_t g = std::gcd(num, den);
  Rational r{num / (g == 0 ? 1 : g), den / (g == 0 ? 1 : g)};
  if (r.den < 0) {
    r.num = -r.num;
    r.den = -r.den;
  }
  return r;
}

Landscape::Landscape(std::string name, Box bounds, std::vector<double> reference,
                     std::optional<GroundTruth> truth)
    : name_(std::move(name)), bounds_(std::move(bounds)), reference_(std::move(reference)),
      truth_(truth) {
  require(reference_.size() == bounds_.dimension(), "landscape: reference point dimension mismatch");
  require(bounds_.contains(reference_), "landscape: reference point outside bounds");
}

namespace {

class Quadratic final : public Landscape {
 public:
  Quadratic(std::string name, std::vector<double> curvatures, Box bounds)
      : Landscape(std::move(name), bounds, std::vector<double>(bounds.dimension(), 0.0),
                  GroundTruth{reduced(static_cast<std::int64_t>(bounds.dimension()), 2), 1}),
        c_(std::move(curvatures)) {}

  double value(std::span<const double> w) const override {
    double k = 0.0;
    for (std::size_t i = 0; i < c_.size(); ++i) k += c_[i] * w[i] * w[i];
    return k;
  }

  double value_and_gradient(std::span<const double> w, std::span<double> grad) const override {
    for (std::size_t i = 0; i < c_.size(); ++i) grad[i] = 2.0 * c_[i] * w[i];
    return value(w);
  }

 private:
  std::vector<double> c_;
};

class NormalCrossing final : public Landscape {
 public:
  NormalCrossing(NormalCrossingSpec spec, Box bounds)
      : Landscape("normal_crossing", bounds, std::vector<double>(bounds.dimension(), 0.0),
                  normal_crossing_truth(spec)),
        spec_(std::move(spec)) {}

  double value(std::span<const double> w) const override {
    double k = 1.0;
    for (std::size_t i : spec_.active) k *= std::pow(w[i], 2 * spec_.exponents[i]);
    return k;
  }

  double value_and_gradient(std::span<const double> w, std::span<double> grad) const override {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t j : spec_.active) {
      const int kj = spec_.exponents[j];
      double g = 2.0 * kj * std::pow(w[j], 2 * kj - 1);
      for (std::size_t i : spec_.active)
        if (i != j) g *= std::pow(w[i], 2 * spec_.exponents[i]);
      grad[j] = g;
    }
    return value(w);
  }

 private:
  NormalCrossingSpec spec_;
};

class Flat final : public Landscape {
 public:
  explicit Flat(Box bounds)
      : Landscape("flat", bounds, bounds.center(), std::nullopt) {}

  double value(std::span<const double>) const override { return 0.0; }
  double value_and_gradient(std::span<const double>, std::span<double> grad) const override {
    std::fill(grad.begin(), grad.end(), 0.0);
    return 0.0;
  }
};

void require_origin_inside(const Box& bounds) {
  require(bounds.contains(std::vector<double>(bounds.dimension(), 0.0)),
          "landscape: bounds must contain the origin");
}

}  // namespace

LandscapePtr make_quadratic(std::size_t d, Box bounds) {
  require(d >= 1, "quadratic: dimension must be at least 1");
  require(bounds.dimension() == d, "quadratic: bounds dimension mismatch");
  require_origin_inside(bounds);
  return std::make_shared<Quadratic>("quadratic", std::vector<double>(d, 1.0), std::move(bounds));
}

LandscapePtr make_quadratic(std::size_t d) { return make_quadratic(d, Box::cube(d, -1.0, 1.0)); }

LandscapePtr make_anisotropic_quadratic(std::vector<double> curvatures, Box bounds) {
  require(!curvatures.empty(), "anisotropic quadratic: need at least one curvature");
  require(bounds.dimension() == curvatures.size(), "anisotropic quadratic: bounds dimension mismatch");
  for (double c : curvatures) require(c > 0.0 && std::isfinite(c), "anisotropic quadratic: curvatures must be positive");
  require_origin_inside(bounds);
  return std::make_shared<Quadratic>("anisotropic_quadratic", std::move(curvatures), std::move(bounds));
}

GroundTruth normal_crossing_truth(const NormalCrossingSpec& spec) {
  require(!spec.active.empty(), "normal crossing: active set must be non-empty");
  int kmax = 0;
  for (std::size_t i : spec.active) {
    require(i < spec.exponents.size(), "normal crossing: active index out of range");
    require(spec.exponents[i] >= 1, "normal crossing: exponents must be >= 1");
    kmax = std::max(kmax, spec.exponents[i]);
  }
  int mult = 0;
  for (std::size_t i : spec.active)
    if (spec.exponents[i] == kmax) ++mult;
  return GroundTruth{reduced(1, 2 * kmax), mult};
}

LandscapePtr make_normal_crossing(NormalCrossingSpec spec, Box bounds) {
  std::vector<std::size_t> sorted = spec.active;
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
          "normal crossing: duplicate active index");
  normal_crossing_truth(spec);
  require(bounds.dimension() == spec.exponents.size(), "normal crossing: bounds dimension mismatch");
  require_origin_inside(bounds);
  return std::make_shared<NormalCrossing>(std::move(spec), std::move(bounds));
}

LandscapePtr make_normal_crossing(NormalCrossingSpec spec) {
  const std::size_t d = spec.exponents.size();
  return make_normal_crossing(std::move(spec), Box::cube(d, -1.0, 1.0));
}

LandscapePtr make_flat(Box bounds) { return std::make_shared<Flat>(std::move(bounds)); }

}  // namespace smdl::zoo
