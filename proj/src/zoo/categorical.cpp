#include "smdl/zoo/categorical.hpp"

#include <algorithm>
#include <cmath>

#include "smdl/core/error.hpp"

namespace smdl::zoo {

double kl_divergence(std::span<const double> q, std::span<const double> p) {
  require(q.size() == p.size(), "kl: distributions live on different outcome spaces");
  double s = 0.0;
  for (std::size_t x = 0; x < q.size(); ++x)
    if (q[x] > 0.0) s += q[x] * std::log(q[x] / p[x]);
  return std::max(s, 0.0);
}

std::vector<double> CategoricalModel::distribution(std::span<const double> w) const {
  std::vector<double> p(outcome_count());
  distribution(w, p);
  return p;
}

SingularBernoulli::SingularBernoulli(Box bounds, double m_simplex, std::vector<double> truth_w)
    : bounds_(std::move(bounds)), m_simplex_(m_simplex), truth_w_(std::move(truth_w)) {
  require(bounds_.dimension() == 2, "singular bernoulli: parameter space must be 2-dimensional");
  require(m_simplex_ > 0.0 && m_simplex_ <= 0.5, "singular bernoulli: simplex floor must lie in (0, 1/2]");
  double b = 0.0;
  for (std::size_t i = 0; i < 2; ++i) b = std::max({b, std::abs(bounds_.lo(i)), std::abs(bounds_.hi(i))});
  if (0.5 - b * b < m_simplex_)
    fail(ErrorKind::invalid_input, "singular bernoulli: bounds violate the simplex lower bound (1/2 - b^2 < m)");
  require(bounds_.contains(truth_w_), "singular bernoulli: truth parameter outside bounds");

  double lo = 1.0, hi = 0.0;
  for (double a : {bounds_.lo(0), bounds_.hi(0)})
    for (double c : {bounds_.lo(1), bounds_.hi(1)}) {
      lo = std::min(lo, 0.5 + a * c);
      hi = std::max(hi, 0.5 + a * c);
    }
  // The product is bilinear, so the extremes sit at corners unless the box straddles an axis.
  if (bounds_.lo(0) <= 0.0 && bounds_.hi(0) >= 0.0) {
    lo = std::min(lo, 0.5);
    hi = std::max(hi, 0.5);
  }
  if (bounds_.lo(1) <= 0.0 && bounds_.hi(1) >= 0.0) {
    lo = std::min(lo, 0.5);
    hi = std::max(hi, 0.5);
  }
  image_ = {lo, hi};
}

void SingularBernoulli::distribution(std::span<const double> w, std::span<double> p) const {
  const double p1 = prob_one(w);
  p[0] = 1.0 - p1;
  p[1] = p1;
}

std::vector<double> SingularBernoulli::mle(std::span<const std::uint64_t> counts) const {
  require(counts.size() == 2, "singular bernoulli mle: need two outcome counts");
  const double n = static_cast<double>(counts[0] + counts[1]);
  require(n > 0.0, "singular bernoulli mle: empty data");
  const double p1 = std::clamp(static_cast<double>(counts[1]) / n, image_.first, image_.second);
  return {1.0 - p1, p1};
}

std::shared_ptr<const SingularBernoulli> make_singular_bernoulli(Box bounds, double m_simplex,
                                                                 std::vector<double> truth_w) {
  return std::make_shared<SingularBernoulli>(std::move(bounds), m_simplex, std::move(truth_w));
}

namespace {

class KlLandscape final : public Landscape {
 public:
  explicit KlLandscape(std::shared_ptr<const SingularBernoulli> model)
      : Landscape("bernoulli_kl", model->bounds(),
                  {model->truth_parameter().begin(), model->truth_parameter().end()},
                  truth_for(*model)),
        model_(std::move(model)),
        q1_(model_->prob_one(model_->truth_parameter())) {}

  double value(std::span<const double> w) const override {
    const double p1 = model_->prob_one(w);
    return std::max(0.0, (1.0 - q1_) * std::log((1.0 - q1_) / (1.0 - p1)) + q1_ * std::log(q1_ / p1));
  }

  double value_and_gradient(std::span<const double> w, std::span<double> grad) const override {
    const double p1 = model_->prob_one(w);
    const double dkdp = -q1_ / p1 + (1.0 - q1_) / (1.0 - p1);
    grad[0] = dkdp * w[1];
    grad[1] = dkdp * w[0];
    return value(w);
  }

 private:
  static GroundTruth truth_for(const SingularBernoulli& m) {
    const auto t = m.truth_parameter();
    // Zero set {w1 w2 = t1 t2}: crossing axes at the origin, a smooth curve otherwise.
    return (t[0] * t[1] == 0.0) ? GroundTruth{Rational{1, 2}, 2} : GroundTruth{Rational{1, 2}, 1};
  }

  std::shared_ptr<const SingularBernoulli> model_;
  double q1_;
};

}  // namespace

LandscapePtr make_kl_landscape(std::shared_ptr<const SingularBernoulli> model) {
  return std::make_shared<KlLandscape>(std::move(model));
}

}  // namespace smdl::zoo
