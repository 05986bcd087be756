#include "smdl/zoo/box.hpp"

#include <cmath>

#include "smdl/core/error.hpp"

namespace smdl::zoo {

Box::Box(std::vector<double> lo, std::vector<double> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  require(!lo_.empty(), "box: dimension must be at least 1");
  require(lo_.size() == hi_.size(), "box: bound vectors differ in length");
  for (std::size_t i = 0; i < lo_.size(); ++i)
    require(std::isfinite(lo_[i]) && std::isfinite(hi_[i]) && lo_[i] < hi_[i],
            "box: need finite lo < hi in every coordinate");
}

Box Box::cube(std::size_t d, double lo, double hi) {
  return Box(std::vector<double>(d, lo), std::vector<double>(d, hi));
}

double Box::volume() const noexcept {
  double v = 1.0;
  for (std::size_t i = 0; i < lo_.size(); ++i) v *= hi_[i] - lo_[i];
  return v;
}

std::vector<double> Box::center() const {
  std::vector<double> c(lo_.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (lo_[i] + hi_[i]);
  return c;
}

bool Box::contains(std::span<const double> w) const {
  if (w.size() != lo_.size()) return false;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!(w[i] >= lo_[i] && w[i] <= hi_[i])) return false;
  return true;
}

std::size_t Box::clamp(std::span<double> w) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] < lo_[i]) {
      w[i] = lo_[i];
      ++n;
    } else if (w[i] > hi_[i]) {
      w[i] = hi_[i];
      ++n;
    }
  }
  return n;
}

ParamPoint::ParamPoint(std::vector<double> w_, Box bounds_) : w(std::move(w_)), bounds(std::move(bounds_)) {
  require(bounds.dimension() == w.size(), "param point: dimension does not match bounds");
  require(bounds.contains(w), "param point: w lies outside its bounds");
}

}  // namespace smdl::zoo
