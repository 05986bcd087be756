#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace smdl::zoo {

// Axis-aligned compact parameter domain W = prod_i [lo_i, hi_i].
class Box {
 public:
  Box() = default;
  Box(std::vector<double> lo, std::vector<double> hi);

  static Box cube(std::size_t d, double lo, double hi);

  std::size_t dimension() const noexcept { return lo_.size(); }
  double lo(std::size_t i) const { return lo_[i]; }
  double hi(std::size_t i) const { return hi_[i]; }
  std::span<const double> lower() const noexcept { return lo_; }
  std::span<const double> upper() const noexcept { return hi_; }

  double volume() const noexcept;
  std::vector<double> center() const;
  bool contains(std::span<const double> w) const;

  // Clamps w into the box in place; returns the number of clamped coordinates.
  std::size_t clamp(std::span<double> w) const;

  friend bool operator==(const Box&, const Box&) = default;

 private:
  std::vector<double> lo_;
  std::vector<double> hi_;
};

// A parameter vector together with the domain it must live in.
struct ParamPoint {
  std::vector<double> w;
  Box bounds;

  ParamPoint(std::vector<double> w, Box bounds);
  std::size_t dimension() const noexcept { return w.size(); }
};

}  // namespace smdl::zoo
