#pragma once

#include <span>
#include <vector>

namespace smdl::core {

struct FitResult {
  // coefficients[0] is the intercept, coefficients[k] the slope of regressor k-1.
  std::vector<double> coefficients;
  double r_squared = 0.0;
  std::vector<double> residuals;

  double intercept() const { return coefficients.at(0); }
  double slope(std::size_t k = 0) const { return coefficients.at(k + 1); }
};

// Ordinary or weighted least squares with an intercept, solved by Householder QR.
// `regressors` holds one column per explanatory variable. R^2 is reported as 0 when the
// response has zero (weighted) variance. Throws rank_deficient on a degenerate design.
FitResult linear_fit(const std::vector<std::vector<double>>& regressors, std::span<const double> y,
                     std::span<const double> weights = {});

FitResult linear_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> weights = {});

}  // namespace smdl::core
