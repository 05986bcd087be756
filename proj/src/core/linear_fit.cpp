#include "smdl/core/linear_fit.hpp"

#include <algorithm>
#include <cmath>

#include "smdl/core/error.hpp"
#include "smdl/core/matrix.hpp"

namespace smdl::core {

FitResult linear_fit(const std::vector<std::vector<double>>& regressors, std::span<const double> y,
                     std::span<const double> weights) {
  const std::size_t n = y.size();
  const std::size_t p = regressors.size() + 1;
  require(n >= 2, "linear_fit: need at least 2 observations");
  require(n >= p, "linear_fit: more coefficients than observations");
  for (const auto& col : regressors)
    require(col.size() == n, "linear_fit: regressor and response lengths differ");
  require(weights.empty() || weights.size() == n, "linear_fit: weight count differs from observations");
  for (std::size_t i = 0; i < n; ++i) {
    require(std::isfinite(y[i]), "linear_fit: non-finite response");
    if (!weights.empty()) require(weights[i] > 0.0 && std::isfinite(weights[i]), "linear_fit: weights must be positive");
  }

  std::vector<double> sw(n, 1.0);
  if (!weights.empty())
    for (std::size_t i = 0; i < n; ++i) sw[i] = std::sqrt(weights[i]);

  // Weighted design matrix and response.
  Matrix a(n, p);
  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, 0) = sw[i];
    for (std::size_t k = 1; k < p; ++k) a(i, k) = sw[i] * regressors[k - 1][i];
    b[i] = sw[i] * y[i];
  }
  std::vector<double> col_norm(p, 0.0);
  for (std::size_t k = 0; k < p; ++k) {
    for (std::size_t i = 0; i < n; ++i) col_norm[k] += a(i, k) * a(i, k);
    col_norm[k] = std::sqrt(col_norm[k]);
  }

  // Householder QR, applied to b on the fly.
  std::vector<double> rdiag(p);
  for (std::size_t k = 0; k < p; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < n; ++i) norm += a(i, k) * a(i, k);
    norm = std::sqrt(norm);
    if (norm <= 1e-10 * std::max(col_norm[k], 1e-300))
      fail(ErrorKind::rank_deficient, "linear_fit: design matrix is rank deficient (column " +
                                          std::to_string(k) + ")");
    const double alpha = a(k, k) > 0.0 ? -norm : norm;
    std::vector<double> v(n - k);
    for (std::size_t i = k; i < n; ++i) v[i - k] = a(i, k);
    v[0] -= alpha;
    double vnorm2 = 0.0;
    for (double x : v) vnorm2 += x * x;
    if (vnorm2 > 0.0) {
      for (std::size_t j = k; j < p; ++j) {
        double dot = 0.0;
        for (std::size_t i = k; i < n; ++i) dot += v[i - k] * a(i, j);
        const double f = 2.0 * dot / vnorm2;
        for (std::size_t i = k; i < n; ++i) a(i, j) -= f * v[i - k];
      }
      double dot = 0.0;
      for (std::size_t i = k; i < n; ++i) dot += v[i - k] * b[i];
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t i = k; i < n; ++i) b[i] -= f * v[i - k];
    }
    rdiag[k] = a(k, k);
  }

  FitResult out;
  out.coefficients.assign(p, 0.0);
  for (std::size_t kk = p; kk-- > 0;) {
    double s = b[kk];
    for (std::size_t j = kk + 1; j < p; ++j) s -= a(kk, j) * out.coefficients[j];
    out.coefficients[kk] = s / rdiag[kk];
  }

  out.residuals.resize(n);
  double wsum = 0.0, wy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double pred = out.coefficients[0];
    for (std::size_t k = 1; k < p; ++k) pred += out.coefficients[k] * regressors[k - 1][i];
    out.residuals[i] = y[i] - pred;
    const double w = sw[i] * sw[i];
    wsum += w;
    wy += w * y[i];
  }
  const double ybar = wy / wsum;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = sw[i] * sw[i];
    ss_res += w * out.residuals[i] * out.residuals[i];
    ss_tot += w * (y[i] - ybar) * (y[i] - ybar);
  }
  out.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 0.0;
  return out;
}

FitResult linear_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> weights) {
  return linear_fit(std::vector<std::vector<double>>{{x.begin(), x.end()}}, y, weights);
}

}  // namespace smdl::core
