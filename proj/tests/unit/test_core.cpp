#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "testing.hpp"
#include "smdl/core/error.hpp"
#include "smdl/core/linear_fit.hpp"
#include "smdl/core/matrix.hpp"
#include "smdl/core/rng.hpp"
#include "smdl/core/svd.hpp"

using namespace smdl;
using core::Matrix;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double lo = -10.0, double hi = 10.0) {
  core::RngStream rng(seed, 3);
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

double rel_reconstruction_error(const Matrix& a) {
  const Matrix back = core::reconstruct(core::svd(a));
  return (back - a).frobenius_norm() / a.frobenius_norm();
}

// Oracle: singular values as square roots of the eigenvalues of A^T A (or A A^T).
std::vector<double> gram_singular_values(const Matrix& a) {
  Eigen::MatrixXd m(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
  const Eigen::MatrixXd g = a.rows() >= a.cols() ? Eigen::MatrixXd(m.transpose() * m) : Eigen::MatrixXd(m * m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  std::vector<double> s;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) s.push_back(std::sqrt(std::max(0.0, es.eigenvalues()(i))));
  std::sort(s.rbegin(), s.rend());
  return s;
}

}  // namespace

TEST_CASE("svd of identity and diagonal") {
  auto f = core::svd(Matrix::identity(2));
  CHECK(f.s[0] == doctest::Approx(1.0));
  CHECK(f.s[1] == doctest::Approx(1.0));

  Matrix d(2, 2);
  d(0, 0) = 3.0;
  f = core::svd(d);
  CHECK(f.s[0] == doctest::Approx(3.0));
  CHECK(f.s[1] == doctest::Approx(0.0));
  CHECK((core::reconstruct(f) - d).frobenius_norm() < 1e-12);
}

TEST_CASE("svd matches Gram eigendecomposition oracle on 5x3") {
  const Matrix a = random_matrix(5, 3, 11);
  const auto f = core::svd(a);
  const auto oracle = gram_singular_values(a);
  REQUIRE(f.s.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(rel_err(f.s[i], oracle[i]) <= 1e-10);
  CHECK(rel_reconstruction_error(a) < 1e-8);
}

TEST_CASE("svd reconstruction up to 64x64") {
  for (std::size_t r : {1u, 2u, 7u, 16u, 33u, 64u})
    for (std::size_t c : {1u, 3u, 16u, 64u}) {
      CAPTURE(r);
      CAPTURE(c);
      const Matrix a = random_matrix(r, c, r * 100 + c);
      CHECK(rel_reconstruction_error(a) < 1e-8);
      const auto s = core::svd(a).s;
      CHECK(std::is_sorted(s.rbegin(), s.rend()));
      CHECK(s.back() >= 0.0);
    }
}

TEST_CASE("svd factors are orthonormal") {
  const Matrix a = random_matrix(9, 6, 5);
  const auto f = core::svd(a);
  const Matrix utu = f.u.transpose() * f.u;
  const Matrix vvt = f.v * f.v.transpose();
  CHECK((utu - Matrix::identity(6)).frobenius_norm() < 1e-10);
  CHECK((vvt - Matrix::identity(6)).frobenius_norm() < 1e-10);
}

TEST_CASE("svd of rank-deficient input") {
  Matrix a(6, 4);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 4; ++j) a(i, j) = static_cast<double>(i + 1) * static_cast<double>(j + 2);
  const auto f = core::svd(a);
  CHECK(f.s[1] < 1e-12 * f.s[0]);
  CHECK(rel_reconstruction_error(a) < 1e-8);
  CHECK((f.u.transpose() * f.u - Matrix::identity(4)).frobenius_norm() < 1e-10);
}

TEST_CASE("singular values of A and A^T agree") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix a = random_matrix(8, 5, seed);
    const auto s1 = core::svd(a).s;
    const auto s2 = core::svd(a.transpose()).s;
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(s1[i] - s2[i]) < 1e-10);
  }
}

TEST_CASE("svd truncation follows Eckart-Young") {
  const Matrix a = random_matrix(16, 16, 77);
  const auto full = core::svd(a);
  const Matrix approx = core::reconstruct(core::truncate(full, 8));
  double tail = 0.0;
  for (std::size_t i = 8; i < 16; ++i) tail += full.s[i] * full.s[i];
  CHECK(rel_err((approx - a).frobenius_norm(), std::sqrt(tail)) <= 1e-10);
}

TEST_CASE("svd rejects non-finite and empty input") {
  Matrix a(2, 2);
  a(0, 1) = std::nan("");
  CHECK_THROWS_AS(core::svd(a), Error);
  CHECK_THROWS_AS(core::svd(Matrix()), Error);
}

TEST_CASE("linear_fit exact line") {
  const std::vector<double> x{0, 1, 2}, y{1, 3, 5};
  const auto f = core::linear_fit(x, y);
  CHECK(f.slope() == doctest::Approx(2.0));
  CHECK(f.intercept() == doctest::Approx(1.0));
  CHECK(rel_err(f.r_squared, 1.0) <= 1e-12);
  CHECK(f.residuals.size() == 3);
}

TEST_CASE("linear_fit constant response reports R2 = 0") {
  const std::vector<double> x{0, 1, 2, 3}, y{4, 4, 4, 4};
  const auto f = core::linear_fit(x, y);
  CHECK(std::abs(f.slope()) < 1e-12);
  CHECK(f.r_squared == 0.0);
}

TEST_CASE("linear_fit degenerate design is rank deficient") {
  const std::vector<double> x{2, 2, 2}, y{1, 2, 3};
  try {
    core::linear_fit(x, y);
    FAIL("expected rank deficiency");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::rank_deficient);
  }
  CHECK_THROWS_AS(core::linear_fit(std::vector<double>{1.0}, std::vector<double>{1.0}), Error);
  CHECK_THROWS_AS(core::linear_fit(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}), Error);
}

TEST_CASE("linear_fit noisy line agrees with normal-equations oracle") {
  core::RngStream rng(2024, 0);
  std::vector<double> x(100), y(100);
  for (std::size_t i = 0; i < 100; ++i) {
    x[i] = rng.uniform(-1.0, 1.0);
    y[i] = 2.0 * x[i] + 1.0 + 0.1 * rng.normal();
  }
  const auto f = core::linear_fit(x, y);
  const double n = 100.0;
  const double sx = std::accumulate(x.begin(), x.end(), 0.0), sy = std::accumulate(y.begin(), y.end(), 0.0);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(rel_err(f.slope(), slope) <= 1e-10);
  CHECK(std::abs(f.slope() - 2.0) < 0.05);

  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / n;
  for (std::size_t i = 0; i < 100; ++i) {
    ss_res += f.residuals[i] * f.residuals[i];
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  CHECK(std::abs(f.r_squared - (1.0 - ss_res / ss_tot)) < 1e-12);
}

TEST_CASE("linear_fit two regressors and weights") {
  std::vector<double> a{0, 1, 2, 3, 4, 5}, b{1, 0, 3, 1, 5, 2}, y(6), w{1, 2, 3, 1, 2, 3};
  for (std::size_t i = 0; i < 6; ++i) y[i] = 0.5 - 1.5 * a[i] + 2.0 * b[i];
  const auto f = core::linear_fit({a, b}, y, w);
  CHECK(f.intercept() == doctest::Approx(0.5));
  CHECK(f.slope(0) == doctest::Approx(-1.5));
  CHECK(f.slope(1) == doctest::Approx(2.0));
  CHECK(rel_err(f.r_squared, 1.0) <= 1e-12);
}

TEST_CASE("rng determinism and stream independence") {
  core::RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.normal() == b.normal());

  constexpr int n = 100000;
  core::RngStream s0(42, 0), s1(42, 1);
  double m0 = 0, m1 = 0, v0 = 0, v1 = 0, c = 0;
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = s0.normal();
    y[i] = s1.normal();
    m0 += x[i];
    m1 += y[i];
  }
  m0 /= n;
  m1 /= n;
  for (int i = 0; i < n; ++i) {
    v0 += (x[i] - m0) * (x[i] - m0);
    v1 += (y[i] - m1) * (y[i] - m1);
    c += (x[i] - m0) * (y[i] - m1);
  }
  CHECK(std::abs(c / std::sqrt(v0 * v1)) < 0.02);
  CHECK(std::abs(m0) < 0.02);
  CHECK(std::abs(v0 / (n - 1) - 1.0) < 0.03);
}

TEST_CASE("rng uniform range and below") {
  core::RngStream r(1, 1);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(r.below(7) < 7);
  }
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(core::fnv1a64({}) == 0xcbf29ce484222325ULL);
  const unsigned char a[] = {'a'};
  CHECK(core::fnv1a64(a) == 0xaf63dc4c8601ec8cULL);
}
