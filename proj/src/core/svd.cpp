#include "smdl/core/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "smdl/core/error.hpp"

namespace smdl::core {
namespace {

// Hestenes one-sided Jacobi on a tall matrix (rows >= cols). Columns of `w` are
// orthogonalised in place; `v` accumulates the rotations.
void orthogonalise_columns(Matrix& w, Matrix& v) {
  const std::size_t m = w.rows();
  const std::size_t n = w.cols();
  constexpr double tol = 1e-15;
  constexpr int max_sweeps = 80;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          alpha += wp * wp;
          beta += wq * wq;
          gamma += wp * wq;
        }
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }
}

// Replaces columns flagged as null with unit vectors orthogonal to the others.
void complete_orthonormal_columns(Matrix& u, const std::vector<bool>& is_null) {
  const std::size_t m = u.rows();
  const std::size_t r = u.cols();
  std::size_t next_axis = 0;
  for (std::size_t j = 0; j < r; ++j) {
    if (!is_null[j]) continue;
    while (next_axis < m) {
      std::vector<double> cand(m, 0.0);
      cand[next_axis++] = 1.0;
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t k = 0; k < r; ++k) {
          if (k == j || (is_null[k] && k > j)) continue;
          double dot = 0.0;
          for (std::size_t i = 0; i < m; ++i) dot += u(i, k) * cand[i];
          for (std::size_t i = 0; i < m; ++i) cand[i] -= dot * u(i, k);
        }
      double norm = 0.0;
      for (double x : cand) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 1e-8) {
        for (std::size_t i = 0; i < m; ++i) u(i, j) = cand[i] / norm;
        break;
      }
    }
  }
}

SvdResult svd_tall(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Matrix w = a;
  Matrix v = Matrix::identity(n);
  orthogonalise_columns(w, v);

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += w(i, j) * w(i, j);
    norms[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  const double scale = norms[order.front()];
  const double null_tol = std::max(scale, 1.0) * static_cast<double>(std::max(m, n)) *
                          std::numeric_limits<double>::epsilon();

  SvdResult out{Matrix(m, n), std::vector<double>(n), Matrix(n, n)};
  std::vector<bool> is_null(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    const double sigma = norms[j];
    if (sigma <= null_tol) {
      out.s[k] = 0.0;
      is_null[k] = true;
    } else {
      out.s[k] = sigma;
      for (std::size_t i = 0; i < m; ++i) out.u(i, k) = w(i, j) / sigma;
    }
    for (std::size_t i = 0; i < n; ++i) out.v(k, i) = v(i, j);
  }
  complete_orthonormal_columns(out.u, is_null);
  return out;
}

}  // namespace

SvdResult svd(const Matrix& a) {
  require(a.rows() >= 1 && a.cols() >= 1, "svd: matrix must be non-empty");
  require(a.all_finite(), "svd: matrix has non-finite entries");
  if (a.rows() >= a.cols()) return svd_tall(a);
  // A^T = U' S V'  =>  A = V'^T S U'^T
  SvdResult t = svd_tall(a.transpose());
  return SvdResult{t.v.transpose(), std::move(t.s), t.u.transpose()};
}

SvdResult truncate(const SvdResult& full, std::size_t rank) {
  require(rank >= 1 && rank <= full.s.size(), "svd truncate: rank out of range");
  SvdResult out{Matrix(full.u.rows(), rank), {full.s.begin(), full.s.begin() + rank},
                Matrix(rank, full.v.cols())};
  for (std::size_t i = 0; i < full.u.rows(); ++i)
    for (std::size_t k = 0; k < rank; ++k) out.u(i, k) = full.u(i, k);
  for (std::size_t k = 0; k < rank; ++k)
    for (std::size_t j = 0; j < full.v.cols(); ++j) out.v(k, j) = full.v(k, j);
  return out;
}

Matrix reconstruct(const SvdResult& f) {
  Matrix out(f.u.rows(), f.v.cols());
  for (std::size_t k = 0; k < f.s.size(); ++k) {
    const double sk = f.s[k];
    if (sk == 0.0) continue;
    for (std::size_t i = 0; i < out.rows(); ++i) {
      const double uik = f.u(i, k) * sk;
      for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += uik * f.v(k, j);
    }
  }
  return out;
}

}  // namespace smdl::core
