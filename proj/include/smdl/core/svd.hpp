#pragma once

#include <vector>

#include "smdl/core/matrix.hpp"

namespace smdl::core {

// Thin SVD A = U * diag(s) * V with U: rows x r, V: r x cols, r = min(rows, cols).
// Note that `v` already holds the right singular vectors as rows (V^T in the usual notation).
struct SvdResult {
  Matrix u;
  std::vector<double> s;
  Matrix v;

  std::size_t rank_capacity() const noexcept { return s.size(); }
};

// One-sided Jacobi SVD. Singular values are returned in non-increasing order.
// Throws invalid_input on non-finite entries or an empty matrix.
SvdResult svd(const Matrix& a);

// Keeps the `rank` largest singular triplets.
SvdResult truncate(const SvdResult& full, std::size_t rank);

Matrix reconstruct(const SvdResult& f);

}  // namespace smdl::core
