#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "jpath/linalg.hpp"

// Residual checks for the determinant / adjugate identities that drive the
// per-node momentum construction. Each check computes both sides of an
// identity through independent routes and returns |lhs - rhs|; the test
// suite asserts the residuals against norm-scaled tolerances.
//
// All indices are 0-based.

namespace jpath {

namespace detail {

// Position of index m inside {0..n-1} \ {l}.
inline int reduced_pos(int m, int l) { return m < l ? m : m - 1; }

inline Vec col_without(const Matrix& b, int l) {
  Vec out;
  out.reserve(b.rows() - 1);
  for (int i = 0; i < b.rows(); ++i)
    if (i != l) out.push_back(b(i, l));
  return out;
}

inline Vec row_without(const Matrix& b, int l) {
  Vec out;
  out.reserve(b.cols() - 1);
  for (int j = 0; j < b.cols(); ++j)
    if (j != l) out.push_back(b(l, j));
  return out;
}

inline void require_square_index(const Matrix& b, int i) {
  if (!b.square()) throw DimensionMismatch("identity check: matrix not square");
  if (i < 0 || i >= b.rows()) throw IndexOutOfRange("identity check: index");
}

}  // namespace detail

/// | f^T adj(B(l|l)) b_col_l - (-1)^{m+l+1} det(B(l|m)) |  for m != l,
/// where f selects the position of m after row/column l is removed.
inline double check_adj_identity(const Matrix& b, int m, int l) {
  detail::require_square_index(b, m);
  detail::require_square_index(b, l);
  if (m == l) throw IndexOutOfRange("check_adj_identity: m == l");
  Matrix bll = delete_rc(b, {l}, {l});
  Vec adj_bc = adjugate(bll) * detail::col_without(b, l);
  double lhs = adj_bc[detail::reduced_pos(m, l)];
  double sign = ((m + l + 1) % 2 == 0) ? 1.0 : -1.0;
  double rhs = sign * determinant(delete_rc(b, {l}, {m}));
  return std::abs(lhs - rhs);
}

/// | b_ll det(B(l|l)) - b_row_l adj(B(l|l)) b_col_l - det(B) |
inline double check_det_identity(const Matrix& b, int l) {
  detail::require_square_index(b, l);
  Matrix bll = delete_rc(b, {l}, {l});
  double lhs = b(l, l) * determinant(bll) -
               dot(detail::row_without(b, l), adjugate(bll) * detail::col_without(b, l));
  return std::abs(lhs - determinant(b));
}

namespace detail {

// Shared pieces of the rational identities: x_k = (B(k|k))^{-1} b_col_k and
// the denominator D_k = b_kk - b_row_k x_k. Principal minors below 1e-12 in
// magnitude make the inverses meaningless and are rejected.
struct TozdParts {
  std::vector<Vec> x;
  Vec denom;
};

inline TozdParts tozd_parts(const Matrix& b) {
  const int n = b.rows();
  TozdParts p;
  p.x.resize(n);
  p.denom.resize(n);
  if (std::abs(determinant(b)) < 1e-12)
    throw DegenerateMinor("rational identity: det(B) below 1e-12");
  for (int k = 0; k < n; ++k) {
    Matrix bkk = delete_rc(b, {k}, {k});
    if (std::abs(determinant(bkk)) < 1e-12)
      throw DegenerateMinor("rational identity: principal minor below 1e-12");
    p.x[k] = solve(bkk, col_without(b, k));
    p.denom[k] = b(k, k) - dot(row_without(b, k), p.x[k]);
  }
  return p;
}

}  // namespace detail

/// Residual of the rational identities tying the Schur-type quotients of B
/// together. With no `l` given:
///   b_row_m x_m / D_m  =  sum_{l != m} b_lm x_l[pos(m)] / D_l .
/// With `l` given (l != m):
///   -b_mm x_m[pos(l)] / D_m  =  -b_lm / D_l
///                              + sum_{k != l, m} b_km x_k[pos(l)] / D_k .
inline double check_tozd(const Matrix& b, int m, std::optional<int> l = {}) {
  detail::require_square_index(b, m);
  const int n = b.rows();
  auto parts = detail::tozd_parts(b);
  if (!l) {
    double lhs = dot(detail::row_without(b, m), parts.x[m]) / parts.denom[m];
    double rhs = 0;
    for (int j = 0; j < n; ++j) {
      if (j == m) continue;
      rhs += b(j, m) * parts.x[j][detail::reduced_pos(m, j)] / parts.denom[j];
    }
    return std::abs(lhs - rhs);
  }
  detail::require_square_index(b, *l);
  if (*l == m) throw IndexOutOfRange("check_tozd: l == m");
  double lhs = -b(m, m) * parts.x[m][detail::reduced_pos(*l, m)] / parts.denom[m];
  double rhs = -b(*l, m) / parts.denom[*l];
  for (int k = 0; k < n; ++k) {
    if (k == m || k == *l) continue;
    rhs += b(k, m) * parts.x[k][detail::reduced_pos(*l, k)] / parts.denom[k];
  }
  return std::abs(lhs - rhs);
}

/// Worst violation of the row-diagonal dominance of C = (I - P^T)^{-1}:
/// max over m != l of c_ml - c_mm. Nonpositive (up to rounding) whenever P
/// is substochastic with spectral radius below one.
inline double check_c_dominance(const Matrix& c) {
  if (!c.square()) throw DimensionMismatch("check_c_dominance: matrix not square");
  double worst = -std::numeric_limits<double>::infinity();
  for (int m = 0; m < c.rows(); ++m)
    for (int l = 0; l < c.cols(); ++l) {
      if (l == m) continue;
      worst = std::max(worst, c(m, l) - c(m, m));
    }
  return worst;
}

}  // namespace jpath
