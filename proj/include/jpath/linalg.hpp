#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <initializer_list>
#include <vector>

#include "jpath/errors.hpp"

namespace jpath {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_inf(const Vec& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double dist_inf(const Vec& a, const Vec& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Dense row-major matrix. Everything in this project is desk scale
/// (n <= ~20), so there is no sparse or blocked path.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = static_cast<int>(init.size());
    cols_ = rows_ ? static_cast<int>(init.begin()->size()) : 0;
    a_.reserve(static_cast<std::size_t>(rows_) * cols_);
    for (const auto& row : init) {
      if (static_cast<int>(row.size()) != cols_)
        throw DimensionMismatch("ragged matrix initializer");
      a_.insert(a_.end(), row.begin(), row.end());
    }
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Vec row(int i) const {
    Vec r(cols_);
    for (int j = 0; j < cols_; ++j) r[j] = (*this)(i, j);
    return r;
  }

  Vec col(int j) const {
    Vec c(rows_);
    for (int i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  Vec operator*(const Vec& v) const {
    if (static_cast<int>(v.size()) != cols_)
      throw DimensionMismatch("matrix-vector size mismatch");
    Vec out(rows_, 0.0);
    for (int i = 0; i < rows_; ++i) {
      double s = 0;
      for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * v[j];
      out[i] = s;
    }
    return out;
  }

  Matrix operator*(const Matrix& b) const {
    if (cols_ != b.rows_) throw DimensionMismatch("matrix-matrix size mismatch");
    Matrix out(rows_, b.cols_);
    for (int i = 0; i < rows_; ++i)
      for (int k = 0; k < cols_; ++k) {
        double aik = (*this)(i, k);
        if (aik == 0.0) continue;
        for (int j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }

  Matrix operator-(const Matrix& b) const {
    Matrix out(rows_, cols_);
    for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] = a_[i] - b.a_[i];
    return out;
  }

  Matrix operator+(const Matrix& b) const {
    Matrix out(rows_, cols_);
    for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] = a_[i] + b.a_[i];
    return out;
  }

  double max_abs() const {
    double m = 0;
    for (double x : a_) m = std::max(m, std::abs(x));
    return m;
  }

  // Induced infinity norm (max absolute row sum).
  double norm_inf() const {
    double m = 0;
    for (int i = 0; i < rows_; ++i) {
      double s = 0;
      for (int j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
      m = std::max(m, s);
    }
    return m;
  }

  bool all_finite() const {
    for (double x : a_)
      if (!std::isfinite(x)) return false;
    return true;
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

namespace detail {

struct LuFactors {
  Matrix lu;               // combined L (unit diagonal) and U
  std::vector<int> perm;   // row permutation
  int sign = 1;            // permutation parity
  bool singular = false;
};

inline LuFactors lu_factor(Matrix a) {
  const int n = a.rows();
  LuFactors f{std::move(a), std::vector<int>(n), 1, false};
  for (int i = 0; i < n; ++i) f.perm[i] = i;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::abs(f.lu(k, k));
    for (int i = k + 1; i < n; ++i) {
      double v = std::abs(f.lu(i, k));
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (best == 0.0) {
      f.singular = true;
      continue;
    }
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(piv, j));
      std::swap(f.perm[k], f.perm[piv]);
      f.sign = -f.sign;
    }
    for (int i = k + 1; i < n; ++i) {
      double m = f.lu(i, k) / f.lu(k, k);
      f.lu(i, k) = m;
      for (int j = k + 1; j < n; ++j) f.lu(i, j) -= m * f.lu(k, j);
    }
  }
  return f;
}

inline Vec lu_solve(const LuFactors& f, const Vec& b) {
  const int n = f.lu.rows();
  Vec x(n);
  for (int i = 0; i < n; ++i) x[i] = b[f.perm[i]];
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
  for (int i = n - 1; i >= 0; --i) {
    for (int j = i + 1; j < n; ++j) x[i] -= f.lu(i, j) * x[j];
    x[i] /= f.lu(i, i);
  }
  return x;
}

}  // namespace detail

/// Solve A x = b by LU with partial pivoting.
inline Vec solve(const Matrix& a, const Vec& b) {
  if (!a.square()) throw DimensionMismatch("solve: matrix not square");
  if (static_cast<int>(b.size()) != a.rows())
    throw DimensionMismatch("solve: rhs size mismatch");
  if (a.rows() == 0) return {};
  auto f = detail::lu_factor(a);
  if (f.singular) throw SingularSystem("solve: singular matrix");
  return detail::lu_solve(f, b);
}

inline Matrix inverse(const Matrix& a) {
  if (!a.square()) throw DimensionMismatch("inverse: matrix not square");
  const int n = a.rows();
  if (n == 0) return Matrix(0, 0);
  auto f = detail::lu_factor(a);
  if (f.singular) throw SingularSystem("inverse: singular matrix");
  Matrix inv(n, n);
  Vec e(n, 0.0);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    Vec x = detail::lu_solve(f, e);
    for (int i = 0; i < n; ++i) inv(i, j) = x[i];
    e[j] = 0.0;
  }
  return inv;
}

/// Determinant via LU with partial pivoting. det of the 0x0 matrix is 1.
inline double determinant(const Matrix& a) {
  if (!a.square()) throw DimensionMismatch("determinant: matrix not square");
  const int n = a.rows();
  if (n == 0) return 1.0;
  auto f = detail::lu_factor(a);
  if (f.singular) return 0.0;
  double d = f.sign;
  for (int i = 0; i < n; ++i) d *= f.lu(i, i);
  return d;
}

/// Removes the listed rows and columns (0-based, duplicates ignored).
/// Rectangular results are allowed; the order of surviving indices is kept.
inline Matrix delete_rc(const Matrix& a, const std::vector<int>& rows,
                        const std::vector<int>& cols) {
  std::vector<bool> drop_r(a.rows(), false), drop_c(a.cols(), false);
  for (int r : rows) {
    if (r < 0 || r >= a.rows()) throw IndexOutOfRange("delete_rc: row index");
    drop_r[r] = true;
  }
  for (int c : cols) {
    if (c < 0 || c >= a.cols()) throw IndexOutOfRange("delete_rc: col index");
    drop_c[c] = true;
  }
  std::vector<int> keep_r, keep_c;
  for (int i = 0; i < a.rows(); ++i)
    if (!drop_r[i]) keep_r.push_back(i);
  for (int j = 0; j < a.cols(); ++j)
    if (!drop_c[j]) keep_c.push_back(j);
  Matrix out(static_cast<int>(keep_r.size()), static_cast<int>(keep_c.size()));
  for (std::size_t i = 0; i < keep_r.size(); ++i)
    for (std::size_t j = 0; j < keep_c.size(); ++j)
      out(static_cast<int>(i), static_cast<int>(j)) = a(keep_r[i], keep_c[j]);
  return out;
}

/// Minor: determinant of a with row i and column j removed.
inline double minor_det(const Matrix& a, int i, int j) {
  return determinant(delete_rc(a, {i}, {j}));
}

/// Adjugate (transposed cofactor matrix): B * adj(B) = det(B) * I.
/// Cofactor expansion keeps the exact structure at small sizes; for larger
/// well-conditioned matrices det * inverse is used instead.
inline Matrix adjugate(const Matrix& a) {
  if (!a.square()) throw DimensionMismatch("adjugate: matrix not square");
  const int n = a.rows();
  if (n == 0) return Matrix(0, 0);
  if (n == 1) {
    Matrix m(1, 1);
    m(0, 0) = 1.0;
    return m;
  }
  auto cofactor = [&a, n]() {
    Matrix adj(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double c = minor_det(a, i, j);
        adj(j, i) = ((i + j) % 2 == 0) ? c : -c;
      }
    return adj;
  };
  if (n <= 6) return cofactor();
  double d = determinant(a);
  if (std::abs(d) < 1e-12 * std::max(1.0, std::pow(a.norm_inf(), n)))
    return cofactor();  // adjugate exists even when the inverse does not
  Matrix inv = inverse(a);
  Matrix adj(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) adj(i, j) = d * inv(i, j);
  return adj;
}

}  // namespace jpath
