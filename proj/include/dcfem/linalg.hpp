// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcfem/error.hpp"

#include <Eigen/Dense>

namespace dcfem {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed sparse row matrix. Built from triplets; duplicates are summed in
/// input order so assembly is reproducible.
class CsrMatrix {
public:
  CsrMatrix() = default;

  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets)
      : rows_(rows), cols_(cols) {
    std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet &a, const Triplet &b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    row_ptr_.assign(rows + 1, 0);
    for (std::size_t k = 0; k < triplets.size();) {
      const auto &t = triplets[k];
      if (t.row >= rows || t.col >= cols) throw InvalidArgument("CsrMatrix: triplet out of range");
      double v = 0.0;
      std::size_t j = k;
      for (; j < triplets.size() && triplets[j].row == t.row && triplets[j].col == t.col; ++j)
        v += triplets[j].value;
      col_.push_back(t.col);
      val_.push_back(v);
      ++row_ptr_[t.row + 1];
      k = j;
    }
    std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
  }

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] std::size_t nonzeros() const { return val_.size(); }
  [[nodiscard]] const std::vector<std::size_t> &row_ptr() const { return row_ptr_; }
  [[nodiscard]] const std::vector<std::size_t> &col_index() const { return col_; }
  [[nodiscard]] const std::vector<double> &values() const { return val_; }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += val_[k] * x[col_[k]];
      y[i] = s;
    }
  }

  [[nodiscard]] Vector operator*(std::span<const double> x) const {
    Vector y(rows_);
    multiply(x, y);
    return y;
  }

  [[nodiscard]] double at(std::size_t i, std::size_t j) const {
    const auto b = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    const auto e = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    const auto it = std::lower_bound(b, e, j);
    return (it != e && *it == j) ? val_[static_cast<std::size_t>(it - col_.begin())] : 0.0;
  }

  [[nodiscard]] Vector diagonal() const {
    Vector d(rows_, 0.0);
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) d[i] = at(i, i);
    return d;
  }

  [[nodiscard]] CsrMatrix transposed() const {
    std::vector<Triplet> t;
    t.reserve(val_.size());
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) t.push_back({col_[k], i, val_[k]});
    return CsrMatrix(cols_, rows_, std::move(t));
  }

  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (double v : val_) m = std::max(m, std::abs(v));
    return m;
  }

  /// max |A_ij - A_ji|
  [[nodiscard]] double asymmetry() const {
    double m = 0.0;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        m = std::max(m, std::abs(val_[k] - at(col_[k], i)));
    return m;
  }

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_;
  std::vector<double> val_;
};

enum class Preconditioner { none, jacobi };

struct CgResult {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Preconditioned conjugate gradients for SPD systems. Stops when
/// ||b - A x|| <= tol ||b||; throws ConvergenceError after maxit iterations.
inline CgResult cg_solve(const CsrMatrix &a, std::span<const double> b, double tol = 1e-12,
                         int maxit = 10000, Preconditioner precond = Preconditioner::jacobi,
                         std::span<const double> x0 = {}) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) throw InvalidArgument("cg_solve: dimension mismatch");
  CgResult res;
  res.x.assign(n, 0.0);
  if (!x0.empty()) std::copy(x0.begin(), x0.end(), res.x.begin());
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(res.x.begin(), res.x.end(), 0.0);
    return res;
  }
  Vector inv_diag(n, 1.0);
  if (precond == Preconditioner::jacobi) {
    const auto d = a.diagonal();
    for (std::size_t i = 0; i < n; ++i) {
      if (!(d[i] > 0.0)) throw InvalidArgument("cg_solve: Jacobi needs a positive diagonal");
      inv_diag[i] = 1.0 / d[i];
    }
  }
  Vector r(n), z(n), p(n), q(n);
  a.multiply(res.x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  double rnorm = norm2(r);
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z);
  while (rnorm > tol * bnorm) {
    if (res.iterations >= maxit)
      throw ConvergenceError("cg_solve did not converge", res.iterations, rnorm / bnorm);
    a.multiply(p, q);
    const double alpha = rz / dot(p, q);
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rnorm = norm2(r);
    ++res.iterations;
  }
  res.relative_residual = rnorm / bnorm;
  return res;
}

/// Square dense matrix, row-major.
class DenseMatrix {
public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  [[nodiscard]] std::size_t size() const { return n_; }
  double &operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  [[nodiscard]] std::span<const double> data() const { return data_; }
  [[nodiscard]] std::span<double> data() { return data_; }

  [[nodiscard]] Vector operator*(std::span<const double> x) const {
    Vector y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n_; ++j) s += data_[i * n_ + j] * x[j];
      y[i] = s;
    }
    return y;
  }

  [[nodiscard]] double max_abs() const { return norm_inf(data_); }

private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// LU factorization with partial (row) pivoting, P A = L U. Factor once, solve
/// for any number of right-hand sides. The factorization runs in place on the
/// matrix storage (Eigen PartialPivLU), so peak memory is one n x n array.
class LuFactorization {
public:
  explicit LuFactorization(DenseMatrix a) : n_(a.size()) {
    if (n_ == 0) throw InvalidArgument("lu: empty matrix");
    for (double v : a.data())
      if (!std::isfinite(v)) throw InvalidArgument("lu: non-finite matrix entry");
    const double scale = a.max_abs();
    // in-place transpose to column-major
    auto d = a.data();
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) std::swap(d[i * n_ + j], d[j * n_ + i]);
    lu_ = std::move(a);
    const auto n = static_cast<Eigen::Index>(n_);
    Eigen::Map<Eigen::MatrixXd> m(lu_.data().data(), n, n);
    Eigen::PartialPivLU<Eigen::Ref<Eigen::MatrixXd>> lu(m);
    perm_ = lu.permutationP();
    double min_pivot = std::numeric_limits<double>::infinity();
    std::size_t where = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double p = std::abs(lu_.data()[i * n_ + i]);
      if (!(p >= min_pivot)) {
        min_pivot = p;
        where = i;
      }
    }
    if (!(min_pivot > pivot_tolerance * scale))
      throw SingularMatrix("lu: pivot " + detail::sci(min_pivot) + " at row " +
                           std::to_string(where) + " below " + detail::sci(pivot_tolerance) +
                           " * max|A|");
  }

  static constexpr double pivot_tolerance = 1e-14;

  [[nodiscard]] std::size_t size() const { return n_; }

  [[nodiscard]] Vector solve(std::span<const double> b) const {
    if (b.size() != n_) throw InvalidArgument("lu solve: dimension mismatch");
    const auto n = static_cast<Eigen::Index>(n_);
    Eigen::Map<const Eigen::MatrixXd> m(lu_.data().data(), n, n);
    Eigen::VectorXd x = perm_ * Eigen::Map<const Eigen::VectorXd>(b.data(), n);
    m.triangularView<Eigen::UnitLower>().solveInPlace(x);
    m.triangularView<Eigen::Upper>().solveInPlace(x);
    return Vector(x.data(), x.data() + n);
  }

  /// L (unit lower), U and the row permutation perm such that A(perm[i], :) = (L U)(i, :).
  [[nodiscard]] DenseMatrix lower() const {
    DenseMatrix l(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      l(i, i) = 1.0;
      for (std::size_t j = 0; j < i; ++j) l(i, j) = lu_.data()[j * n_ + i];
    }
    return l;
  }
  [[nodiscard]] DenseMatrix upper() const {
    DenseMatrix u(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i; j < n_; ++j) u(i, j) = lu_.data()[j * n_ + i];
    return u;
  }
  [[nodiscard]] std::vector<std::size_t> permutation() const {
    // (P A) row ind[i] is A row i
    std::vector<std::size_t> perm(n_);
    for (std::size_t i = 0; i < n_; ++i)
      perm[static_cast<std::size_t>(perm_.indices()[static_cast<Eigen::Index>(i)])] = i;
    return perm;
  }

private:
  std::size_t n_;
  DenseMatrix lu_;  // column-major storage
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> perm_;
};

/// Solves A x = b by LU with partial pivoting.
inline Vector lu_solve(DenseMatrix a, std::span<const double> b) {
  return LuFactorization(std::move(a)).solve(b);
}

} // namespace dcfem
