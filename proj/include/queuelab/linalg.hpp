#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "queuelab/core.hpp"

namespace queuelab::linalg {

// Dense row-major square/rectangular matrix. Sized for the problems in this
// library (tens to a few hundred rows), not for large-scale work.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matrix dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

// a^n by repeated squaring; n = 0 gives the identity.
inline Matrix power(const Matrix& a, unsigned long long n) {
  if (a.rows() != a.cols()) throw std::invalid_argument("matrix power needs a square matrix");
  Matrix result = Matrix::identity(a.rows());
  Matrix base = a;
  while (n > 0) {
    if (n & 1ULL) result = multiply(result, base);
    base = multiply(base, base);
    n >>= 1ULL;
  }
  return result;
}

inline std::vector<double> multiply_left(const std::vector<double>& v, const Matrix& a) {
  if (v.size() != a.rows()) throw std::invalid_argument("vector/matrix dimension mismatch");
  std::vector<double> out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (v[i] == 0.0) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += v[i] * a(i, j);
  }
  return out;
}

// Solves A x = b by LU with partial pivoting. Throws DomainError on a
// numerically singular system, reporting a crude reciprocal pivot estimate.
inline std::vector<double> solve(Matrix a, std::vector<double> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) throw std::invalid_argument("solve: bad dimensions");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t best = col;
    double best_abs = std::fabs(a(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::fabs(a(r, col));
      if (v > best_abs) {
        best_abs = v;
        best = r;
      }
    }
    if (best != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(best, j));
      std::swap(b[col], b[best]);
    }
    const double pivot = a(col, col);
    if (std::fabs(pivot) < 1e-300) {
      throw DomainError("linear system is singular (pivot " + std::to_string(pivot) +
                        " at column " + std::to_string(col) + ")");
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / pivot;
      if (f == 0.0) continue;
      a(r, col) = 0.0;
      for (std::size_t j = col + 1; j < n; ++j) a(r, j) -= f * a(col, j);
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t j = ri + 1; j < n; ++j) s -= a(ri, j) * x[j];
    x[ri] = s / a(ri, ri);
  }
  return x;
}

// Max-norm residual of A x - b; used to certify solver output.
inline double residual_inf(const Matrix& a, const std::vector<double>& x,
                           const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = -b[i];
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    worst = std::max(worst, std::fabs(s));
  }
  return worst;
}

}  // namespace queuelab::linalg
