#include "gsens/linalg.hpp"

#include <cmath>
#include <utility>

#include "gsens/errors.hpp"

namespace gsens {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
  Matrix out(rows_, rhs.cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = 0; k < cols_; ++k) {
      const double a = (*this)(i, k);
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < rhs.cols_; ++j) out(i, j) += a * rhs(k, j);
    }
  }
  return out;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::fabs(v));
  return m;
}

Matrix solve_linear(Matrix a, Matrix b, double pivot_tol) {
  const std::size_t n = a.rows();
  // Forward elimination with partial pivoting on the augmented system.
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot_row = col;
    double pivot = std::fabs(a(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a(r, col)) > pivot) {
        pivot = std::fabs(a(r, col));
        pivot_row = r;
      }
    }
    if (!(pivot >= pivot_tol)) {
      throw SingularBread("singular matrix: pivot " + std::to_string(pivot) +
                          " below threshold in column " + std::to_string(col));
    }
    if (pivot_row != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(pivot_row, j));
      for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(col, j), b(pivot_row, j));
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a(r, col) / a(col, col);
      if (factor == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a(r, j) -= factor * a(col, j);
      for (std::size_t j = 0; j < b.cols(); ++j) b(r, j) -= factor * b(col, j);
    }
  }
  // Back substitution.
  Matrix x(n, b.cols());
  for (std::size_t ri = n; ri-- > 0;) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = b(ri, j);
      for (std::size_t k = ri + 1; k < n; ++k) s -= a(ri, k) * x(k, j);
      x(ri, j) = s / a(ri, ri);
    }
  }
  return x;
}

Matrix invert(const Matrix& a, double pivot_tol) {
  return solve_linear(a, Matrix::identity(a.rows()), pivot_tol);
}

}  // namespace gsens
