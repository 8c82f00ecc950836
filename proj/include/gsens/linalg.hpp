#pragma once

#include <cstddef>
#include <vector>

namespace gsens {

// Dense row-major matrix. Everything in this project is at most 6x6, so the
// implementation favors auditability over speed.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Matrix transpose() const;
  Matrix operator*(const Matrix& rhs) const;

  double max_abs() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Inverse by Gaussian elimination with partial pivoting; throws SingularBread
// when a pivot magnitude falls below `pivot_tol`.
Matrix invert(const Matrix& a, double pivot_tol = 1e-12);

// Solve a (possibly multi-RHS) linear system a * x = b with the same pivoting rule.
Matrix solve_linear(Matrix a, Matrix b, double pivot_tol = 1e-12);

}  // namespace gsens
