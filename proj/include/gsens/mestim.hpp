#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "gsens/dataset.hpp"
#include "gsens/linalg.hpp"

namespace gsens {

// Index layout of the stacked parameter vector theta = (beta_Y, mu_Z, psi).
// beta_Y may be empty (identity and log links need no outcome model).
struct ParamPartition {
  std::size_t beta_y_begin = 0;
  std::size_t beta_y_end = 0;  // one past the last outcome coefficient
  std::size_t mu_z_index = 0;
  std::size_t psi_index = 0;
};

// Per-observation estimating function Q_i(theta, alpha), written into `out`
// (length dim_p). At a solution, the sample mean of q_fn over the dataset has
// max-abs entry below the solver tolerance.
using QFn = std::function<void(const Dataset& data, std::size_t row,
                               std::span<const double> theta, double alpha,
                               std::span<double> out)>;

struct StackedSystem {
  QFn q_fn;
  std::size_t dim_p = 0;
  ParamPartition partition;
};

// ---- Scalar root finding ---------------------------------------------------

enum class RootStatus { Solved, NoSolution };

struct RootResult {
  RootStatus status = RootStatus::NoSolution;
  double root = 0.0;
  double residual = 0.0;   // |f| at the returned root
  int n_roots = 0;         // sign-change intervals found on the scan
  bool multiple_roots = false;
};

// Scans 101 equally spaced points of [lo, hi], refines every sign change by a
// bisection/secant hybrid, and returns the root of smallest |x| (multiplicity
// flagged). NoSolution when the scan shows no sign change. Throws NonFinite if
// f is not finite anywhere on the bracket.
RootResult solve_scalar_root(const std::function<double(double)>& f, double lo,
                             double hi, double tol = 1e-10);

// ---- Sandwich-formula covariance -------------------------------------------

struct SandwichCovariance {
  Matrix bread;     // A = -(sample-mean Jacobian of Q wrt theta)
  Matrix meat;      // B = n^-1 sum Q_i Q_i^T
  Matrix variance;  // V = n^-1 A^-1 B A^-T, symmetrized
  std::size_t n = 0;
};

// Central finite differences with per-coordinate step max(1e-6, 1e-6*|theta_j|).
Matrix bread_matrix(const StackedSystem& system, const Dataset& data,
                    std::span<const double> theta, double alpha);

Matrix meat_matrix(const StackedSystem& system, const Dataset& data,
                   std::span<const double> theta, double alpha);

// Throws SingularBread when a pivot falls below 1e-12 while inverting A.
SandwichCovariance sandwich_variance(const Matrix& a, const Matrix& b, std::size_t n);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Wald interval estimate +- z * sqrt(variance); z = 1.959964 at level 0.95.
Interval wald_ci(double estimate, double variance, double level = 0.95);

}  // namespace gsens
