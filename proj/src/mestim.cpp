#include "gsens/mestim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gsens/errors.hpp"
#include "gsens/stats.hpp"

namespace gsens {

namespace {

constexpr int kScanPoints = 101;
constexpr int kMaxRefineIter = 200;

// Refine a sign change f(a)*f(b) <= 0 by a bisection/secant hybrid until
// |f| <= tol or the bracket collapses to machine width.
double refine_root(const std::function<double(double)>& f, double a, double b,
                   double fa, double fb, double tol, double* residual) {
  double best_x = std::fabs(fa) < std::fabs(fb) ? a : b;
  double best_f = std::fabs(fa) < std::fabs(fb) ? fa : fb;
  for (int it = 0; it < kMaxRefineIter; ++it) {
    if (std::fabs(best_f) <= tol) break;
    double mid;
    // Secant candidate; fall back to bisection when it leaves the bracket.
    const double denom = fb - fa;
    if (denom != 0.0) {
      mid = a - fa * (b - a) / denom;
      if (!(mid > a && mid < b)) mid = 0.5 * (a + b);
    } else {
      mid = 0.5 * (a + b);
    }
    if (mid <= a || mid >= b) mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;  // bracket at machine width
    const double fm = f(mid);
    if (!std::isfinite(fm)) {
      throw NonFinite("solve_scalar_root: non-finite value at x = " + std::to_string(mid));
    }
    if (std::fabs(fm) < std::fabs(best_f)) {
      best_f = fm;
      best_x = mid;
    }
    if (fm == 0.0) break;
    if ((fa < 0.0) == (fm < 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
      fb = fm;
    }
  }
  *residual = std::fabs(best_f);
  return best_x;
}

}  // namespace

RootResult solve_scalar_root(const std::function<double(double)>& f, double lo,
                             double hi, double tol) {
  RootResult result;
  std::vector<double> xs(kScanPoints), fs(kScanPoints);
  for (int i = 0; i < kScanPoints; ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / (kScanPoints - 1);
    fs[i] = f(xs[i]);
    if (!std::isfinite(fs[i])) {
      throw NonFinite("solve_scalar_root: non-finite value at x = " + std::to_string(xs[i]));
    }
  }

  std::vector<double> roots, residuals;
  for (int i = 0; i < kScanPoints; ++i) {
    if (fs[i] == 0.0) {
      // Exact zero at a scan point; skip the interval refinements touching it.
      roots.push_back(xs[i]);
      residuals.push_back(0.0);
      continue;
    }
    if (i + 1 < kScanPoints && fs[i + 1] != 0.0 && (fs[i] < 0.0) != (fs[i + 1] < 0.0)) {
      double residual = 0.0;
      const double r = refine_root(f, xs[i], xs[i + 1], fs[i], fs[i + 1], tol, &residual);
      roots.push_back(r);
      residuals.push_back(residual);
    }
  }

  if (roots.empty()) {
    result.status = RootStatus::NoSolution;
    return result;
  }
  std::size_t pick = 0;
  for (std::size_t i = 1; i < roots.size(); ++i) {
    if (std::fabs(roots[i]) < std::fabs(roots[pick])) pick = i;
  }
  result.status = RootStatus::Solved;
  result.root = roots[pick];
  result.residual = residuals[pick];
  result.n_roots = static_cast<int>(roots.size());
  result.multiple_roots = roots.size() > 1;
  return result;
}

namespace {

// Sample mean of q_fn over all rows.
std::vector<double> mean_q(const StackedSystem& system, const Dataset& data,
                           std::span<const double> theta, double alpha) {
  const std::size_t p = system.dim_p;
  std::vector<double> acc(p, 0.0), q(p);
  for (std::size_t i = 0; i < data.n(); ++i) {
    system.q_fn(data, i, theta, alpha, q);
    for (std::size_t j = 0; j < p; ++j) acc[j] += q[j];
  }
  const double inv_n = 1.0 / static_cast<double>(data.n());
  for (double& v : acc) v *= inv_n;
  return acc;
}

}  // namespace

Matrix bread_matrix(const StackedSystem& system, const Dataset& data,
                    std::span<const double> theta, double alpha) {
  const std::size_t p = system.dim_p;
  Matrix a(p, p);
  std::vector<double> perturbed(theta.begin(), theta.end());
  for (std::size_t j = 0; j < p; ++j) {
    const double h = std::max(1e-6, 1e-6 * std::fabs(theta[j]));
    perturbed[j] = theta[j] + h;
    const auto plus = mean_q(system, data, perturbed, alpha);
    perturbed[j] = theta[j] - h;
    const auto minus = mean_q(system, data, perturbed, alpha);
    perturbed[j] = theta[j];
    for (std::size_t i = 0; i < p; ++i) {
      const double deriv = (plus[i] - minus[i]) / (2.0 * h);
      if (!std::isfinite(deriv)) {
        throw NonFinite("bread_matrix: non-finite derivative at coordinate " + std::to_string(j));
      }
      a(i, j) = -deriv;
    }
  }
  return a;
}

Matrix meat_matrix(const StackedSystem& system, const Dataset& data,
                   std::span<const double> theta, double alpha) {
  const std::size_t p = system.dim_p;
  Matrix b(p, p);
  std::vector<double> q(p);
  for (std::size_t r = 0; r < data.n(); ++r) {
    system.q_fn(data, r, theta, alpha, q);
    for (std::size_t i = 0; i < p; ++i) {
      if (!std::isfinite(q[i])) {
        throw NonFinite("meat_matrix: non-finite estimating function at row " + std::to_string(r));
      }
      for (std::size_t j = i; j < p; ++j) b(i, j) += q[i] * q[j];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(data.n());
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      b(i, j) *= inv_n;
      b(j, i) = b(i, j);
    }
  }
  return b;
}

SandwichCovariance sandwich_variance(const Matrix& a, const Matrix& b, std::size_t n) {
  const Matrix a_inv = invert(a);  // throws SingularBread below the pivot threshold
  Matrix v = a_inv * b * a_inv.transpose();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) v(i, j) *= inv_n;
  // Symmetrize.
  for (std::size_t i = 0; i < v.rows(); ++i) {
    for (std::size_t j = i + 1; j < v.cols(); ++j) {
      const double s = 0.5 * (v(i, j) + v(j, i));
      v(i, j) = s;
      v(j, i) = s;
    }
  }
  return SandwichCovariance{a, b, std::move(v), n};
}

Interval wald_ci(double estimate, double variance, double level) {
  if (variance < 0.0) {
    throw NegativeVariance("wald_ci: variance " + std::to_string(variance) + " is negative");
  }
  // Pinned constant at the default level; the generic quantile elsewhere.
  const double z = level == 0.95 ? 1.959964 : normal_quantile(0.5 * (1.0 + level));
  const double half = z * std::sqrt(variance);
  return Interval{estimate - half, estimate + half};
}

}  // namespace gsens
