#pragma once

#include <cmath>
#include <span>

namespace gsens {

inline double expit(double x) {
  // Branch keeps exp() argument nonpositive so neither side overflows.
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

double mean(std::span<const double> v);

// Covariance and variance with the n denominator.
double covariance_n(std::span<const double> a, std::span<const double> b);
double variance_n(std::span<const double> v);

// Sample standard deviation (n-1 denominator).
double sd_sample(std::span<const double> v);

// Linear-interpolation quantile (R type 7); v need not be sorted.
double quantile_type7(std::span<const double> v, double p);

// Inverse standard-normal CDF (Acklam's rational approximation plus one
// Halley refinement through erfc; accurate to ~1e-15).
double normal_quantile(double p);

// Student-t quantile, p in (0,1), df >= 1. Used for the instrument-relevance CI.
double student_t_quantile(double p, double df);

// Regularized incomplete beta I_x(a, b) by Lentz continued fraction.
double incomplete_beta(double a, double b, double x);

}  // namespace gsens
