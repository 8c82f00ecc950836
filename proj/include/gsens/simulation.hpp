#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gsens/dataset.hpp"
#include "gsens/smm.hpp"

namespace gsens {

// Z ~ Ber(p_z); X|Z ~ Ber(expit(gamma_0 + gamma_z Z));
// Y|X,Z ~ N(beta_0 + beta_x X + beta_z Z + beta_xz XZ, sigma^2).
struct LinearDgpConfig {
  double p_z = 0.5;
  double gamma_0 = -1.0;
  double gamma_z = 0.0;
  double beta_0 = 1.0;
  double beta_x = 1.0;
  double beta_z = 1.0;
  double beta_xz = 0.0;
  double sigma = 1.0;
  double psi = 0.0;
  double alpha_star = 0.0;
};

// As above with Y|X,Z ~ Ber(expit(...)) and target marginals p_y, p_x.
struct LogisticDgpConfig {
  double p_z = 0.5;
  double gamma_0 = -1.0;
  double gamma_z = 0.0;
  double beta_0 = 0.0;
  double beta_x = 1.0;
  double beta_z = 1.0;
  double beta_xz = 0.0;
  double psi = 0.0;
  double alpha_star = 0.0;
  double p_y = 0.3;
  double p_x = 0.6;
};

// The violation implied by a coefficient set:
//   E[Y_0|Z=1] - E[Y_0|Z=0]                  (linear)
//   logit P(Y_0=1|Z=1) - logit P(Y_0=1|Z=0)  (logistic)
// Both marginalize X|Z with weights P(X=1|Z=z) = expit(gamma_0 + gamma_z z).
double linear_alpha_star(const LinearDgpConfig& config);
double logistic_alpha_star(const LogisticDgpConfig& config);

// Marginals implied by the coefficients over the joint law of (X, Z).
double implied_p_x(double p_z, double gamma_0, double gamma_z);
double logistic_implied_p_y(const LogisticDgpConfig& config);

// Population cov(X,Z)/var(Z) under the exposure model; the slope that converts
// an alpha misspecification into G-estimator bias in the linear model.
double implied_beta_xz(double p_z, double gamma_0, double gamma_z);

// Solves gamma_z from the p_x target (closed form via logit), then beta_xz
// from the violation identity, which is affine in beta_xz. Fixed coefficients:
// beta_0 = beta_x = beta_z = 1, gamma_0 = -1. Throws Unreachable when the
// required expit value falls outside (0,1).
LinearDgpConfig calibrate_linear(double psi, double alpha_star, double p_z,
                                 double p_x, double sigma = 1.0);

// gamma_z as above, then a nested solve of (beta_0, beta_xz): beta_0 from the
// p_y marginal (monotone bisection) inside a bracketed root solve of the
// violation identity in beta_xz. Fixed: beta_x = beta_z = 1, gamma_0 = -1.
LogisticDgpConfig calibrate_logistic(double psi, double alpha_star, double p_z,
                                     double p_x, double p_y);

// Deterministic given (config, n, seed).
Dataset generate_linear(const LinearDgpConfig& config, std::size_t n, std::uint64_t seed);
Dataset generate_logistic(const LogisticDgpConfig& config, std::size_t n, std::uint64_t seed);

struct AlphaSummary {
  double alpha = 0.0;
  double coverage = 0.0;        // fraction of all m replications whose CI covers psi
  double mean_ci_length = 0.0;  // over Solved replications only
  double mean_est = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  std::size_t n_solved = 0;
  std::size_t n_no_solution = 0;
  std::size_t n_singular = 0;
  std::size_t n_nuisance_failed = 0;  // outcome/instrument fit failed for the replication

  std::size_t n_failed() const { return n_no_solution + n_singular + n_nuisance_failed; }
};

struct MonteCarloReport {
  std::vector<double> grid;
  std::vector<AlphaSummary> rows;
  std::size_t m = 0;
  std::size_t n = 0;
  std::uint64_t master_seed = 0;
  double true_psi = 0.0;
};

// m replications of size n: per replication, generate a dataset from seed
// derive_seed(master_seed, r) and sweep the alpha grid; aggregate coverage of
// the true psi, mean CI length, and estimate summaries per alpha. Replications
// run on `threads` threads; results are stored per replication index, so the
// report is bit-identical for any thread count.
MonteCarloReport run_monte_carlo(const LinearDgpConfig& config, const SmmSpec& spec,
                                 std::size_t n, std::size_t m,
                                 std::span<const double> grid,
                                 std::uint64_t master_seed, unsigned threads = 1);

MonteCarloReport run_monte_carlo(const LogisticDgpConfig& config, const SmmSpec& spec,
                                 std::size_t n, std::size_t m,
                                 std::span<const double> grid,
                                 std::uint64_t master_seed, unsigned threads = 1);

}  // namespace gsens
