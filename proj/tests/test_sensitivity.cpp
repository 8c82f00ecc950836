#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "gsens/errors.hpp"
#include "gsens/sensitivity.hpp"
#include "gsens/simulation.hpp"
#include "gsens/stats.hpp"

#include "test_util.hpp"

using namespace gsens;

TEST_CASE("fit_g_estimator equals the closed form on identity-link data") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const Dataset data = test::synthetic_linear(1200, seed, 0.9, 0.15);
    SmmSpec spec;
    spec.link = Link::Identity;
    for (double alpha : {-0.3, 0.0, 0.2, 0.45}) {
      const GEstimate fit = fit_g_estimator(data, spec, alpha);
      REQUIRE(fit.status == FitStatus::Solved);
      CHECK(std::fabs(fit.psi - closed_form_linear(data, alpha)) <= 1e-8);
      CHECK(fit.root_residual <= 1e-8);
      CHECK(fit.ci.lo <= fit.psi);
      CHECK(fit.ci.hi >= fit.psi);
    }
  }
}

TEST_CASE("closed_form_linear: alpha zero is the Wald ratio") {
  const Dataset data = test::synthetic_linear(800, 5);
  const double wald = covariance_n(data.y, data.z) / covariance_n(data.x, data.z);
  CHECK(closed_form_linear(data, 0.0) == doctest::Approx(wald).epsilon(1e-12));
}

TEST_CASE("closed_form_linear: degenerate Y=X=Z gives one") {
  Dataset d;
  d.z = {1.0, 0.0, 1.0, 0.0, 1.0};
  d.x = d.z;
  d.y = d.z;
  CHECK(closed_form_linear(d, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("closed_form_linear: uncorrelated exposure is a weak instrument") {
  Dataset d;
  d.z = {1.0, 0.0, 1.0, 0.0};
  d.x = {1.0, 1.0, 1.0, 1.0};  // cov(X,Z) = 0
  d.y = {0.5, 0.2, 0.9, 0.4};
  CHECK_THROWS_AS(closed_form_linear(d, 0.0), WeakInstrument);
}

TEST_CASE("sweep_alpha: singleton grid equals a single fit") {
  const Dataset data = test::synthetic_linear(500, 7);
  SmmSpec spec;
  spec.link = Link::Identity;
  const std::vector<double> grid{0.0};
  const SweepResult sweep = sweep_alpha(data, spec, grid);
  const GEstimate fit = fit_g_estimator(data, spec, 0.0);
  REQUIRE(sweep.entries.size() == 1);
  CHECK(sweep.entries[0].psi == fit.psi);
  CHECK(sweep.entries[0].ci.lo == fit.ci.lo);
  CHECK(sweep.entries[0].ci.hi == fit.ci.hi);
  REQUIRE(sweep.solvable_range.has_value());
  CHECK(sweep.solvable_range->first == 0.0);
  CHECK(sweep.solvable_range->second == 0.0);
}

TEST_CASE("sweep_alpha: psi(alpha) is affine with slope -1/beta_xz") {
  const Dataset data = test::synthetic_linear(1000, 11, 1.4, -0.2);
  SmmSpec spec;
  spec.link = Link::Identity;
  std::vector<double> grid;
  for (int k = -10; k <= 10; ++k) grid.push_back(0.02 * k);
  const SweepResult sweep = sweep_alpha(data, spec, grid);

  const double var_z = variance_n(data.z);
  const double beta_xz = covariance_n(data.x, data.z) / var_z;
  const double psi0 = sweep.entries[10].psi;  // alpha = 0
  for (std::size_t j = 0; j < grid.size(); ++j) {
    REQUIRE(sweep.entries[j].status == FitStatus::Solved);
    const double expected = psi0 - grid[j] / beta_xz;
    CHECK(std::fabs(sweep.entries[j].psi - expected) <= 1e-8);
  }
}

TEST_CASE("sweep_alpha: rejects malformed grids") {
  const Dataset data = test::synthetic_linear(100, 13);
  SmmSpec spec;
  CHECK_THROWS_AS(sweep_alpha(data, spec, std::vector<double>{}), ConfigError);
  CHECK_THROWS_AS(sweep_alpha(data, spec, std::vector<double>{0.2, 0.1}), ConfigError);
}

TEST_CASE("compose_alpha: additive and symmetric") {
  CHECK(compose_alpha(0.0, 0.0) == 0.0);
  CHECK(compose_alpha(0.3, 0.2) == doctest::Approx(0.5));
  SplitMix64 rng(17);
  for (int i = 0; i < 50; ++i) {
    const double a = rng.next_normal();
    const double b = rng.next_normal();
    CHECK(compose_alpha(a, b) == compose_alpha(b, a));
  }
}

TEST_CASE("asymptotic_bias_linear: arithmetic and guard") {
  CHECK(asymptotic_bias_linear(0.0, 0.7) == 0.0);
  CHECK(asymptotic_bias_linear(0.5, 0.25) == doctest::Approx(2.0));
  CHECK_THROWS_AS(asymptotic_bias_linear(0.1, 0.0), WeakInstrument);
}

TEST_CASE("asymptotic_bias_linear: Monte Carlo agreement with the bias law") {
  // Uncorrected G-estimation (alpha = 0) under a true violation alpha* = 0.5:
  // the mean bias equals alpha*/beta_XZ.
  const LinearDgpConfig config = calibrate_linear(0.0, 0.5, 0.5, 0.6);
  const double beta_xz = implied_beta_xz(config.p_z, config.gamma_0, config.gamma_z);
  SmmSpec spec;
  spec.link = Link::Identity;
  const std::size_t m = 300, n = 1000;
  std::vector<double> estimates;
  estimates.reserve(m);
  for (std::size_t r = 0; r < m; ++r) {
    const Dataset data = generate_linear(config, n, derive_seed(2024, r));
    const GEstimate fit = fit_g_estimator(data, spec, 0.0);
    REQUIRE(fit.status == FitStatus::Solved);
    estimates.push_back(fit.psi);
  }
  const double bias_hat = mean(estimates) - config.psi;
  const double expected = config.alpha_star / beta_xz;
  const double mc_se = sd_sample(estimates) / std::sqrt(static_cast<double>(m));
  CHECK(std::fabs(bias_hat - expected) <= 3.0 * mc_se);
}

// Sample-exact identity behind the OLS-equivalence lemma: plugging the fitted
// partial coefficient of Z into the corrected G-estimator reproduces the OLS
// coefficient of X from the regression of Y on (1, X, Z).
TEST_CASE("corrected G-estimate at the fitted alpha equals the OLS slope") {
  const Dataset data = test::synthetic_linear(2000, 19, 1.1, 0.4);
  const double vx = variance_n(data.x);
  const double vz = variance_n(data.z);
  const double cxz = covariance_n(data.x, data.z);
  const double cyx = covariance_n(data.y, data.x);
  const double cyz = covariance_n(data.y, data.z);
  const double det = vx * vz - cxz * cxz;
  const double ols_x = (cyx * vz - cyz * cxz) / det;
  const double ols_z = (cyz * vx - cyx * cxz) / det;

  SmmSpec spec;
  spec.link = Link::Identity;
  const GEstimate fit = fit_g_estimator(data, spec, ols_z);
  REQUIRE(fit.status == FitStatus::Solved);
  CHECK(std::fabs(fit.psi - ols_x) <= 1e-6);
}

// Joint (psi, alpha) estimation is non-identifiable: a second D-function makes
// the 2x2 coefficient matrix of the augmented system numerically singular.
TEST_CASE("augmented two-D system has an ill-conditioned coefficient matrix") {
  const LinearDgpConfig config = calibrate_linear(1.0, 0.0, 0.5, 0.6);
  const Dataset data = generate_linear(config, 20000, 3030);
  const double mu_z = mean(data.z);
  const std::size_t n = data.n();

  std::vector<double> d1(n), d2(n);
  double g_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) g_mean += std::exp(data.z[i]);
  g_mean /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    d1[i] = data.z[i] - mu_z;
    d2[i] = std::exp(data.z[i]) - g_mean;  // mean-zero, nonlinear in z
  }
  const double a11 = covariance_n(d1, data.x), a12 = covariance_n(d1, data.z);
  const double a21 = covariance_n(d2, data.x), a22 = covariance_n(d2, data.z);

  // Condition number of the 2x2 from its singular values.
  const double t = a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22;
  const double det = a11 * a22 - a12 * a21;
  const double s = std::sqrt(std::max(0.0, t * t - 4.0 * det * det));
  const double smax = std::sqrt((t + s) / 2.0);
  const double smin = std::sqrt(std::max(0.0, (t - s) / 2.0));
  const double cond = smin == 0.0 ? std::numeric_limits<double>::infinity() : smax / smin;
  CHECK(cond > 1e8);
}

TEST_CASE("relevance_check: perfect collinearity is flagged") {
  Dataset d;
  d.z = {1.0, 0.0, 1.0, 0.0, 1.0, 0.0};
  d.x = d.z;
  d.y.assign(6, 0.0);
  const RelevanceResult result = relevance_check(d);
  CHECK(result.perfect_collinearity);
  CHECK(std::isinf(result.f_stat));
  CHECK(result.coef == doctest::Approx(1.0));
}

TEST_CASE("relevance_check: constant instrument is rank deficient") {
  Dataset d;
  d.z.assign(10, 1.0);
  d.x = {0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0};
  d.y.assign(10, 0.0);
  CHECK_THROWS_AS(relevance_check(d), RankDeficient);
}

TEST_CASE("relevance_check: F stays below the null 99th percentile almost always") {
  // Z independent of X: F ~ F(1, n-2); P(F < q99) = 0.99 per replication, so
  // at least 95% of 200 replications should fall below.
  const std::size_t n = 10000;
  const double t99 = student_t_quantile(0.995, static_cast<double>(n - 2));
  const double f99 = t99 * t99;
  int below = 0;
  for (int rep = 0; rep < 200; ++rep) {
    SplitMix64 rng(derive_seed(555, rep));
    Dataset d;
    d.y.assign(n, 0.0);
    d.x.resize(n);
    d.z.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      d.z[i] = rng.next_bernoulli(0.5) ? 1.0 : 0.0;
      d.x[i] = rng.next_normal();
    }
    if (relevance_check(d).f_stat < f99) ++below;
  }
  CHECK(below >= 190);
}

TEST_CASE("relevance_check: matches a hand-computed OLS on a fixed dataset") {
  Dataset d;
  d.z = {0.0, 0.0, 1.0, 1.0, 0.0, 1.0};
  d.x = {0.1, -0.2, 0.9, 1.3, 0.05, 1.1};
  d.y.assign(6, 0.0);
  const RelevanceResult result = relevance_check(d);
  // OLS slope and F computed directly.
  const double zbar = mean(d.z), xbar = mean(d.x);
  double szz = 0.0, sxz = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    szz += (d.z[i] - zbar) * (d.z[i] - zbar);
    sxz += (d.z[i] - zbar) * (d.x[i] - xbar);
    sxx += (d.x[i] - xbar) * (d.x[i] - xbar);
  }
  const double slope = sxz / szz;
  const double rss = sxx - slope * sxz;
  const double se = std::sqrt(rss / 4.0 / szz);
  CHECK(result.coef == doctest::Approx(slope).epsilon(1e-12));
  CHECK(result.f_stat == doctest::Approx(slope * slope / (se * se)).epsilon(1e-10));
  CHECK(result.df.first == 1);
  CHECK(result.df.second == 4);
}

TEST_CASE("fit_g_estimator: logit link on synthetic data solves and covers sanely") {
  const Dataset data = test::synthetic_logistic(3000, 101);
  SmmSpec spec;
  spec.link = Link::Logit;
  const GEstimate fit = fit_g_estimator(data, spec, 0.0);
  REQUIRE(fit.status == FitStatus::Solved);
  CHECK(fit.theta.size() == 6);
  CHECK(fit.root_residual <= 1e-8);
  CHECK(fit.ci.lo < fit.psi);
  CHECK(fit.ci.hi > fit.psi);
  CHECK(fit.psi_variance > 0.0);
}

TEST_CASE("solved fits zero the mean of the full stacked system") {
  const Dataset data = test::synthetic_logistic(1200, 107);
  SmmSpec spec;
  spec.link = Link::Logit;
  const GEstimate fit = fit_g_estimator(data, spec, 0.05);
  REQUIRE(fit.status == FitStatus::Solved);
  const StackedSystem system = build_stacked_system(data, spec);
  std::vector<double> acc(system.dim_p, 0.0), q(system.dim_p);
  for (std::size_t i = 0; i < data.n(); ++i) {
    system.q_fn(data, i, fit.theta, 0.05, q);
    for (std::size_t j = 0; j < system.dim_p; ++j) acc[j] += q[j];
  }
  for (double v : acc) CHECK(std::fabs(v / static_cast<double>(data.n())) <= 1e-8);
}

// Continuous exposure with a rare binary instrument, the shape of the
// mortality analysis the CLI targets: scaled exposure, logit link, sweep with
// a no-solution boundary on the negative side.
TEST_CASE("fit_g_estimator: logit link with a continuous exposure") {
  SplitMix64 rng(606);
  const std::size_t n = 4000;
  Dataset data;
  data.y.resize(n);
  data.x.resize(n);
  data.z.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = rng.next_bernoulli(0.09) ? 1.0 : 0.0;
    const double u = rng.next_normal();
    const double x = 1.8 + 0.3 * z + 0.8 * u + 0.6 * rng.next_normal();
    data.z[i] = z;
    data.x[i] = x;
    data.y[i] = rng.next_bernoulli(expit(-1.2 - 0.4 * x + 0.5 * u)) ? 1.0 : 0.0;
  }
  const double sd = sd_sample(data.x);
  for (double& v : data.x) v /= sd;

  SmmSpec spec;
  spec.link = Link::Logit;
  const GEstimate fit = fit_g_estimator(data, spec, 0.0);
  REQUIRE(fit.status == FitStatus::Solved);
  CHECK(fit.root_residual <= 1e-8);
  CHECK(fit.psi < 0.0);  // protective exposure by construction
  CHECK(fit.ci.lo < fit.ci.hi);

  std::vector<double> grid;
  for (int k = -8; k <= 10; ++k) grid.push_back(0.05 * k);
  const SweepResult sweep = sweep_alpha(data, spec, grid);
  REQUIRE(sweep.solvable_range.has_value());
  // Signs stay negative across the solvable range and psi decreases in alpha.
  double prev = 1e300;
  for (const GEstimate& e : sweep.entries) {
    if (e.status != FitStatus::Solved) continue;
    CHECK(e.psi < prev);
    prev = e.psi;
  }
}

TEST_CASE("fit_g_estimator: log link fits without a calibrated DGP") {
  // Positive outcome so the log-link transform is meaningful.
  SplitMix64 rng(202);
  const std::size_t n = 4000;
  Dataset data;
  data.y.resize(n);
  data.x.resize(n);
  data.z.resize(n);
  const double psi_true = 0.6;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = rng.next_bernoulli(0.5) ? 1.0 : 0.0;
    const double x = rng.next_bernoulli(expit(-0.5 + 1.2 * z)) ? 1.0 : 0.0;
    data.z[i] = z;
    data.x[i] = x;
    data.y[i] = std::exp(psi_true * x) * (0.5 + rng.next_uniform());
  }
  SmmSpec spec;
  spec.link = Link::Log;
  const GEstimate fit = fit_g_estimator(data, spec, 0.0);
  REQUIRE(fit.status == FitStatus::Solved);
  CHECK(fit.psi == doctest::Approx(psi_true).epsilon(0.15));
}

TEST_CASE("fit_g_estimator: no solution when the estimating function has no root") {
  // Constant exposure makes the psi-row flat and nonzero over any bracket.
  Dataset d;
  const std::size_t n = 80;
  d.y.resize(n);
  d.x.assign(n, 0.0);
  d.z.resize(n);
  SplitMix64 rng(303);
  for (std::size_t i = 0; i < n; ++i) {
    d.z[i] = rng.next_bernoulli(0.5) ? 1.0 : 0.0;
    d.y[i] = 1.0 + d.z[i] + 0.1 * rng.next_normal();
  }
  SmmSpec spec;
  spec.link = Link::Identity;
  const GEstimate fit = fit_g_estimator(d, spec, 0.0);
  CHECK(fit.status == FitStatus::NoSolution);
  CHECK(std::isnan(fit.psi));
}
