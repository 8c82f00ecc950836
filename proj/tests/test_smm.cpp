#include <doctest.h>

#include <cmath>
#include <vector>

#include "gsens/errors.hpp"
#include "gsens/simulation.hpp"
#include "gsens/smm.hpp"
#include "gsens/stats.hpp"

#include "test_util.hpp"

using namespace gsens;

namespace {

Dataset single_row(double y, double x, double z) {
  Dataset d;
  d.y = {y};
  d.x = {x};
  d.z = {z};
  return d;
}

}  // namespace

TEST_CASE("h_psi_alpha: identity link by direct substitution") {
  const Dataset d = single_row(3.0, 1.0, 1.0);
  SmmSpec spec;
  spec.link = Link::Identity;
  CHECK(h_psi_alpha(d, 0, 1.0, 0.5, spec, nullptr) == doctest::Approx(1.5));
}

TEST_CASE("h_psi_alpha: logit link with zero coefficients is one half") {
  const Dataset d = single_row(1.0, 1.0, 0.0);
  SmmSpec spec;
  spec.link = Link::Logit;
  OutcomeModel outcome;
  outcome.terms = spec.outcome_terms;
  outcome.beta = {0.0, 0.0, 0.0, 0.0};
  CHECK(h_psi_alpha(d, 0, 0.0, 0.0, spec, &outcome) == doctest::Approx(0.5));
}

TEST_CASE("h_psi_alpha: log link") {
  const Dataset d = single_row(2.0, 1.0, 0.0);
  SmmSpec spec;
  spec.link = Link::Log;
  CHECK(h_psi_alpha(d, 0, std::log(2.0), 0.0, spec, nullptr) == doctest::Approx(1.0));
}

TEST_CASE("h_psi_alpha: logit link without an outcome model throws") {
  const Dataset d = single_row(1.0, 1.0, 1.0);
  SmmSpec spec;
  spec.link = Link::Logit;
  CHECK_THROWS_AS(h_psi_alpha(d, 0, 0.0, 0.0, spec, nullptr), MissingOutcomeModel);
}

TEST_CASE("violation: vanishes at alpha zero and grows with |alpha|") {
  for (double z : {0.0, 1.0}) CHECK(violation(0.0, z) == 0.0);
  double prev = 0.0;
  for (double a : {0.1, 0.2, 0.5, 1.0, 2.0}) {
    const double mag = std::fabs(violation(a, 1.0));
    CHECK(mag >= prev);
    CHECK(mag == std::fabs(violation(-a, 1.0)));
    prev = mag;
  }
}

TEST_CASE("logit h stays inside (0,1)") {
  const Dataset data = test::synthetic_logistic(400, 3);
  SmmSpec spec;
  spec.link = Link::Logit;
  const OutcomeModel outcome = fit_outcome_model(data, spec.outcome_terms);
  SplitMix64 rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t row = rng.next_u64() % data.n();
    const double psi = 8.0 * (rng.next_uniform() - 0.5);
    const double alpha = 4.0 * (rng.next_uniform() - 0.5);
    const double h = h_psi_alpha(data, row, psi, alpha, spec, &outcome);
    CHECK(h > 0.0);
    CHECK(h < 1.0);
  }
}

TEST_CASE("d_function: intercept-only instrument model") {
  Dataset d;
  d.y = {0.0, 0.0};
  d.x = {0.0, 0.0};
  d.z = {1.0, 0.0};
  InstrumentModel inst;
  inst.coef = {0.5};
  CHECK(d_function(d, 0, inst) == doctest::Approx(0.5));
  CHECK(d_function(d, 1, inst) == doctest::Approx(-0.5));
}

TEST_CASE("d_function: mean over the fitting dataset is zero") {
  const Dataset data = test::synthetic_linear(3001, 17);
  const InstrumentModel inst = fit_instrument_model(data);
  double acc = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) acc += d_function(data, i, inst);
  CHECK(std::fabs(acc / static_cast<double>(data.n())) < 1e-12);
}

TEST_CASE("fit_outcome_model: intercept-only MLE is logit of the outcome mean") {
  const Dataset data = test::synthetic_logistic(500, 23);
  const OutcomeModel model = fit_outcome_model(data, {Term::Intercept});
  CHECK(model.converged);
  CHECK(model.beta[0] == doctest::Approx(logit(mean(data.y))).epsilon(1e-9));
}

TEST_CASE("fit_outcome_model: scores vanish at the MLE") {
  const Dataset data = test::synthetic_logistic(2000, 29);
  SmmSpec spec;
  const OutcomeModel model = fit_outcome_model(data, spec.outcome_terms);
  double score[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double resid = data.y[i] - model.predict_prob(data, i);
    score[0] += resid;
    score[1] += resid * data.x[i];
    score[2] += resid * data.z[i];
    score[3] += resid * data.x[i] * data.z[i];
  }
  for (double s : score) CHECK(std::fabs(s) <= 1e-8);
}

TEST_CASE("fit_outcome_model: consistency on a large calibrated sample") {
  const LogisticDgpConfig config = calibrate_logistic(0.4, 0.2, 0.5, 0.6, 0.3);
  const Dataset data = generate_logistic(config, 100000, 4242);
  SmmSpec spec;
  const OutcomeModel model = fit_outcome_model(data, spec.outcome_terms);
  const double truth[4] = {config.beta_0, config.beta_x, config.beta_z, config.beta_xz};

  // Model-based standard errors from the inverse information at the MLE.
  Matrix info(4, 4);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double p = model.predict_prob(data, i);
    const double w = p * (1.0 - p);
    const double t[4] = {1.0, data.x[i], data.z[i], data.x[i] * data.z[i]};
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) info(a, b) += w * t[a] * t[b];
  }
  const Matrix cov = invert(info);
  for (int j = 0; j < 4; ++j) {
    const double se = std::sqrt(cov(j, j));
    CHECK(std::fabs(model.beta[j] - truth[j]) < 3.0 * se);
  }
}

TEST_CASE("fit_outcome_model: all-ones outcome separates") {
  Dataset d;
  d.y.assign(50, 1.0);
  d.x.assign(50, 0.0);
  d.z.assign(50, 0.0);
  for (std::size_t i = 0; i < 25; ++i) d.x[i] = 1.0;
  CHECK_THROWS_AS(fit_outcome_model(d, {Term::Intercept, Term::X}), Separation);
}

TEST_CASE("fit_outcome_model: duplicated design column is rank deficient") {
  const Dataset data = test::synthetic_logistic(200, 31);
  CHECK_THROWS_AS(fit_outcome_model(data, {Term::Intercept, Term::X, Term::X}), RankDeficient);
}

TEST_CASE("fit_instrument_model: intercept-only equals the sample mean") {
  Dataset d;
  d.y.assign(4, 0.0);
  d.x.assign(4, 0.0);
  d.z = {1.0, 0.0, 1.0, 0.0};
  const InstrumentModel model = fit_instrument_model(d);
  CHECK(model.mu_z() == doctest::Approx(0.5));
  CHECK(model.intercept_only);
}

TEST_CASE("fit_instrument_model: constant z with covariates is rank deficient") {
  Dataset d;
  d.y.assign(20, 0.0);
  d.x.assign(20, 0.0);
  d.z.assign(20, 1.0);
  d.l.push_back(std::vector<double>(20, 0.0));
  for (std::size_t i = 0; i < 20; ++i) d.l[0][i] = static_cast<double>(i);
  InstrumentFormula formula;
  formula.include_l = true;
  CHECK_THROWS_AS(fit_instrument_model(d, formula), RankDeficient);
}

TEST_CASE("fit_instrument_model: covariate fits predict within range") {
  SplitMix64 rng(55);
  Dataset d;
  const std::size_t n = 5000;
  d.y.assign(n, 0.0);
  d.x.assign(n, 0.0);
  d.z.resize(n);
  d.l.push_back(std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    d.l[0][i] = rng.next_normal();
    d.z[i] = rng.next_bernoulli(expit(0.3 + 0.9 * d.l[0][i])) ? 1.0 : 0.0;
  }
  InstrumentFormula formula;
  formula.include_l = true;
  const InstrumentModel model = fit_instrument_model(d, formula);
  CHECK(model.logistic);
  CHECK(model.coef[0] == doctest::Approx(0.3).epsilon(0.15));
  CHECK(model.coef[1] == doctest::Approx(0.9).epsilon(0.15));
}

TEST_CASE("build_stacked_system: identity psi-row has the product form") {
  const Dataset data = test::synthetic_linear(50, 41);
  SmmSpec spec;
  spec.link = Link::Identity;
  const StackedSystem system = build_stacked_system(data, spec);
  CHECK(system.dim_p == 2);
  const double mu_z = 0.47, psi = 1.3, alpha = 0.2;
  const std::vector<double> theta{mu_z, psi};
  std::vector<double> q(2);
  for (std::size_t i = 0; i < data.n(); ++i) {
    system.q_fn(data, i, theta, alpha, q);
    const double expected_s = data.z[i] - mu_z;
    const double expected_psi =
        (data.z[i] - mu_z) * (data.y[i] - psi * data.x[i] - alpha * data.z[i]);
    CHECK(q[0] == doctest::Approx(expected_s).epsilon(1e-14));
    CHECK(q[1] == doctest::Approx(expected_psi).epsilon(1e-14));
  }
}

TEST_CASE("build_stacked_system: logit psi-row uses the raw expit form") {
  const Dataset data = test::synthetic_logistic(50, 43);
  SmmSpec spec;
  spec.link = Link::Logit;
  const StackedSystem system = build_stacked_system(data, spec);
  CHECK(system.dim_p == 6);
  CHECK(system.partition.beta_y_begin == 0);
  CHECK(system.partition.beta_y_end == 4);
  CHECK(system.partition.mu_z_index == 4);
  CHECK(system.partition.psi_index == 5);

  const std::vector<double> theta{0.2, -0.4, 0.6, 0.1, 0.45, 0.8};
  const double alpha = -0.1;
  std::vector<double> q(6);
  for (std::size_t i = 0; i < data.n(); ++i) {
    system.q_fn(data, i, theta, alpha, q);
    const double lp = theta[0] + theta[1] * data.x[i] + theta[2] * data.z[i] +
                      theta[3] * data.x[i] * data.z[i];
    const double resid = data.y[i] - expit(lp);
    CHECK(q[0] == doctest::Approx(resid).epsilon(1e-14));
    CHECK(q[1] == doctest::Approx(resid * data.x[i]).epsilon(1e-14));
    CHECK(q[2] == doctest::Approx(resid * data.z[i]).epsilon(1e-14));
    CHECK(q[3] == doctest::Approx(resid * data.x[i] * data.z[i]).epsilon(1e-14));
    CHECK(q[4] == doctest::Approx(data.z[i] - theta[4]).epsilon(1e-14));
    const double h = expit(lp - data.x[i] * theta[5] - alpha * data.z[i]);
    CHECK(q[5] == doctest::Approx((data.z[i] - theta[4]) * h).epsilon(1e-14));
  }
}

// Unbiasedness of D*h at the true (psi, alpha*) on calibrated data; the true
// nuisances (mu_Z = p_z and the DGP outcome coefficients) make D*h an iid
// mean-zero sequence, so the sample mean sits within 4 SEs of zero.
TEST_CASE("stacked psi-row is mean-unbiased at the truth") {
  const std::size_t n = 200000;

  SUBCASE("linear") {
    const LinearDgpConfig config = calibrate_linear(1.5, 0.5, 0.5, 0.6);
    const Dataset data = generate_linear(config, n, 991);
    double acc = 0.0, acc_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = (data.z[i] - config.p_z) *
                       (data.y[i] - config.psi * data.x[i] - config.alpha_star * data.z[i]);
      acc += v;
      acc_sq += v * v;
    }
    const double m = acc / n;
    const double se = std::sqrt((acc_sq / n - m * m) / n);
    CHECK(std::fabs(m) <= 4.0 * se);
  }

  SUBCASE("logistic") {
    const LogisticDgpConfig config = calibrate_logistic(0.5, 0.5, 0.5, 0.6, 0.3);
    const Dataset data = generate_logistic(config, n, 992);
    SmmSpec spec;
    spec.link = Link::Logit;
    OutcomeModel outcome;
    outcome.terms = spec.outcome_terms;
    outcome.beta = {config.beta_0, config.beta_x, config.beta_z, config.beta_xz};
    double acc = 0.0, acc_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double h =
          h_psi_alpha(data, i, config.psi, config.alpha_star, spec, &outcome);
      const double v = (data.z[i] - config.p_z) * h;
      acc += v;
      acc_sq += v * v;
    }
    const double m = acc / n;
    const double se = std::sqrt((acc_sq / n - m * m) / n);
    CHECK(std::fabs(m) <= 4.0 * se);
  }
}

TEST_CASE("build_stacked_system: logit link demands a binary outcome") {
  Dataset d = test::synthetic_linear(50, 47);  // continuous outcome
  SmmSpec spec;
  spec.link = Link::Logit;
  CHECK_THROWS_AS(build_stacked_system(d, spec), Error);
}
