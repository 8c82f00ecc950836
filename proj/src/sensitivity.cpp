#include "gsens/sensitivity.hpp"

#include <cmath>
#include <limits>

#include "gsens/errors.hpp"
#include "gsens/stats.hpp"

namespace gsens {

std::string to_string(FitStatus status) {
  switch (status) {
    case FitStatus::Solved: return "solved";
    case FitStatus::NoSolution: return "no_solution";
    case FitStatus::SingularCovariance: return "singular_covariance";
  }
  return "no_solution";
}

FittedNuisance fit_nuisance(const Dataset& data, const SmmSpec& spec) {
  FittedNuisance nuisance;
  nuisance.instrument = fit_instrument_model(data);
  if (spec.link == Link::Logit) {
    nuisance.outcome = fit_outcome_model(data, spec.outcome_terms);
  }
  return nuisance;
}

GEstimate fit_with_nuisance(const Dataset& data, const SmmSpec& spec,
                            const FittedNuisance& nuisance, double alpha,
                            const SolveOptions& opts) {
  const std::size_t n = data.n();
  GEstimate fit;
  fit.alpha = alpha;

  // The psi-row of the stacked system with nuisance estimates held fixed:
  // f(psi) = n^-1 sum_i D_i h_i(psi; alpha).
  std::vector<double> d(n), lp(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = d_function(data, i, nuisance.instrument);
    if (spec.link == Link::Logit) lp[i] = nuisance.outcome->linear_predictor(data, i);
  }
  const Link link = spec.link;
  auto f = [&](double psi) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double shift = data.x[i] * psi + alpha * data.z[i];
      double h = 0.0;
      switch (link) {
        case Link::Identity: h = data.y[i] - shift; break;
        case Link::Log: h = data.y[i] * std::exp(-shift); break;
        case Link::Logit: h = expit(lp[i] - shift); break;
      }
      acc += d[i] * h;
    }
    return acc / static_cast<double>(n);
  };

  const RootResult root = solve_scalar_root(f, opts.bracket_lo, opts.bracket_hi, opts.tol);
  fit.root_residual = root.residual;
  fit.n_roots = root.n_roots;
  fit.multiple_roots = root.multiple_roots;
  if (root.status == RootStatus::NoSolution || root.residual > 1e-8) {
    fit.status = FitStatus::NoSolution;
    fit.psi = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  fit.psi = root.root;

  // Full stacked theta = (beta_Y, mu_Z, psi) for the sandwich, so nuisance
  // uncertainty propagates into the variance of psi.
  if (spec.link == Link::Logit) {
    fit.theta = nuisance.outcome->beta;
  }
  fit.theta.push_back(nuisance.instrument.mu_z());
  fit.theta.push_back(fit.psi);

  const StackedSystem system = build_stacked_system(data, spec);
  const std::size_t psi_idx = system.partition.psi_index;
  try {
    const Matrix a = bread_matrix(system, data, fit.theta, alpha);
    const Matrix b = meat_matrix(system, data, fit.theta, alpha);
    SandwichCovariance cov = sandwich_variance(a, b, n);
    fit.psi_variance = cov.variance(psi_idx, psi_idx);
    fit.cov = std::move(cov);
    if (fit.psi_variance < 0.0) {
      fit.status = FitStatus::SingularCovariance;
      return fit;
    }
    fit.ci = wald_ci(fit.psi, fit.psi_variance, opts.ci_level);
    fit.status = FitStatus::Solved;
  } catch (const SingularBread&) {
    fit.status = FitStatus::SingularCovariance;
  }
  return fit;
}

GEstimate fit_g_estimator(const Dataset& data, const SmmSpec& spec, double alpha,
                          const SolveOptions& opts) {
  return fit_with_nuisance(data, spec, fit_nuisance(data, spec), alpha, opts);
}

SweepResult sweep_alpha(const Dataset& data, const SmmSpec& spec,
                        std::span<const double> grid, const SolveOptions& opts) {
  if (grid.empty()) throw ConfigError("alpha_grid: grid must be nonempty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw ConfigError("alpha_grid: grid must be strictly increasing");
    }
  }
  const FittedNuisance nuisance = fit_nuisance(data, spec);
  SweepResult result;
  result.grid.assign(grid.begin(), grid.end());
  result.entries.reserve(grid.size());
  for (double alpha : grid) {
    result.entries.push_back(fit_with_nuisance(data, spec, nuisance, alpha, opts));
  }
  for (const GEstimate& entry : result.entries) {
    if (entry.status != FitStatus::Solved) continue;
    if (!result.solvable_range) {
      result.solvable_range = {entry.alpha, entry.alpha};
    } else {
      result.solvable_range->second = entry.alpha;
    }
  }
  return result;
}

double closed_form_linear(const Dataset& data, double alpha) {
  if (!data.l.empty()) {
    throw Error("closed_form_linear: defined for no covariates (L empty)");
  }
  const double cov_xz = covariance_n(data.x, data.z);
  if (std::fabs(cov_xz) < 1e-12) {
    throw WeakInstrument("closed_form_linear: |cov(X,Z)| < 1e-12");
  }
  const double var_z = variance_n(data.z);
  const double beta_xz = cov_xz / var_z;
  const double beta_yz = covariance_n(data.y, data.z) / var_z;
  return beta_yz / beta_xz - alpha / beta_xz;
}

double asymptotic_bias_linear(double beta_yz_l, double beta_xz_l) {
  if (std::fabs(beta_xz_l) < 1e-12) {
    throw WeakInstrument("asymptotic_bias_linear: beta_XZ is zero");
  }
  return beta_yz_l / beta_xz_l;
}

RelevanceResult relevance_check(const Dataset& data) {
  const std::size_t n = data.n();
  if (n < 3) throw Error("relevance_check: needs n >= 3");
  const double zbar = mean(data.z);
  const double xbar = mean(data.x);
  double szz = 0.0, sxz = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dz = data.z[i] - zbar;
    const double dx = data.x[i] - xbar;
    szz += dz * dz;
    sxz += dz * dx;
    sxx += dx * dx;
  }
  if (szz == 0.0) throw RankDeficient("relevance_check: instrument column is constant");

  RelevanceResult result;
  result.coef = sxz / szz;
  result.df = {1, n - 2};
  const double rss = sxx - result.coef * sxz;
  if (rss <= 1e-12 * sxx) {
    result.perfect_collinearity = true;
    result.f_stat = std::numeric_limits<double>::infinity();
    result.ci = Interval{result.coef, result.coef};
    return result;
  }
  const double s2 = rss / static_cast<double>(n - 2);
  const double se = std::sqrt(s2 / szz);
  result.f_stat = (result.coef / se) * (result.coef / se);
  const double t = student_t_quantile(0.975, static_cast<double>(n - 2));
  result.ci = Interval{result.coef - t * se, result.coef + t * se};
  return result;
}

}  // namespace gsens
