#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gsens/dataset.hpp"
#include "gsens/mestim.hpp"
#include "gsens/smm.hpp"

namespace gsens {

enum class FitStatus { Solved, NoSolution, SingularCovariance };

std::string to_string(FitStatus status);

struct SolveOptions {
  double bracket_lo = -10.0;
  double bracket_hi = 10.0;
  double tol = 1e-10;
  double ci_level = 0.95;
};

// One G-estimation fit at a fixed sensitivity value alpha.
struct GEstimate {
  double alpha = 0.0;
  std::vector<double> theta;  // (beta_Y, mu_Z, psi) on the stacked layout
  double psi = 0.0;
  std::optional<SandwichCovariance> cov;
  double psi_variance = 0.0;
  Interval ci{0.0, 0.0};
  FitStatus status = FitStatus::NoSolution;
  double root_residual = 0.0;
  int n_roots = 0;
  bool multiple_roots = false;
};

// Nuisance fits shared across an alpha sweep: the score and instrument rows of
// the stacked system do not involve (psi, alpha), so they are fit once.
struct FittedNuisance {
  InstrumentModel instrument;
  std::optional<OutcomeModel> outcome;  // logit link only
};

FittedNuisance fit_nuisance(const Dataset& data, const SmmSpec& spec);

GEstimate fit_with_nuisance(const Dataset& data, const SmmSpec& spec,
                            const FittedNuisance& nuisance, double alpha,
                            const SolveOptions& opts = {});

// Fits nuisance models, solves the G-estimation row for psi at fixed alpha,
// and evaluates the sandwich variance on the full stacked system. NoSolution
// and SingularCovariance are reported through `status`, not thrown.
GEstimate fit_g_estimator(const Dataset& data, const SmmSpec& spec, double alpha,
                          const SolveOptions& opts = {});

struct SweepResult {
  std::vector<double> grid;
  std::vector<GEstimate> entries;
  // Smallest and largest alpha with status Solved, when any point solved.
  std::optional<std::pair<double, double>> solvable_range;
};

// One fit per grid point (grid must be nonempty and strictly increasing).
// Every point is solved from the same canonical bracket scan, so results are
// independent of evaluation order.
SweepResult sweep_alpha(const Dataset& data, const SmmSpec& spec,
                        std::span<const double> grid, const SolveOptions& opts = {});

// psi(alpha) = beta_YZ/beta_XZ - alpha/beta_XZ with sample covariance ratios;
// identity link, no covariates. Throws WeakInstrument when |cov(X,Z)| < 1e-12.
double closed_form_linear(const Dataset& data, double alpha);

// Additivity of the direct-effect and confounding violations on the link scale.
inline double compose_alpha(double delta1, double delta2) { return delta1 + delta2; }

// Asymptotic bias psi_G - psi of the uncorrected G-estimator under violation.
double asymptotic_bias_linear(double beta_yz_l, double beta_xz_l);

struct RelevanceResult {
  double f_stat = 0.0;
  double coef = 0.0;
  Interval ci{0.0, 0.0};
  std::pair<std::size_t, std::size_t> df{0, 0};
  bool perfect_collinearity = false;
};

// OLS of X on (intercept, Z): F statistic for the Z coefficient, its point
// estimate and 95% CI, degrees of freedom (1, n-2).
RelevanceResult relevance_check(const Dataset& data);

}  // namespace gsens
