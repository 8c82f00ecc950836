#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gsens/dataset.hpp"
#include "gsens/mestim.hpp"

namespace gsens {

enum class Link { Identity, Log, Logit };

Link link_from_string(const std::string& s);  // throws ConfigError on unknown names
std::string to_string(Link link);

// Design terms of the outcome mean model E[Y|X,Z;beta_Y].
enum class Term { Intercept, X, Z, XZ };

// Structural-mean-model description. m(L) is fixed to the constant 1 (scalar
// causal parameter) and the violation is fixed to b(L,Z;alpha) = alpha*Z; the
// outcome model defaults to intercept + X + Z + X*Z and the instrument model
// to an intercept-only mean.
struct SmmSpec {
  Link link = Link::Identity;
  std::vector<Term> outcome_terms = {Term::Intercept, Term::X, Term::Z, Term::XZ};
  bool instrument_intercept_only = true;
};

// Exclusion/exogeneity violation on the link scale: b(L, Z; alpha) = alpha * Z.
inline double violation(double alpha, double z) { return alpha * z; }

// ---- Nuisance models ---------------------------------------------------------

struct OutcomeModel {
  std::vector<double> beta;  // aligned with terms
  std::vector<Term> terms;
  bool converged = false;
  int iterations = 0;

  double linear_predictor(const Dataset& data, std::size_t row) const;
  double predict_prob(const Dataset& data, std::size_t row) const;
};

struct InstrumentModel {
  bool intercept_only = true;
  bool logistic = false;         // with covariates: logistic for binary Z, linear otherwise
  std::vector<double> coef;      // intercept-only: {mu_z}

  double mu_z() const { return coef[0]; }
  double predict(const Dataset& data, std::size_t row) const;  // E[Z | L_row]
};

// Newton-Raphson logistic MLE of y on the given terms; converged when the
// max-abs score sum drops below 1e-10 (at most 100 iterations). Throws
// Separation when the step diverges (||beta|| > 50) or convergence fails,
// RankDeficient when the weighted Gram matrix is singular.
OutcomeModel fit_outcome_model(const Dataset& data, const std::vector<Term>& terms);

struct InstrumentFormula {
  bool include_l = false;  // false: intercept only (mu_z = sample mean of z)
};

InstrumentModel fit_instrument_model(const Dataset& data,
                                     const InstrumentFormula& formula = {});

// ---- Residual transform and D-function ---------------------------------------

// h(psi; alpha) of the selected link at one observation. The logit branch needs
// the fitted outcome model (MissingOutcomeModel otherwise).
double h_psi_alpha(const Dataset& data, std::size_t row, double psi, double alpha,
                   const SmmSpec& spec, const OutcomeModel* outcome);

// D(L, Z) = Z - E[Z|L], the mean-zero-given-L weight of the estimating function.
double d_function(const Dataset& data, std::size_t row, const InstrumentModel& instrument);

// ---- Stacked estimating equations ---------------------------------------------

// Per-row Q of the full stacked system: outcome-model scores (logit link only),
// the instrument row Z - mu_Z, and the G-estimation row D * h(psi; alpha).
// dim_p = 2 for identity/log, outcome_terms.size() + 2 for logit.
StackedSystem build_stacked_system(const Dataset& data, const SmmSpec& spec);

}  // namespace gsens
