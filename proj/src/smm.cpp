#include "gsens/smm.hpp"

#include <cmath>

#include "gsens/errors.hpp"
#include "gsens/linalg.hpp"
#include "gsens/stats.hpp"

namespace gsens {

Link link_from_string(const std::string& s) {
  if (s == "identity" || s == "linear") return Link::Identity;
  if (s == "log") return Link::Log;
  if (s == "logit" || s == "logistic") return Link::Logit;
  throw ConfigError("link: unknown value '" + s + "' (expected identity, log, or logit)");
}

std::string to_string(Link link) {
  switch (link) {
    case Link::Identity: return "identity";
    case Link::Log: return "log";
    case Link::Logit: return "logit";
  }
  return "identity";
}

namespace {

double term_value(Term term, double x, double z) {
  switch (term) {
    case Term::Intercept: return 1.0;
    case Term::X: return x;
    case Term::Z: return z;
    case Term::XZ: return x * z;
  }
  return 0.0;
}

}  // namespace

double OutcomeModel::linear_predictor(const Dataset& data, std::size_t row) const {
  double lp = 0.0;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    lp += beta[j] * term_value(terms[j], data.x[row], data.z[row]);
  }
  return lp;
}

double OutcomeModel::predict_prob(const Dataset& data, std::size_t row) const {
  return expit(linear_predictor(data, row));
}

OutcomeModel fit_outcome_model(const Dataset& data, const std::vector<Term>& terms) {
  const std::size_t n = data.n();
  const std::size_t k = terms.size();
  if (!data.y_is_binary()) {
    throw Error("fit_outcome_model: outcome must be binary for the logistic model");
  }

  std::vector<double> beta(k, 0.0);
  std::vector<double> row_terms(k);
  const double score_tol = 1e-10;
  const int max_iter = 100;

  OutcomeModel model;
  model.terms = terms;
  bool step_stalled = false;
  for (int iter = 1; iter <= max_iter; ++iter) {
    // Score vector sum_i (y_i - p_i) t_i and information sum_i p_i(1-p_i) t_i t_i^T.
    std::vector<double> score(k, 0.0);
    Matrix info(k, k);
    double max_weight = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double lp = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        row_terms[j] = term_value(terms[j], data.x[i], data.z[i]);
        lp += beta[j] * row_terms[j];
      }
      const double p = expit(lp);
      const double resid = data.y[i] - p;
      const double w = p * (1.0 - p);
      max_weight = std::max(max_weight, w);
      for (std::size_t j = 0; j < k; ++j) {
        score[j] += resid * row_terms[j];
        for (std::size_t l = j; l < k; ++l) info(j, l) += w * row_terms[j] * row_terms[l];
      }
    }
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = 0; l < j; ++l) info(j, l) = info(l, j);

    double max_score = 0.0;
    for (double s : score) max_score = std::max(max_score, std::fabs(s));
    // The score-tolerance exit; large n can stall slightly above the target
    // through summation noise, in which case a vanishing Newton step with the
    // score already tiny is accepted. A fit where every weight collapsed has
    // its maximum at infinity (complete separation), not a stationary point.
    if (max_score <= score_tol || (step_stalled && max_score <= 1e-8)) {
      if (max_weight < 1e-8) {
        throw Separation("fit_outcome_model: all fitted probabilities saturated");
      }
      model.beta = beta;
      model.converged = true;
      model.iterations = iter - 1;
      return model;
    }

    Matrix rhs(k, 1);
    for (std::size_t j = 0; j < k; ++j) rhs(j, 0) = score[j];
    Matrix step;
    try {
      step = solve_linear(info, rhs);
    } catch (const SingularBread&) {
      throw RankDeficient("fit_outcome_model: design matrix is rank deficient");
    }
    double norm_sq = 0.0;
    step_stalled = true;
    for (std::size_t j = 0; j < k; ++j) {
      beta[j] += step(j, 0);
      norm_sq += beta[j] * beta[j];
      if (std::fabs(step(j, 0)) > 1e-12 * (1.0 + std::fabs(beta[j]))) step_stalled = false;
    }
    if (std::sqrt(norm_sq) > 50.0) {
      throw Separation("fit_outcome_model: coefficients diverged (||beta|| > 50)");
    }
  }
  throw Separation("fit_outcome_model: no convergence in 100 iterations");
}

double InstrumentModel::predict(const Dataset& data, std::size_t row) const {
  if (intercept_only) return coef[0];
  double lp = coef[0];
  for (std::size_t j = 0; j < data.l.size(); ++j) lp += coef[j + 1] * data.l[j][row];
  return logistic ? expit(lp) : lp;
}

InstrumentModel fit_instrument_model(const Dataset& data, const InstrumentFormula& formula) {
  InstrumentModel model;
  if (!formula.include_l || data.l.empty()) {
    model.intercept_only = true;
    model.coef = {mean(data.z)};
    return model;
  }
  if (variance_n(data.z) == 0.0) {
    throw RankDeficient("fit_instrument_model: z column is constant");
  }
  model.intercept_only = false;
  const std::size_t n = data.n();
  const std::size_t k = data.l.size() + 1;

  if (data.z_is_binary()) {
    // Logistic fit of Z on (1, L) by the same Newton scheme as the outcome model.
    model.logistic = true;
    std::vector<double> beta(k, 0.0);
    for (int iter = 0; iter < 100; ++iter) {
      std::vector<double> score(k, 0.0);
      Matrix info(k, k);
      for (std::size_t i = 0; i < n; ++i) {
        double lp = beta[0];
        for (std::size_t j = 1; j < k; ++j) lp += beta[j] * data.l[j - 1][i];
        const double p = expit(lp);
        const double resid = data.z[i] - p;
        const double w = p * (1.0 - p);
        for (std::size_t j = 0; j < k; ++j) {
          const double tj = j == 0 ? 1.0 : data.l[j - 1][i];
          score[j] += resid * tj;
          for (std::size_t l = j; l < k; ++l) {
            const double tl = l == 0 ? 1.0 : data.l[l - 1][i];
            info(j, l) += w * tj * tl;
          }
        }
      }
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t l = 0; l < j; ++l) info(j, l) = info(l, j);
      double max_score = 0.0;
      for (double s : score) max_score = std::max(max_score, std::fabs(s));
      if (max_score <= 1e-10) break;
      Matrix rhs(k, 1);
      for (std::size_t j = 0; j < k; ++j) rhs(j, 0) = score[j];
      Matrix step;
      try {
        step = solve_linear(info, rhs);
      } catch (const SingularBread&) {
        throw RankDeficient("fit_instrument_model: design matrix is rank deficient");
      }
      double norm_sq = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        beta[j] += step(j, 0);
        norm_sq += beta[j] * beta[j];
      }
      if (std::sqrt(norm_sq) > 50.0) {
        throw Separation("fit_instrument_model: coefficients diverged");
      }
    }
    model.coef = beta;
    return model;
  }

  // OLS of Z on (1, L).
  Matrix gram(k, k);
  Matrix rhs(k, 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double tj = j == 0 ? 1.0 : data.l[j - 1][i];
      rhs(j, 0) += tj * data.z[i];
      for (std::size_t l = j; l < k; ++l) {
        const double tl = l == 0 ? 1.0 : data.l[l - 1][i];
        gram(j, l) += tj * tl;
      }
    }
  }
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t l = 0; l < j; ++l) gram(j, l) = gram(l, j);
  Matrix sol;
  try {
    sol = solve_linear(gram, rhs);
  } catch (const SingularBread&) {
    throw RankDeficient("fit_instrument_model: design matrix is rank deficient");
  }
  model.coef.resize(k);
  for (std::size_t j = 0; j < k; ++j) model.coef[j] = sol(j, 0);
  return model;
}

double h_psi_alpha(const Dataset& data, std::size_t row, double psi, double alpha,
                   const SmmSpec& spec, const OutcomeModel* outcome) {
  const double b = violation(alpha, data.z[row]);
  const double shift = data.x[row] * psi + b;  // m(L) = 1
  switch (spec.link) {
    case Link::Identity:
      return data.y[row] - shift;
    case Link::Log:
      return data.y[row] * std::exp(-shift);
    case Link::Logit: {
      if (outcome == nullptr) {
        throw MissingOutcomeModel("h_psi_alpha: logit link requires a fitted outcome model");
      }
      return expit(outcome->linear_predictor(data, row) - shift);
    }
  }
  return 0.0;
}

double d_function(const Dataset& data, std::size_t row, const InstrumentModel& instrument) {
  return data.z[row] - instrument.predict(data, row);
}

StackedSystem build_stacked_system(const Dataset& data, const SmmSpec& spec) {
  if (spec.link == Link::Logit && !data.y_is_binary()) {
    throw Error("build_stacked_system: logit link requires a binary outcome");
  }

  StackedSystem system;
  if (spec.link == Link::Logit) {
    const std::vector<Term> terms = spec.outcome_terms;
    const std::size_t k = terms.size();
    system.dim_p = k + 2;
    system.partition = ParamPartition{0, k, k, k + 1};
    system.q_fn = [terms, k](const Dataset& d, std::size_t i, std::span<const double> theta,
                             double alpha, std::span<double> out) {
      double lp = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        lp += theta[j] * term_value(terms[j], d.x[i], d.z[i]);
      }
      const double resid = d.y[i] - expit(lp);
      for (std::size_t j = 0; j < k; ++j) {
        out[j] = resid * term_value(terms[j], d.x[i], d.z[i]);
      }
      const double dz = d.z[i] - theta[k];
      out[k] = dz;
      const double h = expit(lp - d.x[i] * theta[k + 1] - alpha * d.z[i]);
      out[k + 1] = dz * h;
    };
    return system;
  }

  const bool log_link = spec.link == Link::Log;
  system.dim_p = 2;
  system.partition = ParamPartition{0, 0, 0, 1};
  system.q_fn = [log_link](const Dataset& d, std::size_t i, std::span<const double> theta,
                           double alpha, std::span<double> out) {
    const double dz = d.z[i] - theta[0];
    out[0] = dz;
    const double shift = d.x[i] * theta[1] + alpha * d.z[i];
    const double h = log_link ? d.y[i] * std::exp(-shift) : d.y[i] - shift;
    out[1] = dz * h;
  };
  return system;
}

}  // namespace gsens
