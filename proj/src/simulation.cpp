#include "gsens/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include "gsens/errors.hpp"
#include "gsens/mestim.hpp"
#include "gsens/rng.hpp"
#include "gsens/sensitivity.hpp"
#include "gsens/stats.hpp"

namespace gsens {

double implied_p_x(double p_z, double gamma_0, double gamma_z) {
  return (1.0 - p_z) * expit(gamma_0) + p_z * expit(gamma_0 + gamma_z);
}

double implied_beta_xz(double p_z, double gamma_0, double gamma_z) {
  // cov(X,Z)/var(Z) = (E[X|Z=1] - p_x) / (1 - p_z) for Bernoulli Z.
  const double p_x = implied_p_x(p_z, gamma_0, gamma_z);
  return (expit(gamma_0 + gamma_z) - p_x) / (1.0 - p_z);
}

double linear_alpha_star(const LinearDgpConfig& c) {
  const double e0 = expit(c.gamma_0);
  const double e1 = expit(c.gamma_0 + c.gamma_z);
  return (c.beta_0 + c.beta_z) * (1.0 - e1) +
         (c.beta_0 + c.beta_x + c.beta_z + c.beta_xz - c.psi) * e1 -
         c.beta_0 * (1.0 - e0) - (c.beta_0 + c.beta_x - c.psi) * e0;
}

namespace {

// P(Y_0 = 1 | Z = z) under the logistic DGP: marginalize the exposure with
// weights P(X=1|Z=z) and shift the exposed arm by -psi on the logit scale.
double logistic_p_y0_given_z(const LogisticDgpConfig& c, double z) {
  const double ex = expit(c.gamma_0 + c.gamma_z * z);
  return expit(c.beta_0 + c.beta_z * z) * (1.0 - ex) +
         expit(c.beta_0 + c.beta_x + c.beta_z * z + c.beta_xz * z - c.psi) * ex;
}

double solve_gamma_z(double p_z, double p_x, double gamma_0) {
  const double target = (p_x - (1.0 - p_z) * expit(gamma_0)) / p_z;
  if (!(target > 0.0 && target < 1.0)) {
    throw Unreachable("calibration: P(X=1|Z=1) = " + std::to_string(target) +
                      " is outside (0,1) for the requested p_x");
  }
  return logit(target) - gamma_0;
}

}  // namespace

double logistic_alpha_star(const LogisticDgpConfig& c) {
  return logit(logistic_p_y0_given_z(c, 1.0)) - logit(logistic_p_y0_given_z(c, 0.0));
}

double logistic_implied_p_y(const LogisticDgpConfig& c) {
  double p_y = 0.0;
  for (double z : {0.0, 1.0}) {
    const double pz = z == 1.0 ? c.p_z : 1.0 - c.p_z;
    const double ex = expit(c.gamma_0 + c.gamma_z * z);
    p_y += pz * ((1.0 - ex) * expit(c.beta_0 + c.beta_z * z) +
                 ex * expit(c.beta_0 + c.beta_x + c.beta_z * z + c.beta_xz * z));
  }
  return p_y;
}

LinearDgpConfig calibrate_linear(double psi, double alpha_star, double p_z,
                                 double p_x, double sigma) {
  if (!(p_z > 0.0 && p_z < 1.0) || !(p_x > 0.0 && p_x < 1.0)) {
    throw Unreachable("calibrate_linear: marginals must lie in (0,1)");
  }
  if (!(sigma > 0.0)) throw Unreachable("calibrate_linear: sigma must be positive");

  LinearDgpConfig c;
  c.p_z = p_z;
  c.sigma = sigma;
  c.psi = psi;
  c.alpha_star = alpha_star;
  c.gamma_z = solve_gamma_z(p_z, p_x, c.gamma_0);

  // The violation identity is affine in beta_xz with coefficient e1.
  const double e1 = expit(c.gamma_0 + c.gamma_z);
  c.beta_xz = 0.0;
  const double base = linear_alpha_star(c);
  c.beta_xz = (alpha_star - base) / e1;
  return c;
}

LogisticDgpConfig calibrate_logistic(double psi, double alpha_star, double p_z,
                                     double p_x, double p_y) {
  if (!(p_z > 0.0 && p_z < 1.0) || !(p_x > 0.0 && p_x < 1.0) ||
      !(p_y > 0.0 && p_y < 1.0)) {
    throw Unreachable("calibrate_logistic: marginals must lie in (0,1)");
  }

  LogisticDgpConfig c;
  c.p_z = p_z;
  c.p_x = p_x;
  c.p_y = p_y;
  c.psi = psi;
  c.alpha_star = alpha_star;
  c.gamma_z = solve_gamma_z(p_z, p_x, c.gamma_0);

  // Nested solve: the p_y marginal is strictly increasing in beta_0, so beta_0
  // is pinned by bisection at any beta_xz; the violation identity then becomes
  // a scalar equation in beta_xz handled by the bracketed root finder.
  auto beta0_for = [&](double bxz) {
    LogisticDgpConfig trial = c;
    trial.beta_xz = bxz;
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 120; ++i) {
      trial.beta_0 = 0.5 * (lo + hi);
      (logistic_implied_p_y(trial) < p_y ? lo : hi) = trial.beta_0;
    }
    return 0.5 * (lo + hi);
  };
  auto violation_gap = [&](double bxz) {
    LogisticDgpConfig trial = c;
    trial.beta_xz = bxz;
    trial.beta_0 = beta0_for(bxz);
    return logistic_alpha_star(trial) - alpha_star;
  };

  const RootResult root = solve_scalar_root(violation_gap, -12.0, 12.0, 1e-12);
  if (root.status != RootStatus::Solved) {
    // The attainable alpha_star range is bounded once beta_x, beta_z are fixed;
    // targets outside it have no solution for any beta_xz.
    throw Unreachable("calibrate_logistic: requested alpha_star is not attainable "
                      "for these marginals with beta_x = beta_z = 1");
  }
  if (root.residual > 1e-10) {
    throw NoConvergence("calibrate_logistic: violation identity residual " +
                        std::to_string(root.residual) + " above tolerance");
  }
  c.beta_xz = root.root;
  c.beta_0 = beta0_for(c.beta_xz);
  return c;
}

Dataset generate_linear(const LinearDgpConfig& c, std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Dataset data;
  data.y.resize(n);
  data.x.resize(n);
  data.z.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = rng.next_bernoulli(c.p_z) ? 1.0 : 0.0;
    const double x = rng.next_bernoulli(expit(c.gamma_0 + c.gamma_z * z)) ? 1.0 : 0.0;
    const double mu = c.beta_0 + c.beta_x * x + c.beta_z * z + c.beta_xz * x * z;
    data.z[i] = z;
    data.x[i] = x;
    data.y[i] = mu + c.sigma * rng.next_normal();
  }
  return data;
}

Dataset generate_logistic(const LogisticDgpConfig& c, std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Dataset data;
  data.y.resize(n);
  data.x.resize(n);
  data.z.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = rng.next_bernoulli(c.p_z) ? 1.0 : 0.0;
    const double x = rng.next_bernoulli(expit(c.gamma_0 + c.gamma_z * z)) ? 1.0 : 0.0;
    const double py = expit(c.beta_0 + c.beta_x * x + c.beta_z * z + c.beta_xz * x * z);
    data.z[i] = z;
    data.x[i] = x;
    data.y[i] = rng.next_bernoulli(py) ? 1.0 : 0.0;
  }
  return data;
}

namespace {

struct RepOutcome {
  std::vector<FitStatus> status;
  std::vector<double> psi, ci_lo, ci_hi;
  bool fit_failed = false;  // nuisance model threw for this replication
};

template <typename Generate>
MonteCarloReport run_mc_impl(const Generate& generate, double true_psi,
                             const SmmSpec& spec, std::size_t n, std::size_t m,
                             std::span<const double> grid, std::uint64_t master_seed,
                             unsigned threads) {
  if (m < 1) throw ConfigError("m: replication count must be >= 1");
  if (grid.empty()) throw ConfigError("alpha_grid: grid must be nonempty");
  if (spec.link == Link::Log) {
    throw UnsupportedCombination("run_monte_carlo: no calibrated DGP for the log link");
  }

  const std::size_t k = grid.size();
  std::vector<RepOutcome> outcomes(m);

  auto worker = [&](std::size_t start, std::size_t stride) {
    for (std::size_t r = start; r < m; r += stride) {
      RepOutcome& rep = outcomes[r];
      rep.status.assign(k, FitStatus::NoSolution);
      rep.psi.assign(k, 0.0);
      rep.ci_lo.assign(k, 0.0);
      rep.ci_hi.assign(k, 0.0);
      const Dataset data = generate(n, derive_seed(master_seed, r));
      try {
        const SweepResult sweep = sweep_alpha(data, spec, grid);
        for (std::size_t j = 0; j < k; ++j) {
          const GEstimate& e = sweep.entries[j];
          rep.status[j] = e.status;
          rep.psi[j] = e.psi;
          rep.ci_lo[j] = e.ci.lo;
          rep.ci_hi[j] = e.ci.hi;
        }
      } catch (const Error&) {
        rep.fit_failed = true;
      }
    }
  };

  const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(m)));
  if (t == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (unsigned i = 0; i < t; ++i) pool.emplace_back(worker, i, t);
    for (auto& th : pool) th.join();
  }

  // Aggregation in replication order, independent of thread schedule.
  MonteCarloReport report;
  report.grid.assign(grid.begin(), grid.end());
  report.m = m;
  report.n = n;
  report.master_seed = master_seed;
  report.true_psi = true_psi;
  report.rows.resize(k);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t j = 0; j < k; ++j) {
    AlphaSummary& row = report.rows[j];
    row.alpha = grid[j];
    std::vector<double> solved_psi;
    double len_sum = 0.0;
    std::size_t covered = 0;
    for (std::size_t r = 0; r < m; ++r) {
      const RepOutcome& rep = outcomes[r];
      if (rep.fit_failed) {
        ++row.n_nuisance_failed;
        continue;
      }
      switch (rep.status[j]) {
        case FitStatus::Solved:
          ++row.n_solved;
          solved_psi.push_back(rep.psi[j]);
          len_sum += rep.ci_hi[j] - rep.ci_lo[j];
          if (rep.ci_lo[j] <= true_psi && true_psi <= rep.ci_hi[j]) ++covered;
          break;
        case FitStatus::NoSolution:
          ++row.n_no_solution;
          break;
        case FitStatus::SingularCovariance:
          ++row.n_singular;
          break;
      }
    }
    row.coverage = static_cast<double>(covered) / static_cast<double>(m);
    if (row.n_solved > 0) {
      row.mean_ci_length = len_sum / static_cast<double>(row.n_solved);
      row.mean_est = mean(solved_psi);
      row.q25 = quantile_type7(solved_psi, 0.25);
      row.q50 = quantile_type7(solved_psi, 0.50);
      row.q75 = quantile_type7(solved_psi, 0.75);
    } else {
      row.mean_ci_length = nan;
      row.mean_est = nan;
      row.q25 = nan;
      row.q50 = nan;
      row.q75 = nan;
    }
  }
  return report;
}

}  // namespace

MonteCarloReport run_monte_carlo(const LinearDgpConfig& config, const SmmSpec& spec,
                                 std::size_t n, std::size_t m,
                                 std::span<const double> grid,
                                 std::uint64_t master_seed, unsigned threads) {
  if (spec.link != Link::Identity) {
    throw UnsupportedCombination("run_monte_carlo: linear DGP requires the identity link");
  }
  auto generate = [&config](std::size_t rows, std::uint64_t seed) {
    return generate_linear(config, rows, seed);
  };
  return run_mc_impl(generate, config.psi, spec, n, m, grid, master_seed, threads);
}

MonteCarloReport run_monte_carlo(const LogisticDgpConfig& config, const SmmSpec& spec,
                                 std::size_t n, std::size_t m,
                                 std::span<const double> grid,
                                 std::uint64_t master_seed, unsigned threads) {
  if (spec.link != Link::Logit) {
    throw UnsupportedCombination("run_monte_carlo: logistic DGP requires the logit link");
  }
  auto generate = [&config](std::size_t rows, std::uint64_t seed) {
    return generate_logistic(config, rows, seed);
  };
  return run_mc_impl(generate, config.psi, spec, n, m, grid, master_seed, threads);
}

}  // namespace gsens
