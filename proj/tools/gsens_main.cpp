// gsens: G-estimation of causal exposure effects under instrumental-variable
// assumptions, with a single-parameter sensitivity analysis for invalid
// instruments. Subcommands: fit, sweep, simulate, calibrate, relevance.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gsens/runner.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void add_data_options(CLI::App* cmd, gsens::RunConfig& config, std::string& l_cols) {
  cmd->add_option("--data", config.data_path, "Input CSV path")->configurable(true);
  cmd->add_option("--y-col", config.columns.y, "Outcome column name");
  cmd->add_option("--x-col", config.columns.x, "Exposure column name");
  cmd->add_option("--z-col", config.columns.z, "Instrument column name");
  cmd->add_option("--l-cols", l_cols, "Comma-separated covariate column names");
  cmd->add_flag("--standardize-exposure", config.standardize_exposure,
                "Divide the exposure by its sample standard deviation");
}

void add_output_options(CLI::App* cmd, gsens::RunConfig& config) {
  cmd->add_option("--out", config.output_path, "Output path (stdout when omitted)");
  cmd->add_option("--format", config.output_format, "Report format: csv or json");
}

void add_grid_options(CLI::App* cmd, gsens::RunConfig& config, CLI::Option** center_opt) {
  auto* opt = cmd->add_option("--grid-center", config.grid.center, "Alpha grid center");
  cmd->add_option("--grid-half-width", config.grid.half_width, "Alpha grid half width");
  cmd->add_option("--grid-step", config.grid.step, "Alpha grid step");
  if (center_opt) *center_opt = opt;
}

void add_dgp_options(CLI::App* cmd, gsens::RunConfig& config) {
  cmd->add_option("--link", config.sim_link, "Causal model: linear or logistic");
  cmd->add_option("--psi", config.sim_psi, "True causal effect");
  cmd->add_option("--alpha-star", config.sim_alpha_star, "True violation alpha*");
  cmd->add_option("--p-z", config.p_z, "P(Z=1)");
  cmd->add_option("--p-x", config.p_x, "Target P(X=1)");
  cmd->add_option("--p-y", config.p_y, "Target P(Y=1), logistic only");
  cmd->add_option("--sigma", config.sigma, "Outcome noise SD, linear only");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"G-estimation with single-parameter sensitivity analysis for invalid instruments"};
  app.set_config("--config", "", "Read options from a TOML/INI config file (see docs/config.md)");
  app.require_subcommand(1);

  gsens::RunConfig config;
  std::string l_cols;
  CLI::Option* center_opt = nullptr;

  // `gsens <command> --config <path>`: --config falls through to the app.
  auto* fit = app.add_subcommand("fit", "G-estimate at a fixed sensitivity value");
  fit->fallthrough();
  add_data_options(fit, config, l_cols);
  fit->add_option("--link", config.link, "Structural model link: identity, log, or logit");
  fit->add_option("--alpha", config.alpha, "Sensitivity parameter value");
  add_output_options(fit, config);

  auto* sweep = app.add_subcommand("sweep", "G-estimate over an alpha grid");
  sweep->fallthrough();
  add_data_options(sweep, config, l_cols);
  sweep->add_option("--link", config.link, "Structural model link: identity, log, or logit");
  add_grid_options(sweep, config, nullptr);
  add_output_options(sweep, config);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo coverage and CI-length study");
  simulate->fallthrough();
  add_dgp_options(simulate, config);
  simulate->add_option("--n", config.sim_n, "Sample size per replication");
  simulate->add_option("--m", config.sim_m, "Number of replications");
  simulate->add_option("--seed", config.master_seed, "Master seed");
  add_grid_options(simulate, config, &center_opt);
  add_output_options(simulate, config);

  auto* calibrate = app.add_subcommand("calibrate", "Solve DGP coefficients for (psi, alpha*, marginals)");
  calibrate->fallthrough();
  add_dgp_options(calibrate, config);
  add_output_options(calibrate, config);

  auto* relevance = app.add_subcommand("relevance", "Instrument relevance F-test (OLS of X on Z)");
  relevance->fallthrough();
  add_data_options(relevance, config, l_cols);
  add_output_options(relevance, config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  config.columns.l = split_commas(l_cols);
  if (fit->parsed()) config.command = gsens::Command::Fit;
  if (sweep->parsed()) config.command = gsens::Command::Sweep;
  if (simulate->parsed()) {
    config.command = gsens::Command::Simulate;
    config.grid_center_given = center_opt != nullptr && center_opt->count() > 0;
  }
  if (calibrate->parsed()) config.command = gsens::Command::Calibrate;
  if (relevance->parsed()) config.command = gsens::Command::Relevance;

  return gsens::run(config);
}
