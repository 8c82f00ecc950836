#include "gsens/runner.hpp"

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

#include "gsens/errors.hpp"
#include "gsens/stats.hpp"

namespace gsens {

Command command_from_string(const std::string& s) {
  if (s == "fit") return Command::Fit;
  if (s == "sweep") return Command::Sweep;
  if (s == "simulate") return Command::Simulate;
  if (s == "calibrate") return Command::Calibrate;
  if (s == "relevance") return Command::Relevance;
  throw ConfigError("command: unknown value '" + s + "'");
}

std::vector<double> make_grid(const GridSpec& spec) {
  if (!(spec.step > 0.0)) throw ConfigError("grid.step: must be positive");
  if (!(spec.half_width >= 0.0)) throw ConfigError("grid.half_width: must be nonnegative");
  const long k_half = std::lround(spec.half_width / spec.step);
  std::vector<double> grid;
  grid.reserve(2 * k_half + 1);
  for (long k = -k_half; k <= k_half; ++k) {
    grid.push_back(spec.center + static_cast<double>(k) * spec.step);
  }
  return grid;
}

namespace {

bool needs_data(Command c) {
  return c == Command::Fit || c == Command::Sweep || c == Command::Relevance;
}

bool is_simulation_family(Command c) {
  return c == Command::Simulate || c == Command::Calibrate;
}

void require_probability(double v, const char* field) {
  if (!(v > 0.0 && v < 1.0)) {
    throw ConfigError(std::string(field) + ": must lie strictly in (0,1)");
  }
}

}  // namespace

void validate(const RunConfig& config) {
  output_format_from_string(config.output_format);

  if (needs_data(config.command)) {
    if (config.data_path.empty()) {
      throw ConfigError("data: input CSV path is required (--data)");
    }
    if (config.columns.y.empty()) throw ConfigError("y_col: column name must be nonempty");
    if (config.columns.x.empty()) throw ConfigError("x_col: column name must be nonempty");
    if (config.columns.z.empty()) throw ConfigError("z_col: column name must be nonempty");
  }
  if (config.command == Command::Fit || config.command == Command::Sweep) {
    link_from_string(config.link);
  }
  if (config.command == Command::Sweep || config.command == Command::Simulate) {
    if (!(config.grid.step > 0.0)) throw ConfigError("grid.step: must be positive");
    if (!(config.grid.half_width >= 0.0)) {
      throw ConfigError("grid.half_width: must be nonnegative");
    }
  }
  if (is_simulation_family(config.command)) {
    if (config.sim_link != "linear" && config.sim_link != "logistic") {
      throw ConfigError("link: unknown value '" + config.sim_link +
                        "' (simulation supports linear or logistic)");
    }
    require_probability(config.p_z, "p_z");
    require_probability(config.p_x, "p_x");
    if (config.sim_link == "logistic") require_probability(config.p_y, "p_y");
    if (config.sim_link == "linear" && !(config.sigma > 0.0)) {
      throw ConfigError("sigma: must be positive");
    }
  }
  if (config.command == Command::Simulate) {
    if (config.sim_n < 1) throw ConfigError("n: sample size must be >= 1");
    if (config.sim_m < 1) throw ConfigError("m: replication count must be >= 1");
  }
}

nlohmann::json config_echo(const RunConfig& config) {
  nlohmann::json j;
  switch (config.command) {
    case Command::Fit: j["command"] = "fit"; break;
    case Command::Sweep: j["command"] = "sweep"; break;
    case Command::Simulate: j["command"] = "simulate"; break;
    case Command::Calibrate: j["command"] = "calibrate"; break;
    case Command::Relevance: j["command"] = "relevance"; break;
  }
  if (needs_data(config.command)) {
    j["data"] = config.data_path;
    j["columns"] = {{"y", config.columns.y}, {"x", config.columns.x}, {"z", config.columns.z}};
    if (!config.columns.l.empty()) j["columns"]["l"] = config.columns.l;
    j["standardize_exposure"] = config.standardize_exposure;
  }
  if (config.command == Command::Fit) {
    j["link"] = config.link;
    j["alpha"] = config.alpha;
  }
  if (config.command == Command::Sweep) {
    j["link"] = config.link;
    j["grid"] = {{"center", config.grid.center},
                 {"half_width", config.grid.half_width},
                 {"step", config.grid.step}};
  }
  if (is_simulation_family(config.command)) {
    j["link"] = config.sim_link;
    j["psi"] = config.sim_psi;
    j["alpha_star"] = config.sim_alpha_star;
    j["p_z"] = config.p_z;
    j["p_x"] = config.p_x;
    if (config.sim_link == "logistic") j["p_y"] = config.p_y;
    if (config.sim_link == "linear") j["sigma"] = config.sigma;
  }
  if (config.command == Command::Simulate) {
    j["n"] = config.sim_n;
    j["m"] = config.sim_m;
    j["master_seed"] = config.master_seed;
    j["grid"] = {{"center", config.grid.center},
                 {"half_width", config.grid.half_width},
                 {"step", config.grid.step}};
  }
  j["output_format"] = config.output_format;
  return j;
}

unsigned effective_thread_count() {
  if (const char* env = std::getenv("GSENS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

namespace {

Dataset load_and_prepare(const RunConfig& config) {
  CsvLoadReport loaded = load_csv(config.data_path, config.columns);
  if (loaded.n_dropped > 0) {
    std::cerr << "warning: dropped " << loaded.n_dropped
              << " rows with missing values; " << loaded.n_retained << " rows retained\n";
  }
  if (config.standardize_exposure) {
    const double sd = sd_sample(loaded.data.x);
    if (!(sd > 0.0)) throw Error("standardize_exposure: exposure has zero variance");
    for (double& v : loaded.data.x) v /= sd;
  }
  return std::move(loaded.data);
}

std::string render_sweep(const RunConfig& config, const SweepResult& sweep, Link link) {
  std::ostringstream out;
  if (output_format_from_string(config.output_format) == OutputFormat::Csv) {
    write_sweep_csv(sweep, link, out);
  } else {
    out << sweep_to_json(sweep, link, config_echo(config)).dump(2) << '\n';
  }
  return out.str();
}

int run_fit_or_sweep(const RunConfig& config) {
  const Dataset data = load_and_prepare(config);
  SmmSpec spec;
  spec.link = link_from_string(config.link);
  std::vector<double> grid;
  if (config.command == Command::Fit) {
    grid = {config.alpha};
  } else {
    grid = make_grid(config.grid);
  }
  const SweepResult sweep = sweep_alpha(data, spec, grid);
  write_text_report(config.output_path, render_sweep(config, sweep, spec.link));
  return 0;
}

int run_relevance(const RunConfig& config) {
  const Dataset data = load_and_prepare(config);
  const RelevanceResult result = relevance_check(data);
  std::ostringstream out;
  if (output_format_from_string(config.output_format) == OutputFormat::Csv) {
    write_relevance_csv(result, out);
  } else {
    out << relevance_to_json(result, config_echo(config)).dump(2) << '\n';
  }
  write_text_report(config.output_path, out.str());
  return 0;
}

std::string fmt_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int run_calibrate(const RunConfig& config) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["config"] = config_echo(config);
  std::ostringstream csv;
  if (config.sim_link == "linear") {
    const LinearDgpConfig c =
        calibrate_linear(config.sim_psi, config.sim_alpha_star, config.p_z, config.p_x,
                         config.sigma);
    csv << "link,psi,alpha_star,p_z,p_x,gamma_0,gamma_z,beta_0,beta_x,beta_z,beta_xz,sigma\n"
        << "linear," << fmt_full(c.psi) << ',' << fmt_full(c.alpha_star) << ','
        << fmt_full(c.p_z) << ',' << fmt_full(config.p_x) << ',' << fmt_full(c.gamma_0) << ','
        << fmt_full(c.gamma_z) << ',' << fmt_full(c.beta_0) << ',' << fmt_full(c.beta_x)
        << ',' << fmt_full(c.beta_z) << ',' << fmt_full(c.beta_xz) << ','
        << fmt_full(c.sigma) << '\n';
    j["calibrated"] = {{"link", "linear"},     {"psi", c.psi},
                       {"alpha_star", c.alpha_star}, {"p_z", c.p_z},
                       {"p_x", config.p_x},    {"gamma_0", c.gamma_0},
                       {"gamma_z", c.gamma_z}, {"beta_0", c.beta_0},
                       {"beta_x", c.beta_x},   {"beta_z", c.beta_z},
                       {"beta_xz", c.beta_xz}, {"sigma", c.sigma}};
  } else {
    const LogisticDgpConfig c = calibrate_logistic(config.sim_psi, config.sim_alpha_star,
                                                   config.p_z, config.p_x, config.p_y);
    csv << "link,psi,alpha_star,p_z,p_x,p_y,gamma_0,gamma_z,beta_0,beta_x,beta_z,beta_xz\n"
        << "logistic," << fmt_full(c.psi) << ',' << fmt_full(c.alpha_star) << ','
        << fmt_full(c.p_z) << ',' << fmt_full(c.p_x) << ',' << fmt_full(c.p_y) << ','
        << fmt_full(c.gamma_0) << ',' << fmt_full(c.gamma_z) << ',' << fmt_full(c.beta_0)
        << ',' << fmt_full(c.beta_x) << ',' << fmt_full(c.beta_z) << ','
        << fmt_full(c.beta_xz) << '\n';
    j["calibrated"] = {{"link", "logistic"},   {"psi", c.psi},
                       {"alpha_star", c.alpha_star}, {"p_z", c.p_z},
                       {"p_x", c.p_x},         {"p_y", c.p_y},
                       {"gamma_0", c.gamma_0}, {"gamma_z", c.gamma_z},
                       {"beta_0", c.beta_0},   {"beta_x", c.beta_x},
                       {"beta_z", c.beta_z},   {"beta_xz", c.beta_xz}};
  }
  if (output_format_from_string(config.output_format) == OutputFormat::Csv) {
    write_text_report(config.output_path, csv.str());
  } else {
    write_text_report(config.output_path, j.dump(2) + "\n");
  }
  return 0;
}

int run_simulate(const RunConfig& config) {
  GridSpec grid_spec = config.grid;
  // The default grid centers on the true violation unless overridden.
  if (!config.grid_center_given) grid_spec.center = config.sim_alpha_star;
  const std::vector<double> grid = make_grid(grid_spec);
  const unsigned threads = effective_thread_count();

  MonteCarloReport report;
  SmmSpec spec;
  if (config.sim_link == "linear") {
    spec.link = Link::Identity;
    const LinearDgpConfig c = calibrate_linear(config.sim_psi, config.sim_alpha_star,
                                               config.p_z, config.p_x, config.sigma);
    report = run_monte_carlo(c, spec, config.sim_n, config.sim_m, grid,
                             config.master_seed, threads);
  } else {
    spec.link = Link::Logit;
    const LogisticDgpConfig c = calibrate_logistic(config.sim_psi, config.sim_alpha_star,
                                                   config.p_z, config.p_x, config.p_y);
    report = run_monte_carlo(c, spec, config.sim_n, config.sim_m, grid,
                             config.master_seed, threads);
  }

  std::ostringstream out;
  if (output_format_from_string(config.output_format) == OutputFormat::Csv) {
    write_mc_csv(report, out);
  } else {
    out << mc_to_json(report, config_echo(config)).dump(2) << '\n';
  }
  write_text_report(config.output_path, out.str());
  return 0;
}

}  // namespace

int run(const RunConfig& config) {
  try {
    validate(config);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  try {
    switch (config.command) {
      case Command::Fit:
      case Command::Sweep:
        return run_fit_or_sweep(config);
      case Command::Relevance:
        return run_relevance(config);
      case Command::Calibrate:
        return run_calibrate(config);
      case Command::Simulate:
        return run_simulate(config);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace gsens
