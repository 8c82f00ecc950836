#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsens/io.hpp"

namespace gsens {

inline constexpr const char* kVersion = "0.1.0";

enum class Command { Fit, Sweep, Simulate, Calibrate, Relevance };

Command command_from_string(const std::string& s);

// Alpha grid as center +- half_width in `step` increments (21 points with the
// defaults).
struct GridSpec {
  double center = 0.0;
  double half_width = 0.2;
  double step = 0.02;
};

std::vector<double> make_grid(const GridSpec& spec);

struct RunConfig {
  Command command = Command::Fit;

  // Data-backed commands (fit, sweep, relevance).
  std::string data_path;
  ColumnMap columns;
  std::string link = "identity";
  bool standardize_exposure = false;
  double alpha = 0.0;  // fit
  GridSpec grid;       // sweep

  bool grid_center_given = false;  // simulate centers the grid on alpha_star otherwise

  // simulate / calibrate.
  std::string sim_link = "linear";
  double sim_psi = 0.0;
  double sim_alpha_star = 0.0;
  double p_z = 0.5;
  double p_x = 0.6;
  double p_y = 0.3;
  double sigma = 1.0;
  std::uint64_t sim_n = 1000;
  std::uint64_t sim_m = 1000;
  std::uint64_t master_seed = 1;

  // Output.
  std::string output_path;           // empty: stdout
  std::string output_format = "csv";
};

// Throws ConfigError naming the offending field.
void validate(const RunConfig& config);

nlohmann::json config_echo(const RunConfig& config);

// Simulation parallelism: GSENS_THREADS when set, hardware concurrency otherwise.
unsigned effective_thread_count();

// Dispatches the command and writes the report. Exit status: 0 on success
// (including sweeps with NoSolution rows), 2 on validation errors, 3 on
// data/model errors.
int run(const RunConfig& config);

}  // namespace gsens
