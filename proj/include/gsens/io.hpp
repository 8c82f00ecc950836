#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsens/dataset.hpp"
#include "gsens/sensitivity.hpp"
#include "gsens/simulation.hpp"

namespace gsens {

struct ColumnMap {
  std::string y = "y";
  std::string x = "x";
  std::string z = "z";
  std::vector<std::string> l;
};

struct CsvLoadReport {
  Dataset data;
  std::size_t n_retained = 0;
  std::size_t n_dropped = 0;  // rows rejected for missing values
};

// Parses the mapped columns of a headered CSV as reals. Rows with missing
// cells (empty or NA, case-insensitive) in mapped columns are dropped and
// counted. Throws MissingColumn, ParseError (row/column indexed), EmptyData.
CsvLoadReport load_csv(const std::string& path, const ColumnMap& map);

// Full-precision dataset emission; load_csv on the output reproduces the
// dataset exactly.
void write_dataset_csv(const Dataset& data, std::ostream& out);

enum class OutputFormat { Csv, Json };

OutputFormat output_format_from_string(const std::string& s);

// Report emission. CSV uses a fixed column order with 3-decimal rounding
// suitable for golden-file comparison; JSON carries full precision plus
// metadata (version and a config echo).
void write_sweep_csv(const SweepResult& sweep, Link link, std::ostream& out);
nlohmann::json sweep_to_json(const SweepResult& sweep, Link link,
                             const nlohmann::json& config_echo);

void write_mc_csv(const MonteCarloReport& report, std::ostream& out);
nlohmann::json mc_to_json(const MonteCarloReport& report,
                          const nlohmann::json& config_echo);

void write_relevance_csv(const RelevanceResult& result, std::ostream& out);
nlohmann::json relevance_to_json(const RelevanceResult& result,
                                 const nlohmann::json& config_echo);

// Opens `path` for writing (IoError on failure) or returns nullptr for stdout.
void write_text_report(const std::string& path, const std::string& body);

}  // namespace gsens
