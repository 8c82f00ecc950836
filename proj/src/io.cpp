#include "gsens/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gsens/errors.hpp"
#include "gsens/runner.hpp"

namespace gsens {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(cell);
  return cells;
}

std::string strip(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out = s.substr(b, e - b);
  // R's write.csv quotes header names; accept either form.
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

bool is_missing(const std::string& cell) {
  if (cell.empty()) return true;
  std::string lower;
  for (char ch : cell) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  return lower == "na" || lower == "nan";
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw MissingColumn("column '" + name + "' not found in CSV header");
}

}  // namespace

CsvLoadReport load_csv(const std::string& path, const ColumnMap& map) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(in, line)) throw EmptyData("'" + path + "' is empty");
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = strip(h);

  std::vector<std::size_t> indices;
  std::vector<std::string> names;
  indices.push_back(find_column(header, map.y));
  names.push_back(map.y);
  indices.push_back(find_column(header, map.x));
  names.push_back(map.x);
  indices.push_back(find_column(header, map.z));
  names.push_back(map.z);
  for (const auto& lname : map.l) {
    indices.push_back(find_column(header, lname));
    names.push_back(lname);
  }

  CsvLoadReport report;
  report.data.l.resize(map.l.size());
  report.data.l_names = map.l;

  std::size_t line_no = 1;
  std::vector<double> row(indices.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " cells, found " +
                       std::to_string(cells.size()));
    }
    bool missing = false;
    for (std::size_t j = 0; j < indices.size() && !missing; ++j) {
      missing = is_missing(strip(cells[indices[j]]));
    }
    if (missing) {
      ++report.n_dropped;
      continue;
    }
    for (std::size_t j = 0; j < indices.size(); ++j) {
      const std::string cell = strip(cells[indices[j]]);
      char* end = nullptr;
      const double value = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        throw ParseError("line " + std::to_string(line_no) + ", column '" + names[j] +
                         "': cannot parse '" + cell + "' as a number");
      }
      row[j] = value;
    }
    report.data.y.push_back(row[0]);
    report.data.x.push_back(row[1]);
    report.data.z.push_back(row[2]);
    for (std::size_t j = 0; j < map.l.size(); ++j) report.data.l[j].push_back(row[3 + j]);
  }

  if (report.data.y.empty()) {
    throw EmptyData("'" + path + "' has no usable data rows");
  }
  report.n_retained = report.data.n();
  report.data.validate();
  return report;
}

namespace {

std::string full_precision(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Fixed 3-decimal cell; NA for non-finite values.
std::string fmt3(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // normalize -0
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  out << "y,x,z";
  for (std::size_t j = 0; j < data.l.size(); ++j) {
    out << ',' << (j < data.l_names.size() ? data.l_names[j] : "l" + std::to_string(j + 1));
  }
  out << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    out << full_precision(data.y[i]) << ',' << full_precision(data.x[i]) << ','
        << full_precision(data.z[i]);
    for (const auto& col : data.l) out << ',' << full_precision(col[i]);
    out << '\n';
  }
}

OutputFormat output_format_from_string(const std::string& s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  throw ConfigError("output_format: unknown value '" + s + "' (expected csv or json)");
}

void write_sweep_csv(const SweepResult& sweep, Link link, std::ostream& out) {
  const bool odds = link == Link::Logit;
  out << (odds ? "alpha,psi_hat,ci_lo,ci_hi,or_hat,or_lo,or_hi,status"
               : "alpha,psi_hat,ci_lo,ci_hi,status")
      << '\n';
  for (const GEstimate& e : sweep.entries) {
    out << fmt3(e.alpha) << ',';
    if (e.status == FitStatus::NoSolution) {
      out << "NA,NA,NA";
      if (odds) out << ",NA,NA,NA";
    } else {
      const bool has_ci = e.status == FitStatus::Solved;
      out << fmt3(e.psi) << ',' << (has_ci ? fmt3(e.ci.lo) : "NA") << ','
          << (has_ci ? fmt3(e.ci.hi) : "NA");
      if (odds) {
        out << ',' << fmt3(std::exp(e.psi)) << ',' << (has_ci ? fmt3(std::exp(e.ci.lo)) : "NA")
            << ',' << (has_ci ? fmt3(std::exp(e.ci.hi)) : "NA");
      }
    }
    out << ',' << to_string(e.status) << '\n';
  }
}

nlohmann::json sweep_to_json(const SweepResult& sweep, Link link,
                             const nlohmann::json& config_echo) {
  nlohmann::json entries = nlohmann::json::array();
  for (const GEstimate& e : sweep.entries) {
    nlohmann::json row;
    row["alpha"] = e.alpha;
    row["status"] = to_string(e.status);
    if (e.status != FitStatus::NoSolution) {
      row["psi_hat"] = e.psi;
      if (link == Link::Logit) row["or_hat"] = std::exp(e.psi);
      row["root_residual"] = e.root_residual;
      row["multiple_roots"] = e.multiple_roots;
    }
    if (e.status == FitStatus::Solved) {
      row["ci_lo"] = e.ci.lo;
      row["ci_hi"] = e.ci.hi;
      row["psi_variance"] = e.psi_variance;
      if (link == Link::Logit) {
        row["or_lo"] = std::exp(e.ci.lo);
        row["or_hi"] = std::exp(e.ci.hi);
      }
    }
    entries.push_back(std::move(row));
  }
  nlohmann::json j;
  j["version"] = kVersion;
  j["config"] = config_echo;
  if (sweep.solvable_range) {
    j["solvable_range"] = {sweep.solvable_range->first, sweep.solvable_range->second};
  } else {
    j["solvable_range"] = nullptr;
  }
  j["entries"] = std::move(entries);
  return j;
}

void write_mc_csv(const MonteCarloReport& report, std::ostream& out) {
  out << "alpha,coverage,mean_ci_length,mean_est,q25,q50,q75,n_solved,n_failed\n";
  for (const AlphaSummary& row : report.rows) {
    out << fmt3(row.alpha) << ',' << fmt3(row.coverage) << ',' << fmt3(row.mean_ci_length)
        << ',' << fmt3(row.mean_est) << ',' << fmt3(row.q25) << ',' << fmt3(row.q50) << ','
        << fmt3(row.q75) << ',' << row.n_solved << ',' << row.n_failed() << '\n';
  }
}

nlohmann::json mc_to_json(const MonteCarloReport& report,
                          const nlohmann::json& config_echo) {
  nlohmann::json rows = nlohmann::json::array();
  for (const AlphaSummary& row : report.rows) {
    rows.push_back({{"alpha", row.alpha},
                    {"coverage", row.coverage},
                    {"mean_ci_length", row.mean_ci_length},
                    {"mean_est", row.mean_est},
                    {"q25", row.q25},
                    {"q50", row.q50},
                    {"q75", row.q75},
                    {"n_solved", row.n_solved},
                    {"n_no_solution", row.n_no_solution},
                    {"n_singular", row.n_singular},
                    {"n_nuisance_failed", row.n_nuisance_failed},
                    {"n_failed", row.n_failed()}});
  }
  nlohmann::json j;
  j["version"] = kVersion;
  j["config"] = config_echo;
  j["seed"] = report.master_seed;
  j["m"] = report.m;
  j["n"] = report.n;
  j["true_psi"] = report.true_psi;
  j["rows"] = std::move(rows);
  return j;
}

void write_relevance_csv(const RelevanceResult& result, std::ostream& out) {
  out << "f_stat,df1,df2,coef,ci_lo,ci_hi,perfect_collinearity\n";
  out << fmt3(result.f_stat) << ',' << result.df.first << ',' << result.df.second << ','
      << fmt3(result.coef) << ',' << fmt3(result.ci.lo) << ',' << fmt3(result.ci.hi) << ','
      << (result.perfect_collinearity ? 1 : 0) << '\n';
}

nlohmann::json relevance_to_json(const RelevanceResult& result,
                                 const nlohmann::json& config_echo) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["config"] = config_echo;
  j["f_stat"] = result.f_stat;
  j["df"] = {result.df.first, result.df.second};
  j["coef"] = result.coef;
  j["ci_lo"] = result.ci.lo;
  j["ci_hi"] = result.ci.hi;
  j["perfect_collinearity"] = result.perfect_collinearity;
  return j;
}

void write_text_report(const std::string& path, const std::string& body) {
  if (path.empty()) {
    std::cout << body;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << body;
  if (!out) throw IoError("failed writing report to '" + path + "'");
}

}  // namespace gsens
