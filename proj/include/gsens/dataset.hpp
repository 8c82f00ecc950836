#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gsens {

// Columnar observations: outcome y, exposure x, instrument z, and optional
// covariate columns l. All fitting operates on this type. Columns must have
// equal length n >= 1 and contain no missing values (ingestion rejects rows
// with missing cells before a Dataset is constructed).
struct Dataset {
  std::vector<double> y;
  std::vector<double> x;
  std::vector<double> z;
  std::vector<std::vector<double>> l;
  std::vector<std::string> l_names;

  std::size_t n() const { return y.size(); }

  // Checks column lengths, n >= 1, and finiteness; throws gsens::Error.
  void validate() const;

  bool y_is_binary() const;
  bool z_is_binary() const;
};

}  // namespace gsens
