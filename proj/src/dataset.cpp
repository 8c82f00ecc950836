#include "gsens/dataset.hpp"

#include <cmath>

#include "gsens/errors.hpp"

namespace gsens {

void Dataset::validate() const {
  if (y.empty()) throw EmptyData("dataset has no rows");
  const std::size_t rows = y.size();
  if (x.size() != rows || z.size() != rows) {
    throw Error("dataset columns have unequal lengths");
  }
  for (const auto& col : l) {
    if (col.size() != rows) throw Error("covariate column length mismatch");
  }
  auto check_finite = [](const std::vector<double>& col, const char* name) {
    for (double v : col) {
      if (!std::isfinite(v)) throw NonFinite(std::string("non-finite value in column ") + name);
    }
  };
  check_finite(y, "y");
  check_finite(x, "x");
  check_finite(z, "z");
  for (const auto& col : l) check_finite(col, "l");
}

namespace {
bool is_binary(const std::vector<double>& col) {
  for (double v : col) {
    if (v != 0.0 && v != 1.0) return false;
  }
  return true;
}
}  // namespace

bool Dataset::y_is_binary() const { return is_binary(y); }
bool Dataset::z_is_binary() const { return is_binary(z); }

}  // namespace gsens
