#include "mlbm/metrics.hpp"

#include <algorithm>
#include <map>
#include <utility>

#include "mlbm/errors.hpp"

namespace mlbm {

namespace {

double pairs(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw DimensionMismatch("labelings have different lengths");
  if (a.size() < 2) return 1.0;
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  double index = 0.0;
  for (const auto& [key, n] : joint) index += pairs(n);
  double sum_rows = 0.0;
  for (const auto& [key, n] : rows) sum_rows += pairs(n);
  double sum_cols = 0.0;
  for (const auto& [key, n] : cols) sum_cols += pairs(n);
  const double expected = sum_rows * sum_cols / pairs(static_cast<double>(a.size()));
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum == expected) return index == maximum ? 1.0 : 0.0;
  return (index - expected) / (maximum - expected);
}

}  // namespace mlbm
