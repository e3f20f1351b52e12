#pragma once

#include <cmath>
#include <span>

namespace mlbm {

/// Neumaier-compensated accumulator. Summation order is the call order, so
/// results are reproducible for a fixed input order.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }

  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// x log x with the 0 log 0 = 0 convention.
inline double xlogx(double x) noexcept { return x > 0.0 ? x * std::log(x) : 0.0; }

/// Pairwise (tree) reduction; fixed association order for a given length.
inline double pairwise_sum(std::span<const double> values) noexcept {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const auto half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace mlbm
