#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace rydberg {

/// Piecewise cubic Hermite interpolant on a uniform grid x_i = x0 + i*dx.
/// Values and slopes are supplied at every knot.
class UniformHermite {
 public:
  UniformHermite() = default;
  UniformHermite(double x0, double dx, std::vector<double> values, std::vector<double> slopes)
      : x0_(x0), dx_(dx), y_(std::move(values)), dy_(std::move(slopes)) {
    if (y_.size() < 2 || y_.size() != dy_.size() || !(dx_ > 0.0)) {
      throw std::invalid_argument("UniformHermite: need >= 2 knots with matching slopes");
    }
  }

  double operator()(double x) const {
    auto [i, s] = locate(x);
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * y_[i] + h10 * dx_ * dy_[i] + h01 * y_[i + 1] + h11 * dx_ * dy_[i + 1];
  }

  double derivative(double x) const {
    auto [i, s] = locate(x);
    const double s2 = s * s;
    const double d00 = 6 * s2 - 6 * s;
    const double d10 = 3 * s2 - 4 * s + 1;
    const double d01 = -6 * s2 + 6 * s;
    const double d11 = 3 * s2 - 2 * s;
    return (d00 * y_[i] + d01 * y_[i + 1]) / dx_ + d10 * dy_[i] + d11 * dy_[i + 1];
  }

  std::size_t size() const { return y_.size(); }
  double x_front() const { return x0_; }
  double x_back() const { return x0_ + dx_ * static_cast<double>(y_.size() - 1); }

 private:
  struct Cell {
    std::size_t index;
    double frac;
  };

  // Clamps to the table; callers do their own domain checks.
  Cell locate(double x) const {
    const double pos = (x - x0_) / dx_;
    const auto last = static_cast<double>(y_.size() - 2);
    double cell = std::floor(pos);
    if (cell < 0.0) cell = 0.0;
    if (cell > last) cell = last;
    return {static_cast<std::size_t>(cell), pos - cell};
  }

  double x0_ = 0.0;
  double dx_ = 1.0;
  std::vector<double> y_;
  std::vector<double> dy_;
};

/// Fourth-order finite-difference slopes of uniformly sampled data (one-sided
/// five-point stencils at the two ends of each boundary).
inline std::vector<double> uniform_slopes(const std::vector<double>& y, double dx) {
  const std::size_t n = y.size();
  if (n < 5) throw std::invalid_argument("uniform_slopes: need >= 5 samples");
  std::vector<double> d(n);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    d[i] = (y[i - 2] - 8 * y[i - 1] + 8 * y[i + 1] - y[i + 2]) / (12 * dx);
  }
  d[0] = (-25 * y[0] + 48 * y[1] - 36 * y[2] + 16 * y[3] - 3 * y[4]) / (12 * dx);
  d[1] = (-3 * y[0] - 10 * y[1] + 18 * y[2] - 6 * y[3] + y[4]) / (12 * dx);
  d[n - 1] = (25 * y[n - 1] - 48 * y[n - 2] + 36 * y[n - 3] - 16 * y[n - 4] + 3 * y[n - 5]) / (12 * dx);
  d[n - 2] = (3 * y[n - 1] + 10 * y[n - 2] - 18 * y[n - 3] + 6 * y[n - 4] - y[n - 5]) / (12 * dx);
  return d;
}

}  // namespace rydberg
