#pragma once

// Small uniform-grid helpers shared by the perturbation sources.

#include <cmath>
#include <cstddef>
#include <vector>

namespace diffwave::ops {

/// F_0 = 0, F_i = F_{i-1} + h (f_{i-1} + f_i) / 2.
inline std::vector<double> cumulative_trapezoid(const std::vector<double>& f, double h) {
  std::vector<double> F(f.size(), 0.0);
  for (std::size_t i = 1; i < f.size(); ++i) F[i] = F[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
  return F;
}

inline double trapezoid(const std::vector<double>& f, double h) {
  if (f.size() < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * h;
}

/// Centred first derivative; second-order one-sided at the ends.
inline std::vector<double> derivative(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> d(n, 0.0);
  if (n < 3) return d;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  return d;
}

/// Centred second derivative; second-order one-sided at the ends.
inline std::vector<double> second_derivative(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> d(n, 0.0);
  if (n < 4) return d;
  const double h2 = h * h;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
  d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
  d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
  return d;
}

/// F(1 + d) = d - ln(1 + d); Taylor series for small |d|.
inline double entropy_from_deviation(double d) {
  if (std::abs(d) < 1e-3) {
    const double d2 = d * d;
    return d2 * (0.5 - d / 3.0 + d2 / 4.0 - d2 * d / 5.0 + d2 * d2 / 6.0 - d2 * d2 * d / 7.0);
  }
  return d - std::log1p(d);
}

}  // namespace diffwave::ops
