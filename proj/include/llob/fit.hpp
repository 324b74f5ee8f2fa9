#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "llob/errors.hpp"

namespace llob {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

// Ordinary least squares y = intercept + slope * x.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw input_error("fit_line needs at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw input_error("fit_line: degenerate abscissa");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  f.n = n;
  return f;
}

// Log-log fit of y against t restricted to t in [lo, hi] and y > 0.
inline LineFit fit_power_law(const std::vector<double>& t, const std::vector<double>& y, double lo, double hi) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < t.size() && i < y.size(); ++i) {
    if (t[i] >= lo && t[i] <= hi && t[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(t[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 3) throw input_error("power-law fit window holds fewer than three points");
  return fit_line(lx, ly);
}

inline std::vector<double> geometric_grid(double t0, double t1, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = t0 * std::pow(t1 / t0, n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1));
  return g;
}

}  // namespace llob
