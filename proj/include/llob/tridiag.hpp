#pragma once

#include <cstddef>
#include <vector>

#include "llob/errors.hpp"

namespace llob {

// Thomas algorithm. a: sub-diagonal (a[0] unused), b: diagonal, c: super-diagonal
// (c[n-1] unused). Overwrites d with the solution.
inline void solve_tridiagonal(const std::vector<double>& a, const std::vector<double>& b,
                              const std::vector<double>& c, std::vector<double>& d) {
  const std::size_t n = b.size();
  if (n == 0) return;
  std::vector<double> cp(n);
  double den = b[0];
  if (den == 0.0) throw numerical_error("tridiagonal solve: zero pivot");
  cp[0] = c[0] / den;
  d[0] /= den;
  for (std::size_t i = 1; i < n; ++i) {
    den = b[i] - a[i] * cp[i - 1];
    if (den == 0.0) throw numerical_error("tridiagonal solve: zero pivot");
    cp[i] = (i + 1 < n ? c[i] : 0.0) / den;
    d[i] = (d[i] - a[i] * d[i - 1]) / den;
  }
  for (std::size_t i = n - 1; i-- > 0;) d[i] -= cp[i] * d[i + 1];
}

// Factorized constant-coefficient tridiagonal matrix with off-diagonal `off` and
// diagonal `diag`, except for the first and last diagonal entries. Reused across steps.
class TridiagFactor {
 public:
  TridiagFactor() = default;
  TridiagFactor(std::size_t n, double off, double diag, double diag_first, double diag_last)
      : off_(off), cp_(n), inv_(n) {
    double den = diag_first;
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) den = (i + 1 == n ? diag_last : diag) - off * cp_[i - 1];
      if (den == 0.0) throw numerical_error("tridiagonal factor: zero pivot");
      inv_[i] = 1.0 / den;
      cp_[i] = off * inv_[i];
    }
  }

  void solve(std::vector<double>& d) const {
    const std::size_t n = inv_.size();
    d[0] *= inv_[0];
    for (std::size_t i = 1; i < n; ++i) d[i] = (d[i] - off_ * d[i - 1]) * inv_[i];
    for (std::size_t i = n - 1; i-- > 0;) d[i] -= cp_[i] * d[i + 1];
  }

  std::size_t size() const { return inv_.size(); }

 private:
  double off_ = 0.0;
  std::vector<double> cp_, inv_;
};

}  // namespace llob
