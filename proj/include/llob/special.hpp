#pragma once

#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "llob/errors.hpp"

namespace llob {

// Non-normalised upper incomplete gamma for any real a > -2 (x > 0). Negative
// orders go through Gamma(a, x) = (Gamma(a + 1, x) - x^a e^{-x}) / a.
inline double upper_gamma(double a, double x) {
  if (!(x > 0.0)) throw std::domain_error("upper_gamma needs x > 0");
  if (a > 0.0) return boost::math::tgamma(a, x);
  if (a == 0.0) return boost::math::expint(1, x);
  if (a <= -2.0) throw std::domain_error("upper_gamma: order too negative");
  return (upper_gamma(a + 1.0, x) - std::pow(x, a) * std::exp(-x)) / a;
}

// Non-normalised lower incomplete gamma, a > 0.
inline double lower_gamma(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("lower_gamma needs a > 0");
  if (x <= 0.0) return 0.0;
  return boost::math::tgamma_lower(a, x);
}

}  // namespace llob
