#pragma once

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "llob/errors.hpp"

namespace llob {

using mp_real = boost::multiprecision::cpp_dec_float_100;

// Fixed Talbot contour (Abate-Valko). Fhat: std::complex<double> -> std::complex<double>.
template <class F>
double invert_talbot(F&& Fhat, double t, int M = 32) {
  if (!(t > 0.0)) throw std::domain_error("Laplace inversion needs t > 0");
  const double r = 2.0 * M / (5.0 * t);
  double sum = 0.5 * (Fhat(std::complex<double>(r, 0.0)) * std::exp(r * t)).real();
  for (int k = 1; k < M; ++k) {
    const double th = k * std::numbers::pi / M;
    const double cot = std::cos(th) / std::sin(th);
    const std::complex<double> s(r * th * cot, r * th);
    const double sigma = th + (th * cot - 1.0) * cot;
    sum += (std::exp(t * s) * Fhat(s) * std::complex<double>(1.0, sigma)).real();
  }
  return r / M * sum;
}

// Gaver-Stehfest on the real axis in 100-digit arithmetic. Fhat: mp_real -> mp_real.
template <class F>
double invert_stehfest(F&& Fhat, double t, int N = 24) {
  if (!(t > 0.0)) throw std::domain_error("Laplace inversion needs t > 0");
  if (N % 2) throw input_error("Stehfest order must be even");
  const int h = N / 2;
  auto fact = [](int n) {
    mp_real f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  const mp_real ln2 = boost::multiprecision::log(mp_real(2));
  const mp_real a = ln2 / mp_real(t);
  mp_real sum = 0;
  for (int k = 1; k <= N; ++k) {
    mp_real v = 0;
    for (int j = (k + 1) / 2; j <= std::min(k, h); ++j)
      v += boost::multiprecision::pow(mp_real(j), h) * fact(2 * j) /
           (fact(h - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
    if ((h + k) % 2) v = -v;
    sum += v * Fhat(a * k);
  }
  return static_cast<double>(a * sum);
}

}  // namespace llob
