// SPDX-License-Identifier: MIT
#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "llob/analytics.hpp"
#include "llob/fit.hpp"
#include "llob/multi.hpp"

using namespace llob;

namespace {

constexpr double kPi = std::numbers::pi;

using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

// int_0^{1/t} Z nu^{a-1} e^{-nu t_c} dnu * t_c^zeta with a = alpha + zeta; w = nu^a makes it smooth.
double quad_G(double t, const FrequencyDistribution& d, double zeta = 0.0) {
  const double a = d.alpha + zeta;
  auto f = [&](double w) { return std::exp(-std::pow(w, 1.0 / a) * d.t_c); };
  return d.Z() * std::pow(d.t_c, zeta) / a * GK::integrate(f, 0.0, std::pow(1.0 / t, a), 15, 1e-13);
}

// int_{1/t}^inf Z nu^{alpha-1} e^{-nu t_c} (nu t_c)^{zeta - 1/2} dnu
double quad_H(double t, const FrequencyDistribution& d, double zeta = 0.0) {
  boost::math::quadrature::exp_sinh<double> es;
  const double lo = 1.0 / t;
  auto f = [&](double s) {
    const double nu = lo + s;
    return d.Z() * std::pow(nu, d.alpha - 1.0) * std::exp(-nu * d.t_c) * std::pow(nu * d.t_c, zeta - 0.5);
  };
  return es.integrate(f, 1e-14);
}

const ModelParams kBook = ModelParams::from_liquidity(1.0, 1e-3, 1.0);

}  // namespace

// ---------------------------------------------------------------- memory functions

TEST(Memory, MatchesQuadratureOfTheDefiningIntegrals) {
  for (double alpha : {0.1, 0.25, 0.4})
    for (double t : {1e-2, 1.0, 1e4}) {
      const FrequencyDistribution d{alpha, 1.0, 0.0};
      const Memory m = memory_functions(t, d);
      EXPECT_NEAR(m.G, quad_G(t, d), 1e-9 * std::max(1.0, m.G)) << alpha << " " << t;
      EXPECT_NEAR(m.H / quad_H(t, d), 1.0, 1e-8) << alpha << " " << t;
    }
}

TEST(Memory, AsymptoticFormsAtLargeTime) {
  for (double alpha : {0.1, 0.25, 0.4}) {
    const FrequencyDistribution d{alpha, 2.0, 0.0};
    const double t = 1e4 * d.t_c;
    const Memory m = memory_functions(t, d), a = memory_asymptotic(t, d);
    EXPECT_NEAR(m.G / a.G, 1.0, 0.02);
    // H converges slowly; its leading correction is the constant Gamma(alpha - 1/2) / Gamma(alpha)
    EXPECT_NEAR((m.H - a.H) / (std::tgamma(alpha - 0.5) / std::tgamma(alpha)), 1.0, 0.01);
  }
}

TEST(Memory, BoundaryExponentsAreFinite) {
  const FrequencyDistribution half{0.5, 1.0, 0.0};
  const Memory m = memory_functions(10.0, half);
  EXPECT_TRUE(std::isfinite(m.H) && m.H > 0.0);
  EXPECT_NEAR(m.H / quad_H(10.0, half), 1.0, 1e-8);
  const Memory z = memory_functions(3.0, FrequencyDistribution{0.0, 1.0, 0.0});
  EXPECT_EQ(z.G, 1.0);
  EXPECT_EQ(z.H, 0.0);
  EXPECT_THROW(memory_functions(0.0, half), std::domain_error);
  EXPECT_THROW(memory_functions(1.0, FrequencyDistribution{-0.1, 1.0, 0.0}), input_error);
}

TEST(Memory, DensityIsNormalized) {
  boost::math::quadrature::exp_sinh<double> es;
  for (double alpha : {0.1, 0.25, 0.4}) {
    const FrequencyDistribution d{alpha, 0.7, 0.0};
    // nu = w^{1/alpha}
    auto f = [&](double w) { return d.Z() / alpha * std::exp(-std::pow(w, 1.0 / alpha) * d.t_c); };
    EXPECT_NEAR(es.integrate(f, 1e-14), 1.0, 1e-8);
  }
}

TEST(Memory, LowFrequencyCutoffRemovesMass) {
  const FrequencyDistribution d{0.25, 1.0, 1e-3};
  const Memory early = memory_functions(10.0, d), late = memory_functions(1e4, d);
  EXPECT_LT(early.G, memory_functions(10.0, FrequencyDistribution{0.25, 1.0, 0.0}).G);
  EXPECT_EQ(late.G, 0.0);
  EXPECT_GT(late.H, 0.0);
}

// ---------------------------------------------------------------- kernel

TEST(Kernel, ConstantVelocityIdentity) {
  const FrequencyDistribution d{0.25, 1.5, 0.0};
  const auto km = build_kernel(uniform_times(300, 0.2), d);
  const auto y = km.apply(std::vector<double>(300, 1.0));
  for (std::size_t i = 0; i < 300; ++i) {
    const double ref = km.G[i] * 4.0 / std::sqrt(kPi) * std::sqrt(km.times[i]) + km.H[i] * std::sqrt(d.t_c);
    EXPECT_NEAR(y[i], ref, 1e-12 * ref);
  }
}

TEST(Kernel, NoMemoryReducesToPsiWeights) {
  const auto km = build_kernel(uniform_times(50, 0.5), FrequencyDistribution{0.0, 1.0, 0.0}, {true});
  for (std::size_t i = 0; i < 50; ++i)
    for (std::size_t j = 0; j <= i; ++j) EXPECT_DOUBLE_EQ(km.m(i, j), psi_weight(i - j, 0.5));
  EXPECT_EQ(km.m(3, 7), 0.0);
}

TEST(Kernel, DiagonalIsPositiveAndGridMustBeUniform) {
  for (double alpha : {0.1, 0.25, 0.4}) {
    const auto km = build_kernel(uniform_times(400, 0.1), FrequencyDistribution{alpha, 1.0, 0.0});
    for (std::size_t i = 0; i < km.n(); ++i) EXPECT_GT(km.m(i, i), 0.0);
  }
  EXPECT_THROW(build_kernel({0.1, 0.2, 0.35}, FrequencyDistribution{}), input_error);
  EXPECT_THROW(build_kernel({0.1}, FrequencyDistribution{}), input_error);
}

TEST(Kernel, InverseTimesKernelIsIdentity) {
  auto km = build_kernel(uniform_times(200, 0.3), FrequencyDistribution{0.3, 1.0, 0.0});
  invert_kernel(km);
  double worst = 0.0;
  for (std::size_t i = 0; i < km.n(); ++i)
    for (std::size_t j = 0; j < km.n(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < km.n(); ++k) s += km.k(i, k) * km.m(k, j);
      worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  EXPECT_LT(worst, 1e-8);
}

// ---------------------------------------------------------------- propagator

TEST(Propagator, NoFlowLeavesThePriceAtZero) {
  const FlowSeries flow{std::vector<double>(256, 0.0), 1.0, 0.5, 0, 0};
  const auto out = propagator_price(flow, FrequencyDistribution{}, kBook);
  for (double x : out.x_kernel) EXPECT_EQ(x, 0.0);
  for (double x : out.x_asymptotic) EXPECT_EQ(x, 0.0);
}

TEST(Propagator, ConstantFlowWithoutMemoryGrowsAsSqrtT) {
  const ModelParams p = kBook;
  const double m = 0.05 * p.J();
  const FlowSeries flow{std::vector<double>(2000, m), 0.5, 0.5, 0, 0};
  const auto x = propagator_price(flow, FrequencyDistribution{0.0, 1.0, 0.0}, p).x_kernel;
  for (std::size_t i = 1000; i < x.size(); ++i) {
    const double t = 0.5 * double(i + 1);
    EXPECT_NEAR(x[i] / (m * std::sqrt(t) / (p.L() * std::sqrt(kPi * p.D))), 1.0, 0.02);
  }
}

TEST(Propagator, ImpulseMatchesTheResponseColumn) {
  const ModelParams p = kBook;
  const FrequencyDistribution d{0.25, 1.0, 0.0};
  const std::size_t n = 300, j = 40;
  std::vector<double> m(n, 0.0);
  m[j] = 0.03;
  const auto km = build_kernel(uniform_times(n, 1.0), d);
  const auto x = kernel_price(km, m, p);
  const auto col = price_response_column(km, j);
  const double s = 0.03 / (p.L() * std::sqrt(p.D));
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(x[i], s * col[i], 1e-10 * std::abs(s));
}

TEST(Propagator, LinearInTheFlow) {
  const ModelParams p = kBook;
  const FrequencyDistribution d{0.3, 1.0, 0.0};
  std::vector<double> a(256), b(256);
  for (std::size_t i = 0; i < 256; ++i) {
    a[i] = 0.01 * std::sin(0.1 * double(i));
    b[i] = 0.02 * std::cos(0.03 * double(i));
  }
  std::vector<double> c(256);
  for (std::size_t i = 0; i < 256; ++i) c[i] = 2.0 * a[i] - b[i];
  const auto km = build_kernel(uniform_times(256, 1.0), d);
  const auto xa = kernel_price(km, a, p), xb = kernel_price(km, b, p), xc = kernel_price(km, c, p);
  for (std::size_t i = 0; i < 256; ++i) EXPECT_NEAR(xc[i], 2.0 * xa[i] - xb[i], 1e-12);
}

TEST(Propagator, AsymptoticPriceOfConstantFlow) {
  const ModelParams p = kBook;
  const FrequencyDistribution d{0.25, 1.0, 0.0};
  const double m = 0.02, dt = 1.0;
  const std::vector<double> flow(4000, m);
  const auto x = asymptotic_price(flow, dt, d, p);
  const double pre = std::tgamma(d.alpha + 1.0) / (p.L() * std::pow(d.t_c, d.alpha) * std::sqrt(p.D)) /
                     std::sqrt(4.0 * kPi);
  // int_0^t tau^alpha (t - tau)^{-1/2} dtau = t^{alpha + 1/2} B(alpha + 1, 1/2)
  const double beta = std::tgamma(d.alpha + 1.0) * std::tgamma(0.5) / std::tgamma(d.alpha + 1.5);
  for (std::size_t i = 999; i < x.size(); i += 500) {
    const double t = dt * double(i + 1);
    EXPECT_NEAR(x[i] / (pre * m * std::pow(t, d.alpha + 0.5) * beta), 1.0, 1e-3);
  }
}

TEST(Propagator, GuardsTheFlowAmplitude) {
  const ModelParams p = kBook;
  const FlowSeries flow{std::vector<double>(64, 0.2 * p.J()), 1.0, 0.5, 0, 0};
  EXPECT_THROW(propagator_price(flow, FrequencyDistribution{}, p), regime_error);
  EXPECT_NO_THROW(propagator_price(flow, FrequencyDistribution{}, p, true, false));
}

// ---------------------------------------------------------------- diffusion fit

TEST(DiffusionFit, ExactDiffusionGivesUnitExponent) {
  const std::size_t n = 1u << 14;
  std::vector<std::vector<double>> paths(5, std::vector<double>(n));
  for (std::size_t r = 0; r < paths.size(); ++r)
    for (std::size_t i = 0; i < n; ++i) paths[r][i] = (double(r) - 1.7) * std::sqrt(0.5 * double(i + 1));
  const auto f = diffusion_exponent(paths, 0.5, 50);
  EXPECT_NEAR(f.exponent, 1.0, 1e-10);
  EXPECT_LT(f.error, 1e-8);
  EXPECT_DOUBLE_EQ(f.t_hi, 0.5 * double(n));
  EXPECT_DOUBLE_EQ(f.t_lo, f.t_hi / 100.0);
}

TEST(DiffusionFit, RejectsInsufficientData) {
  EXPECT_THROW(diffusion_exponent({std::vector<double>(1u << 14)}, 1.0), input_error);
  EXPECT_THROW(diffusion_exponent(std::vector<std::vector<double>>(4, std::vector<double>(1000)), 1.0), input_error);
  std::vector<std::vector<double>> ragged(3, std::vector<double>(1u << 14));
  ragged[2].resize((1u << 14) + 1);
  EXPECT_THROW(diffusion_exponent(ragged, 1.0), input_error);
}

// ---------------------------------------------------------------- trade-rate profile

TEST(TradeRate, ZetaZeroReducesToTheMemoryFunctions) {
  const TradeRateProfile pr{1.0, 0.0};
  for (double alpha : {0.1, 0.25, 0.4})
    for (double t : {0.1, 10.0, 1e3}) {
      const FrequencyDistribution d{alpha, 1.0, 0.0};
      const MemoryZeta z = memory_functions_zeta(t, d, pr);
      const Memory m = memory_functions(t, d);
      EXPECT_NEAR(z.G, m.G, 1e-12);
      EXPECT_NEAR(z.H, m.H, 1e-12 * m.H);
    }
}

TEST(TradeRate, ExactFormsMatchQuadratureAndGAsymptote) {
  const TradeRateProfile pr{1.0, 0.15};
  const FrequencyDistribution d{0.1, 1.0, 0.0};
  for (double t : {1.0, 1e3}) {
    const MemoryZeta z = memory_functions_zeta(t, d, pr);
    EXPECT_NEAR(z.G / quad_G(t, d, pr.zeta), 1.0, 1e-8);
    EXPECT_NEAR(z.H / quad_H(t, d, pr.zeta), 1.0, 1e-8);
  }
  const MemoryZeta z = memory_functions_zeta(1e3, d, pr);
  EXPECT_NEAR(z.G_asym / z.G, 1.0, 0.05);
  // H keeps the constant Gamma(alpha + zeta - 1/2) / Gamma(alpha) on top of its power law
  const double c = std::tgamma(d.alpha + pr.zeta - 0.5) / std::tgamma(d.alpha);
  EXPECT_NEAR((z.H - z.H_asym) / c, 1.0, 0.01);
}

TEST(TradeRate, TotalRateAndScales) {
  const TradeRateProfile pr{2.0, 0.15};
  const FrequencyDistribution d{0.2, 1.5, 0.0};
  boost::math::quadrature::exp_sinh<double> es;
  const double a = d.alpha + pr.zeta;
  // int rho(nu) J_nu dnu with w = nu^a
  auto f = [&](double w) { return d.Z() * pr.J_hf * std::pow(d.t_c, pr.zeta) / a * std::exp(-std::pow(w, 1.0 / a) * d.t_c); };
  EXPECT_NEAR(pr.J_total(d) / es.integrate(f, 1e-14), 1.0, 1e-8);
  const double m0 = 0.05;
  EXPECT_NEAR(pr.J_nu(pr.nu_star(m0, d.t_c), d.t_c), m0, 1e-12);
  EXPECT_DOUBLE_EQ(pr.upsilon(d.t_c), 3.0);
  EXPECT_THROW(pr.validate(FrequencyDistribution{0.4, 1.0, 0.0}), input_error);
  EXPECT_THROW((TradeRateProfile{0.0, 0.1}.validate(d)), input_error);
}

// ---------------------------------------------------------------- meta-order

TEST(MetaorderMulti, EarlyBranchExponent) {
  for (auto [alpha, zeta] : {std::pair{0.1, 0.15}, std::pair{0.2, 0.1}}) {
    const FrequencyDistribution d{alpha, 1.0, 0.0};
    const TradeRateProfile pr{1.0, zeta};
    const auto grid = geometric_grid(1e-2, 1e5, 1500);
    const auto r = metaorder_multi(0.05, pr, d, grid, 1.0, {true, false, false});
    const auto f = fit_power_law(r.t, r.x, 1e3, 1e5);
    EXPECT_NEAR(f.slope, 0.5 + alpha + zeta, 0.03) << alpha << " " << zeta;
    for (std::size_t i = 1; i < r.x.size(); ++i) EXPECT_GE(r.x[i], r.x[i - 1]);
  }
}

TEST(MetaorderMulti, Guards) {
  const FrequencyDistribution d{0.1, 1.0, 0.0};
  const TradeRateProfile pr{1.0, 0.15};
  const std::vector<double> g{0.1, 0.2, 0.3};
  EXPECT_THROW(metaorder_multi(0.5, pr, d, g), regime_error);
  EXPECT_THROW(metaorder_multi(0.0, pr, d, g, 1.0, {false, true, true}), input_error);
  EXPECT_THROW(metaorder_multi(0.05, pr, d, {0.0, 0.1}), input_error);
  EXPECT_THROW(metaorder_multi(0.05, pr, d, {0.2, 0.1}), input_error);
  EXPECT_THROW(metaorder_multi(0.05, TradeRateProfile{1.0, 0.45}, d, g), input_error);
}

// Noise-free version of the diffusivity measurement: E[x_t^2] = y^T C y with y solving
// M^T y = 1 on [0, t] and C the flow covariance (1 + l)^{-gamma}. The fitted exponent of
// the exact ensemble average sits inside both bands, so run-to-run misses are sampling noise.
TEST(DiffusionFit, ExactEnsembleExpectationFallsInsideTheBands) {
  const std::size_t n = 1u << 14;
  const double gamma = 0.5;
  std::vector<double> C(n);
  for (std::size_t l = 0; l < n; ++l) C[l] = std::pow(1.0 + double(l), -gamma);
  for (auto [alpha, target] : {std::pair{0.25, 1.0}, std::pair{0.0, 0.5}}) {
    const auto km = build_kernel(uniform_times(n, 1.0), FrequencyDistribution{alpha, 1.0, 0.0});
    std::vector<double> t, ms;
    for (int k = 0; k < 12; ++k) {
      const auto ti = static_cast<std::size_t>(std::llround(double(n) * std::pow(100.0, -k / 11.0))) - 1;
      std::vector<double> y(ti + 1);
      for (std::size_t jj = ti + 1; jj-- > 0;) {
        double s = 0.0;
        for (std::size_t i = jj + 1; i <= ti; ++i) s += km.m(i, jj) * y[i];
        y[jj] = (1.0 - s) / km.m(jj, jj);
      }
      double e = 0.0;
      for (std::size_t j = 0; j <= ti; ++j) {
        double r = 0.0;
        for (std::size_t i = 0; i <= ti; ++i) r += C[j > i ? j - i : i - j] * y[i];
        e += y[j] * r;
      }
      t.push_back(double(ti + 1));
      ms.push_back(e);
    }
    const auto f = fit_power_law(t, ms, double(n) / 100.0 * 0.999, double(n));
    EXPECT_NEAR(f.slope, target, 0.05) << alpha;
  }
}
