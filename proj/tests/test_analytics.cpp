// SPDX-License-Identifier: MIT
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "llob/analytics.hpp"
#include "llob/fit.hpp"

using namespace llob;

namespace {

constexpr double kPi = std::numbers::pi;

double at(const std::vector<double>& u, const std::vector<double>& F, double x) {
  for (std::size_t i = 1; i < u.size(); ++i)
    if (u[i] >= x) return F[i - 1] + (F[i] - F[i - 1]) * (x - u[i - 1]) / (u[i] - u[i - 1]);
  return F.back();
}

// F(u) for beta = 1 from an independent solve of the same equation with piecewise-linear
// F and product integration on a uniform grid of step 1e-3 (converged to 1e-4).
constexpr double kF5 = 1.0406, kF20 = 1.2617, kFinf = 1.485;

const ModelParams kBook = ModelParams::from_liquidity(1.0, 1e-3, 1.0);

}  // namespace

// ---------------------------------------------------------------- regimes

TEST(Regime, ClassifiesTheDocumentedExamples) {
  const ModelParams p = kBook;
  const double T = 1.0;  // nu T = 1e-3
  const Regime r = classify_regime(0.05 * p.J(), T, p);
  EXPECT_EQ(r, (Regime{Participation::small, Duration::fast, Volume::small}));
  EXPECT_NEAR(0.05 * p.J() * T / p.Q_lin(), 5e-5, 1e-18);
  // large participation, slow: volume forced large
  const ModelParams q = ModelParams::from_liquidity(1.0, 1.0, 1.0);
  const Regime s = classify_regime(20.0 * q.J(), 50.0, q);
  EXPECT_EQ(s.participation, Participation::large);
  EXPECT_EQ(s.duration, Duration::slow);
  EXPECT_EQ(s.volume, Volume::large);
  // a crossover value yields the intermediate marker
  EXPECT_TRUE(classify_regime(p.J(), T, p).intermediate());
  EXPECT_TRUE(classify_regime(0.05 * q.J(), 1.0, q).intermediate());
}

TEST(Regime, ThresholdsAreConfigurable) {
  const ModelParams p = kBook;
  RegimeThresholds th;
  th.participation_lo = 2.0;
  th.participation_hi = 50.0;
  EXPECT_EQ(classify_regime(1.0 * p.J(), 1.0, p, th).participation, Participation::small);
  EXPECT_EQ(classify_regime(1.0 * p.J(), 1.0, p).participation, Participation::intermediate);
}

TEST(Regime, OnlySixRegimesAreConstructible) {
  int feasible = 0;
  for (auto pa : {Participation::small, Participation::large})
    for (auto d : {Duration::fast, Duration::slow})
      for (auto v : {Volume::small, Volume::large}) {
        try {
          make_regime(pa, d, v);
          ++feasible;
        } catch (const regime_error&) {
        }
      }
  EXPECT_EQ(feasible, 6);
  EXPECT_THROW(make_regime(Participation::small, Duration::fast, Volume::large), regime_error);
  EXPECT_THROW(make_regime(Participation::large, Duration::slow, Volume::small), regime_error);
}

// ---------------------------------------------------------------- trajectories

TEST(AnalyticPrice, TableEntries) {
  const ModelParams p = kBook;
  const double T = 1.0;
  const Regime small{Participation::small, Duration::fast, Volume::small};
  const Regime large{Participation::large, Duration::fast, Volume::small};
  const Regime slow{Participation::large, Duration::slow, Volume::large};
  const double m0 = 0.05 * p.J();
  EXPECT_NEAR(analytic_price(T, m0, p, small), m0 * std::sqrt(T) / (p.L() * std::sqrt(kPi * p.D)), 1e-15);
  const double M0 = 10.0 * p.J(), Q = M0 * T;
  EXPECT_NEAR(analytic_price(T, M0, p, large), std::sqrt(2.0 * Q / p.L()), 1e-14);
  EXPECT_NEAR(analytic_price(T, M0, p, slow), Q * p.nu / p.lambda, 1e-15);
  EXPECT_THROW(analytic_price(T, m0, p, Regime{}), regime_error);
  EXPECT_THROW(analytic_price(T, m0, p, Regime{Participation::small, Duration::fast, Volume::large}), regime_error);
}

TEST(AnalyticPrice, SlowRegimeDoesNotDependOnD) {
  const Regime slow{Participation::small, Duration::slow, Volume::small};
  const ModelParams a{0.5, 2.0, 3.0, 0.0}, b{5.0, 2.0, 3.0, 0.0};
  for (double t : {0.1, 1.0, 7.0}) EXPECT_EQ(analytic_price(t, 0.4, a, slow), analytic_price(t, 0.4, b, slow));
}

TEST(Correction, SmallParticipationConstant) {
  const double k = std::sqrt(4.0 / kPi) - std::sqrt(kPi / 4.0);
  EXPECT_DOUBLE_EQ(correction_k(), k);
  EXPECT_NEAR(correction_k(), 0.2421522, 1e-7);
  const ModelParams p = kBook;
  const Regime r{Participation::small, Duration::fast, Volume::small};
  const double m0 = 0.05 * p.J(), a = trajectory_alpha(m0, p, Participation::small);
  for (double t : {0.2, 0.5, 1.0}) EXPECT_NEAR(first_order_correction(t, m0, p, r) / (a * std::sqrt(p.nu) * t), -k, 1e-14);
  EXPECT_EQ(first_order_correction(0.0, m0, p, r), 0.0);
}

TEST(Correction, LargeParticipationAtThree) {
  const ModelParams p = kBook;
  const Regime r{Participation::large, Duration::fast, Volume::small};
  const double m0 = 10.0 * p.J(), a = std::sqrt(2.0 * m0 / p.L());
  EXPECT_NEAR(first_order_correction(3.0, m0, p, r), -a * std::sqrt(p.nu) * std::sqrt(p.J() / (2.0 * m0)), 1e-15);
  EXPECT_EQ(first_order_correction(0.0, m0, p, r), 0.0);
}

TEST(Correction, LowersTheTrajectoryAndIsUndefinedForLinearGrowth) {
  const ModelParams p = kBook;
  for (auto part : {Participation::small, Participation::large}) {
    const Regime r{part, Duration::fast, Volume::small};
    const double m0 = (part == Participation::small ? 0.05 : 10.0) * p.J();
    for (double t = 0.01; t <= 1.0; t += 0.01) {
      const double z0 = analytic_price(t, m0, p, r);
      EXPECT_LT(z0 + first_order_correction(t, m0, p, r), z0);
    }
  }
  EXPECT_THROW(first_order_correction(1.0, 1.0, p, Regime{Participation::large, Duration::slow, Volume::large}), regime_error);
  EXPECT_THROW(first_order_correction(1.0, 1.0, p, Regime{Participation::small, Duration::fast, Volume::large}), regime_error);
}

// ---------------------------------------------------------------- permanent impact

TEST(PermanentImpact, LinearInVolume) {
  const ModelParams p{1.3, 0.2, 0.7, 0.0};
  EXPECT_NEAR(permanent_impact(p.Q_lin(), p), 0.5 * p.xi_c(), 1e-14);
  EXPECT_EQ(permanent_impact(0.0, p), 0.0);
  EXPECT_NEAR(permanent_impact(2.0 * 3.7, p), 2.0 * permanent_impact(3.7, p), 1e-14);
  EXPECT_THROW(permanent_impact(-1.0, p), input_error);
}

TEST(RegimeBeta, ValuesAndTheImpactIdentity) {
  const ModelParams p = kBook;
  EXPECT_NEAR(regime_beta(2.0 * kPi * p.J(), p, Participation::large), 0.5, 1e-15);
  EXPECT_EQ(regime_beta(0.01, p, Participation::small), 0.5);
  EXPECT_THROW(regime_beta(1.0, p, Participation::intermediate), regime_error);
  const double T = 1.0;
  for (auto [part, m0] : {std::pair{Participation::small, 0.05 * p.J()}, std::pair{Participation::large, 10.0 * p.J()}}) {
    const double a = trajectory_alpha(m0, p, part), beta = regime_beta(m0, p, part);
    const double I = permanent_impact(m0 * T, p);
    EXPECT_NEAR(a * std::sqrt(p.nu) * T * beta * std::sqrt(kPi), I, 1e-12 * I);
  }
}

// ---------------------------------------------------------------- decay profile

TEST(DecayProfile, HomogeneousEquationGivesZero) {
  const auto u = geometric_grid(1e-3, 10.0, 100);
  for (double v : decay_profile(u, 0.0)) EXPECT_EQ(v, 0.0);
}

TEST(DecayProfile, RejectsBadGrids) {
  EXPECT_THROW(decay_profile({0.0, 1.0}, 1.0), input_error);
  EXPECT_THROW(decay_profile({0.5, 0.4}, 1.0), input_error);
  EXPECT_TRUE(decay_profile({}, 1.0).empty());
}

TEST(DecayProfile, SolvesItsDiscreteEquation) {
  const auto u = geometric_grid(1e-4, 40.0, 800);
  const auto F = decay_profile(u, 0.5);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_LT(std::abs(decay_residual(u, F, 0.5, i)), 1e-6);
}

TEST(DecayProfile, LinearInBeta) {
  const auto u = geometric_grid(1e-3, 20.0, 300);
  const auto a = decay_profile(u, 1.0), b = decay_profile(u, 0.3);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(b[i], 0.3 * a[i], 1e-12);
}

// The marching scheme is first order in the cell size: the difference to a 10x finer
// grid is a few percent, and Richardson extrapolation lands on the independent solve.
TEST(DecayProfile, ConvergesToTheIndependentSolution) {
  auto solve = [](std::size_t n) {
    auto u = geometric_grid(1e-4, 40.0, n);
    auto F = decay_profile(u, 1.0);
    return std::pair{u, F};
  };
  const auto [u1, F1] = solve(400);
  const auto [u2, F2] = solve(1600);
  const auto [u3, F3] = solve(4000);
  EXPECT_NEAR(at(u1, F1, 5.0) / at(u3, F3, 5.0), 1.0, 0.025);
  EXPECT_NEAR(at(u3, F3, 5.0) / kF5, 1.0, 0.005);
  // spacing ~ 1/n: F_exact ~ F3 + (F3 - F2) n2 / (n3 - n2)
  const double w = 1600.0 / (4000.0 - 1600.0);
  for (auto [x, ref] : {std::pair{5.0, kF5}, std::pair{20.0, kF20}}) {
    const double rich = at(u3, F3, x) + w * (at(u3, F3, x) - at(u2, F2, x));
    EXPECT_NEAR(rich / ref, 1.0, 1e-3) << "u = " << x;
  }
}

// Past u = 20 the profile has the shape F_inf - beta / sqrt(u).
TEST(DecayProfile, ApproachesAPlateauAsInverseSqrt) {
  const auto u = geometric_grid(1e-4, 40.0, 4000);
  const auto F = decay_profile(u, 1.0);
  double lo = kInf, hi = -kInf;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u[i] >= 20.0) {
      const double v = F[i] + 1.0 / std::sqrt(u[i]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  EXPECT_LT(hi / lo - 1.0, 0.01);
  EXPECT_NEAR(lo / kFinf, 1.0, 0.015);
}

TEST(DecayPrice, CombinesBothTerms) {
  const double a = 0.3, beta = 0.5, T = 1e-3, nu = 1.0, t = 4.0, Fu = 0.7;
  EXPECT_NEAR(decay_price(t, a, beta, T, nu, Fu), a * std::sqrt(nu) * T * (beta / 2.0 + Fu), 1e-16);
}
