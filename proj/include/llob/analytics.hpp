#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "llob/core.hpp"

namespace llob {

enum class Participation { small, large, intermediate };
enum class Duration { fast, slow, intermediate };
enum class Volume { small, large, intermediate };

struct Regime {
  Participation participation = Participation::intermediate;
  Duration duration = Duration::intermediate;
  Volume volume = Volume::intermediate;

  bool intermediate() const {
    return participation == Participation::intermediate || duration == Duration::intermediate ||
           volume == Volume::intermediate;
  }
  bool feasible() const {
    if (participation == Participation::small && duration == Duration::fast && volume == Volume::large)
      return false;
    if (participation == Participation::large && duration == Duration::slow && volume == Volume::small)
      return false;
    return true;
  }
  bool operator==(const Regime&) const = default;

  std::string name() const {
    auto p = participation == Participation::small ? "small" : participation == Participation::large ? "large" : "intermediate";
    auto d = duration == Duration::fast ? "fast" : duration == Duration::slow ? "slow" : "intermediate";
    auto v = volume == Volume::small ? "small" : volume == Volume::large ? "large" : "intermediate";
    return std::string(p) + "-participation/" + d + "/" + v + "-volume";
  }
};

inline Regime make_regime(Participation p, Duration d, Volume v) {
  Regime r{p, d, v};
  if (!r.feasible()) throw regime_error("infeasible regime " + r.name());
  return r;
}

struct RegimeThresholds {
  double participation_lo = 0.2, participation_hi = 5.0;
  double duration_lo = 0.1, duration_hi = 10.0;
  double volume_lo = 0.1, volume_hi = 10.0;
};

inline Regime classify_regime(double m0, double T, const ModelParams& p, const RegimeThresholds& th = {}) {
  Regime r;
  const double part = m0 / p.J(), dur = p.nu * T, vol = m0 * T / p.Q_lin();
  r.participation = part < th.participation_lo ? Participation::small
                    : part > th.participation_hi ? Participation::large
                                                 : Participation::intermediate;
  r.duration = dur < th.duration_lo ? Duration::fast : dur > th.duration_hi ? Duration::slow : Duration::intermediate;
  r.volume = vol < th.volume_lo ? Volume::small : vol > th.volume_hi ? Volume::large : Volume::intermediate;
  // Q/Q_lin = (m0/J)(nu T): two small ratios force a small volume, two large ones a large one.
  if (r.participation == Participation::small && r.duration == Duration::fast) r.volume = Volume::small;
  if (r.participation == Participation::large && r.duration == Duration::slow) r.volume = Volume::large;
  return r;
}

namespace detail {
inline void require_definite(const Regime& r) {
  if (r.intermediate()) throw regime_error("regime is at a crossover: " + r.name());
  if (!r.feasible()) throw regime_error("infeasible regime " + r.name());
}
inline bool linear_growth(const Regime& r) { return r.duration == Duration::slow || r.volume == Volume::large; }
}  // namespace detail

// Prefactor alpha of the leading trajectory alpha * sqrt(t) (fast, small volume).
inline double trajectory_alpha(double m0, const ModelParams& p, Participation part) {
  if (part == Participation::small) return m0 / (p.L() * std::sqrt(std::numbers::pi * p.D));
  if (part == Participation::large) return std::sqrt(2.0 * m0 / p.L());
  throw regime_error("participation must be small or large");
}

inline double analytic_price(double t, double m0, const ModelParams& p, const Regime& r) {
  detail::require_definite(r);
  if (detail::linear_growth(r)) return m0 * p.nu * t / p.lambda;
  return trajectory_alpha(m0, p, r.participation) * std::sqrt(t);
}

// k in the small-participation correction -k t
inline double correction_k() { return std::sqrt(4.0 / std::numbers::pi) - std::sqrt(std::numbers::pi / 4.0); }

inline double first_order_correction(double t, double m0, const ModelParams& p, const Regime& r) {
  detail::require_definite(r);
  if (detail::linear_growth(r)) throw regime_error("no first-order correction in " + r.name());
  const double a = trajectory_alpha(m0, p, r.participation);
  const double z1 = r.participation == Participation::small ? -correction_k() * t
                                                            : -(t / 3.0) * std::sqrt(p.J() / (2.0 * m0));
  return a * std::sqrt(p.nu) * z1;
}

inline double permanent_impact(double Q, const ModelParams& p) {
  if (Q < 0.0) throw input_error("Q must be nonnegative");
  return 0.5 * p.xi_c() * Q / p.Q_lin();
}

inline double regime_beta(double m0, const ModelParams& p, Participation part) {
  if (part == Participation::large) return 0.5 * std::sqrt(m0 / (2.0 * std::numbers::pi * p.J()));
  if (part == Participation::small) return 0.5;
  throw regime_error("participation must be small or large");
}

// The source integral int_0^u (sqrt v - sqrt u)/sqrt(u v (u - v)) e^{v-u} dv, written
// with sqrt(v/u) = 1 - y^2 so the integrand is smooth on [0, 1].
inline double decay_source_integral(double u) {
  if (u <= 0.0) return 0.0;
  auto f = [u](double y) {
    const double y2 = y * y;
    return y2 * std::exp(-u * y2 * (2.0 - y2)) / std::sqrt(2.0 - y2);
  };
  return -4.0 * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 20, 1e-13);
}

namespace detail {
// int over [u - hi, u - lo] of e^{v-u}/sqrt(u-v) dv, i.e. sqrt(pi)(erf sqrt(hi) - erf sqrt(lo))
inline double decay_weight(double lo, double hi) {
  return std::sqrt(std::numbers::pi) * (std::erf(std::sqrt(hi)) - std::erf(std::sqrt(lo)));
}
}  // namespace detail

// Residual of the post-execution integral equation at node i for piecewise-constant F
// on cells (u_{k-1}, u_k], u_0 = 0.
inline double decay_residual(const std::vector<double>& u, const std::vector<double>& F, double beta,
                             std::size_t i) {
  const double ui = u[i];
  double r = std::sqrt(std::numbers::pi) * std::exp(-ui) * F[i] + beta * decay_source_integral(ui);
  for (std::size_t k = 0; k < i; ++k) {
    const double a = k == 0 ? 0.0 : u[k - 1];
    r += (F[i] - F[k]) * detail::decay_weight(ui - u[k], ui - a);
  }
  return r;
}

// Post-execution profile F(u), u = nu t, by marching product integration.
inline std::vector<double> decay_profile(const std::vector<double>& u, double beta) {
  if (u.empty()) return {};
  if (!(u[0] > 0.0)) throw input_error("u grid must start above 0");
  for (std::size_t i = 1; i < u.size(); ++i)
    if (!(u[i] > u[i - 1])) throw input_error("u grid must be increasing");
  std::vector<double> F(u.size(), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double ui = u[i];
    double coef = std::sqrt(std::numbers::pi) * std::exp(-ui);
    double rhs = -beta * decay_source_integral(ui);
    for (std::size_t k = 0; k < i; ++k) {
      const double a = k == 0 ? 0.0 : u[k - 1];
      const double w = detail::decay_weight(ui - u[k], ui - a);
      coef += w;
      rhs += w * F[k];
    }
    F[i] = rhs / coef;
    const double res = decay_residual(u, F, beta, i);
    if (std::abs(res) > 1e-10 * std::max(1.0, std::abs(rhs)))
      throw numerical_error("decay_profile: step residual too large");
  }
  return F;
}

// Leading post-execution price in the fast, small-volume regimes: the decaying
// zeroth order term plus the first-order relaxation T sqrt(nu) F(nu t).
inline double decay_price(double t, double alpha, double beta, double T, double nu, double F_of_u) {
  const double u = nu * t;
  return alpha * std::sqrt(nu) * T * (beta / std::sqrt(u) + F_of_u);
}

}  // namespace llob
