#pragma once

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <vector>

#include "llob/core.hpp"
#include "llob/laplace.hpp"

namespace llob {

// Slow and fast liquidity providers sharing one price. The slow book may be the
// linear limit (nu_s = 0).
struct DualParams {
  ModelParams slow;
  ModelParams fast;
  double m0 = 1.0;

  double L_s() const { return slow.L(); }
  double L_f() const { return fast.L(); }
  double J_s() const { return slow.J(); }
  double J_f() const { return fast.J(); }
  double J() const { return J_s() + J_f(); }
  double D() const { return fast.D; }
  double t_star() const { return J_f() * J_f() / (2.0 * fast.nu * J_s() * m0); }
  double t_dagger() const { return m0 / (std::numbers::pi * J_s()) * t_star(); }

  void validate() const {
    slow.validate();
    fast.validate();
    if (fast.linear()) throw input_error("fast book needs nu_f > 0");
    if (slow.D != fast.D) throw input_error("slow and fast books must share D");
    if (!(m0 > 0.0)) throw input_error("m0 must be positive");
  }
};

// nu_s T << 1, nu_f T >> 1 and L_f >> L_s, each with a factor-10 margin.
inline void check_timescales(const DualParams& d, double T, bool unsafe = false) {
  d.validate();
  if (unsafe) return;
  if (d.slow.nu * T > 0.1) throw regime_error("dual: need nu_s T <= 0.1");
  if (d.fast.nu * T < 10.0) throw regime_error("dual: need nu_f T >= 10");
  if (d.L_f() < 10.0 * d.L_s()) throw regime_error("dual: need L_f >= 10 L_s");
}

// J_s << m0 << J
inline void check_rate(const DualParams& d, bool unsafe = false) {
  d.validate();
  if (unsafe) return;
  if (d.m0 < 10.0 * d.J_s() || d.m0 > 0.1 * d.J_f()) throw regime_error("dual: need 10 J_s <= m0 <= 0.1 J_f");
}

struct RateSplit {
  double m_s = 0.0;
  double m_f = 0.0;
};

inline RateSplit split_rates(double t, const DualParams& d, bool unsafe = false) {
  check_rate(d, unsafe);
  if (t < 0.0) throw std::domain_error("split_rates needs t >= 0");
  RateSplit r;
  r.m_f = d.m0 / std::sqrt(1.0 + t / d.t_star());
  r.m_s = d.m0 - r.m_f;
  return r;
}

inline double price_trajectory(double t, const DualParams& d, bool unsafe = false) {
  check_rate(d, unsafe);
  if (t < 0.0) throw std::domain_error("price_trajectory needs t >= 0");
  return d.fast.lambda / (d.L_s() * d.fast.nu) * (std::sqrt(1.0 + t / d.t_star()) - 1.0);
}

// Daily volume fraction Q/V_d above which impact is square-root.
inline double sqrt_regime_threshold(double nu_f, double T_d, double J, double J_s) {
  if (!(nu_f > 0.0 && T_d > 0.0 && J > 0.0 && J_s > 0.0)) throw input_error("threshold inputs must be positive");
  return J / (nu_f * T_d * J_s);
}

struct DecayCoefficients {
  double B = 0.0;
  double C = 0.0;
  double f_T = 0.0;
};

// x_t = B / sqrt(t) long after execution of duration T.
inline DecayCoefficients decay_coefficients(double T, const DualParams& d, bool unsafe = false) {
  check_rate(d, unsafe);
  check_timescales(d, T, unsafe);
  const double ts = d.t_star(), D = d.D();
  if (!unsafe && T < 10.0 * ts && T > 0.1 * ts) throw regime_error("decay needs t* << T or t* >> T");
  DecayCoefficients c;
  c.f_T = T >= ts ? T : T * T / (3.0 * ts);
  const double denom = 1.0 - d.fast.lambda / (d.fast.nu * d.L_s() * std::sqrt(std::numbers::pi * D * T));
  if (denom <= 0.0) throw numerical_error("decay system is singular for these parameters");
  c.B = d.m0 * c.f_T / std::sqrt(4.0 * std::numbers::pi * D) / (d.L_s() * denom);
  c.C = d.fast.lambda * c.B / d.fast.nu;
  return c;
}

inline double decay_trajectory(double t, double T, const DualParams& d, bool unsafe = false) {
  if (!(t > T)) throw std::domain_error("decay_trajectory needs t > T");
  return decay_coefficients(T, d, unsafe).B / std::sqrt(t);
}

// --- very small participation: m0 << J_s, J_f ---

inline void check_linear_regime(const DualParams& d, bool unsafe) {
  d.validate();
  if (!unsafe && d.m0 > 0.1 * std::min(d.J_s(), d.J_f())) throw regime_error("linear regime needs m0 <= 0.1 min(J_s, J_f)");
}

struct Inversion {
  double value = 0.0;
  double talbot = 0.0;
  double stehfest = 0.0;
};

namespace detail {
template <class Fc, class Fm>
Inversion invert_both(Fc&& fc, Fm&& fm, double t) {
  Inversion r;
  r.talbot = invert_talbot(fc, t);
  r.stehfest = invert_stehfest(fm, t);
  r.value = r.talbot;
  const double scale = std::max(std::abs(r.talbot), std::abs(r.stehfest));
  if (std::abs(r.talbot - r.stehfest) > 1e-6 * scale) throw numerical_error("Laplace inversions disagree");
  return r;
}
}  // namespace detail

// m_s(t) from its transform m0 / (p (1 + sqrt(p t_dagger))).
inline Inversion linear_regime_slow_rate(double t, const DualParams& d, bool unsafe = false) {
  check_linear_regime(d, unsafe);
  const double td = d.t_dagger(), m0 = d.m0;
  auto fc = [=](std::complex<double> p) { return m0 / (p * (1.0 + std::sqrt(p * td))); };
  auto fm = [=](mp_real p) { return mp_real(m0) / (p * (1 + boost::multiprecision::sqrt(p * mp_real(td)))); };
  return detail::invert_both(fc, fm, t);
}

// x_t = (nu_f / lambda_f) int_0^t m_f, inverted from (nu_f/lambda_f) m0 sqrt(t_dagger) / (p^{3/2} (1 + sqrt(p t_dagger))).
inline Inversion linear_regime_price(double t, const DualParams& d, bool unsafe = false) {
  check_linear_regime(d, unsafe);
  const double td = d.t_dagger(), k = d.fast.nu / d.fast.lambda * d.m0 * std::sqrt(td);
  auto fc = [=](std::complex<double> p) {
    const auto s = std::sqrt(p);
    return k / (p * s * (1.0 + s * std::sqrt(td)));
  };
  auto fm = [=](mp_real p) {
    const mp_real s = boost::multiprecision::sqrt(p);
    return mp_real(k) / (p * s * (1 + s * boost::multiprecision::sqrt(mp_real(td))));
  };
  return detail::invert_both(fc, fm, t);
}

// Asymptotic price forms of the linear regime.
inline double linear_regime_price_short(double t, const DualParams& d) { return d.fast.nu / d.fast.lambda * d.m0 * t; }
inline double linear_regime_price_long(double t, const DualParams& d) {
  return d.fast.nu / d.fast.lambda * 2.0 * d.m0 * std::sqrt(t * d.t_dagger() / std::numbers::pi);
}

// --- two-book simulation ---

struct DualSimOptions {
  Grid slow_grid;
  double fast_dx = 0.125;       // in units of the fast xi_c
  std::size_t fast_cells = 256; // moving window around the price
  double dt_min = 0.05;         // in units of 1/nu_f
  double dt_rel = 0.005;        // dt = max(dt_min, dt_rel t)
  double dt_max = kInf;
  double theta = 1.0;
  std::size_t stride = 1;
};

struct DualPoint {
  double t = 0.0;
  double x = 0.0;
  double m_s = 0.0;
  double m_f = 0.0;
};

// Fast book in the frame moving with the price, xi = x - x_t. The price sits on
// the face between cells n/2 - 1 and n/2, so the discrete book is exactly
// antisymmetric at rest and the motion enters as the advection term v dpsi/dxi.
class ComovingBook {
 public:
  ComovingBook(const ModelParams& p, double dx, std::size_t cells) : p_(p), dx_(dx), n_(cells) {
    if (cells < 8 || cells % 2) throw grid_error("co-moving book needs an even number of cells >= 8");
    if (!(dx > 0.0)) throw grid_error("co-moving book needs dx > 0");
    const double half = 0.5 * dx * static_cast<double>(cells);
    psi_ = equilibrium_book(p, Grid{-half, half, cells});
  }

  // Book after a step of length h with price velocity v, without meta-order volume
  // (base) and per unit volume executed at the price (unit).
  void trial(double v, double h, std::vector<double>& base, std::vector<double>& unit) const {
    const double k = p_.D / (dx_ * dx_), adv = v / (2.0 * dx_), plateau = p_.plateau();
    std::vector<double> lo(n_, -h * (k - adv)), di(n_, 1.0 + h * (2.0 * k + p_.nu)), up(n_, -h * (k + adv));
    base.resize(n_);
    const std::size_t mid = n_ / 2;
    for (std::size_t i = 0; i < n_; ++i) base[i] = psi_[i] + h * (i < mid ? p_.lambda : -p_.lambda);
    base[0] += h * (k - adv) * plateau;
    base[n_ - 1] -= h * (k + adv) * plateau;
    unit.assign(n_, 0.0);
    unit[mid - 1] = unit[mid] = 0.5 / dx_;
    solve_tridiagonal(lo, di, up, base);
    solve_tridiagonal(lo, di, up, unit);
  }

  static double at_price(const std::vector<double>& v) { return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]); }

  void accept(const std::vector<double>& base, const std::vector<double>& unit, double q) {
    for (std::size_t i = 0; i < n_; ++i) psi_[i] = base[i] + q * unit[i];
    for (double v : psi_)
      if (!std::isfinite(v) || std::abs(v) > 1e6 * p_.plateau()) throw instability_error("fast book blew up");
  }

  const std::vector<double>& psi() const { return psi_; }

 private:
  ModelParams p_;
  double dx_;
  std::size_t n_;
  std::vector<double> psi_;
};

// Single-book meta-order run in the co-moving frame (nu > 0). The price is never
// pinned to the grid, so sub-cell impacts relax without drifting toward cell faces.
// Each step solves for the price c that keeps the zero on the central face.
inline Trajectory simulate_metaorder_comoving(const ModelParams& p, const MetaOrderSpec& order, double dx,
                                              std::size_t cells, double dt, double t_end,
                                              const SimOptions& opt = {}) {
  p.validate();
  if (p.linear()) throw input_error("the co-moving book needs nu > 0");
  if (!(dt > 0.0)) throw input_error("dt must be positive");
  if (t_end < order.T) throw input_error("t_end must be at least T");
  if (0.5 * dx * static_cast<double>(cells) < 8.0 * p.xi_c()) throw grid_error("co-moving frame narrower than 8 xi_c on each side");
  ComovingBook book(p, dx, cells);
  std::vector<double> base, unit;
  auto point = [&](double t, double x) {
    const auto& psi = book.psi();
    const auto [lo, hi] = std::minmax_element(psi.begin(), psi.end());
    double mass = 0.0;
    for (double v : psi) mass += v * dx;
    return TrajectoryPoint{t, x, *lo, *hi, mass};
  };
  double t = 0.0, x = 0.0, h = dt;
  Trajectory out{point(0.0, 0.0)};
  for (std::size_t k = 1; t < t_end * (1.0 - 1e-14); ++k) {
    const bool executing = t < order.T;
    double step = executing ? std::min(h, order.T - t) : std::min(h, t_end - t);
    if (executing && order.T - t - step < 1e-9 * dt) step = order.T - t;
    const double q = order.volume(t, t + step);
    auto residual = [&](double c) {
      book.trial((c - x) / step, step, base, unit);
      return ComovingBook::at_price(base) + q * ComovingBook::at_price(unit);
    };
    const double c = find_zero_near(residual, x, dx, -kInf, kInf);
    residual(c);
    book.accept(base, unit, q);
    t += step;
    x = c;
    if (executing && std::abs(t - order.T) < 1e-12 * std::max(1.0, order.T)) t = order.T;
    const bool at_T = executing && t == order.T;
    if (k % opt.stride == 0 || at_T || t >= t_end * (1.0 - 1e-14)) out.push_back(point(t, x));
    if (t >= order.T) h = std::min(h * opt.dt_growth, opt.dt_max);
  }
  return out;
}

// Integrates both books with the meta-order split so that they keep a common price:
// each step finds the new price c and the volumes q_s + q_f = m0 dt (0 after T) that
// put both zeros at c. The fast book lives in the co-moving frame.
inline std::vector<DualPoint> simulate_dual(const DualParams& d, double T, double t_end, const DualSimOptions& opt) {
  d.validate();
  if (t_end < T) throw input_error("t_end must be at least T");
  const double fdx = opt.fast_dx * d.fast.xi_c();
  if (0.5 * opt.fast_cells * opt.fast_dx < 8.0) throw grid_error("fast frame narrower than 8 xi_c on each side");
  check_width(d.slow, opt.slow_grid, t_end);
  Stepper slow(d.slow, opt.slow_grid, StepOptions{opt.theta, Boundary::far_field});
  ComovingBook fast(d.fast, fdx, opt.fast_cells);
  std::vector<double> ps = equilibrium_book(d.slow, opt.slow_grid);
  std::vector<double> gs, ps0, fb, fu;
  double t = 0.0, x = 0.0;
  std::vector<DualPoint> out{{0.0, 0.0, 0.0, d.m0}};
  const double dt_min = opt.dt_min / d.fast.nu;
  const double margin = 4.0 * run_scale(d.slow, t_end);
  const Grid& sg = opt.slow_grid;
  std::size_t k = 0;
  while (t < t_end * (1.0 - 1e-14)) {
    double h = std::min(std::max(dt_min, opt.dt_rel * t), opt.dt_max);
    if (t < T) h = std::min(h, T - t);
    else h = std::min(h, t_end - t);
    if (t < T && T - t - h < 1e-9 * dt_min) h = T - t;
    const double Q = t < T ? d.m0 * h : 0.0;
    double qf = 0.0;
    // with no slow deposition the slow free step does not depend on c, and its unit
    // response is a mix of two columns of the step matrix
    const bool slow_free = d.slow.lambda == 0.0;
    std::map<std::size_t, std::vector<double>> cols;
    auto column = [&](std::size_t j) -> const std::vector<double>& {
      auto it = cols.find(j);
      if (it == cols.end()) {
        std::vector<double> e;
        slow.unit_column(j, h, e);
        it = cols.emplace(j, std::move(e)).first;
      }
      return it->second;
    };
    if (slow_free) {
      ps0 = ps;
      slow.advance(ps0, x, 0.0, h);
    }
    auto residual = [&](double c) {
      fast.trial((c - x) / h, h, fb, fu);
      qf = -ComovingBook::at_price(fb) / ComovingBook::at_price(fu);
      double g_at;
      if (slow_free) {
        const SourceWeights w = source_weights(sg, c);
        const auto &a = column(w.i), &b = column(w.i + 1);
        g_at = w.w_left * (w.w_left * a[w.i] + w.w_right * b[w.i]) +
               w.w_right * (w.w_left * a[w.i + 1] + w.w_right * b[w.i + 1]);
      } else {
        ps0 = ps;
        slow.advance(ps0, c, 0.0, h);
        slow.unit_response(c, h, gs);
        g_at = interpolate(gs, sg, c);
      }
      return interpolate(ps0, sg, c) + (Q - qf) * g_at;
    };
    const double c = find_zero_near(residual, x, std::min(fdx, sg.dx()), sg.x_min + sg.dx(), sg.x_max - sg.dx());
    residual(c);
    if (slow_free) slow.unit_response(c, h, gs);
    const double qs = Q - qf;
    for (std::size_t i = 0; i < ps.size(); ++i) ps[i] = ps0[i] + qs * gs[i];
    slow.check(ps);
    fast.accept(fb, fu, qf);
    x = c;
    t += h;
    if (t < T && std::abs(t - T) < 1e-12 * T) t = T;
    if (x - sg.x_min < margin || sg.x_max - x < margin)
      throw grid_error("price came within 4 run scales of the slow grid edge");
    ++k;
    if (k % opt.stride == 0 || t >= t_end * (1.0 - 1e-14) || (Q != 0.0 && t == T))
      out.push_back({t, x, qs / h, qf / h});
  }
  return out;
}

}  // namespace llob
