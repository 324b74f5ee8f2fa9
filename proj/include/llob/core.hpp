#pragma once

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "llob/errors.hpp"
#include "llob/tridiag.hpp"

namespace llob {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Single-frequency latent book constants. nu == 0 is the linear limit: lambda must be
// 0 as well and the liquidity slope is carried explicitly in `slope`.
struct ModelParams {
  double D = 1.0;
  double nu = 1.0;
  double lambda = 1.0;
  double slope = 0.0;

  static ModelParams from_liquidity(double D, double nu, double L) {
    return {D, nu, L * std::sqrt(nu * D), 0.0};
  }
  static ModelParams linear_limit(double D, double L) { return {D, 0.0, 0.0, L}; }

  bool linear() const { return nu == 0.0; }
  double L() const { return linear() ? slope : lambda / std::sqrt(nu * D); }
  double J() const { return linear() ? D * slope : D * lambda / std::sqrt(nu * D); }
  double xi_c() const { return linear() ? kInf : std::sqrt(D / nu); }
  double Q_lin() const { return linear() ? kInf : J() / nu; }
  // |phi_st| far from the price
  double plateau() const { return linear() ? kInf : lambda / nu; }

  void validate() const {
    if (!(D > 0.0) || !std::isfinite(D)) throw input_error("D must be positive");
    if (linear()) {
      if (lambda != 0.0) throw input_error("nu = 0 requires lambda = 0");
      if (!(slope > 0.0)) throw input_error("nu = 0 requires a positive slope L");
      return;
    }
    if (!(nu > 0.0) || !std::isfinite(nu)) throw input_error("nu must be positive");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw input_error("lambda must be positive");
  }
};

// Uniform cell-centred grid.
struct Grid {
  double x_min = -1.0;
  double x_max = 1.0;
  std::size_t n_cells = 2;

  double dx() const { return (x_max - x_min) / static_cast<double>(n_cells); }
  double width() const { return x_max - x_min; }
  double x(std::size_t i) const { return x_min + (static_cast<double>(i) + 0.5) * dx(); }

  void validate() const {
    if (n_cells < 2) throw grid_error("grid needs at least two cells");
    if (!(x_min < 0.0 && 0.0 < x_max)) throw grid_error("grid must satisfy x_min < 0 < x_max");
  }
};

// Length scale a run of duration `horizon` explores: the book linearity scale,
// or the diffusion length if that is shorter.
inline double run_scale(const ModelParams& p, double horizon) {
  return std::min(p.xi_c(), std::sqrt(p.D * horizon));
}

inline void check_width(const ModelParams& p, const Grid& g, double horizon) {
  const double ell = run_scale(p, horizon);
  if (!std::isfinite(ell)) throw grid_error("linear-limit book needs a finite horizon");
  if (g.width() < 8.0 * ell)
    throw grid_error("grid too narrow: width " + std::to_string(g.width()) + " < " +
                     std::to_string(8.0 * ell));
}

struct BookState {
  std::vector<double> phi;
  double t = 0.0;
  double price = 0.0;
};

struct MetaOrderSpec {
  std::function<double(double)> rate;
  double T = 0.0;
  std::function<double(double)> cumulative;  // optional exact integral of rate from 0

  static MetaOrderSpec constant(double m0, double T) {
    MetaOrderSpec o;
    o.T = T;
    o.rate = [m0, T](double t) { return (t >= 0.0 && t <= T) ? m0 : 0.0; };
    o.cumulative = [m0, T](double t) { return m0 * std::clamp(t, 0.0, T); };
    return o;
  }
  static MetaOrderSpec none() { return constant(0.0, 0.0); }

  MetaOrderSpec negated() const {
    MetaOrderSpec o;
    o.T = T;
    auto r = rate;
    o.rate = [r](double t) { return -r(t); };
    if (cumulative) {
      auto c = cumulative;
      o.cumulative = [c](double t) { return -c(t); };
    }
    return o;
  }

  // Volume executed in [t0, t1]
  double volume(double t0, double t1) const {
    if (cumulative) return cumulative(t1) - cumulative(t0);
    const double a = std::max(t0, 0.0), b = std::min(t1, T);
    if (b <= a) return 0.0;
    return (b - a) / 6.0 * (rate(a) + 4.0 * rate(0.5 * (a + b)) + rate(b));
  }
  double Q() const { return volume(0.0, T); }
};

// Stationary book around a price at the origin.
inline double phi_stationary(double xi, const ModelParams& p) {
  if (p.linear()) return -p.L() * xi;
  const double s = (xi > 0.0) - (xi < 0.0);
  return -p.plateau() * s * (1.0 - std::exp(-std::abs(xi) / p.xi_c()));
}

inline double green_value(double x, double t, const ModelParams& p) {
  if (!(t > 0.0)) throw std::domain_error("green_value needs t > 0");
  return std::exp(-p.nu * t) * std::exp(-x * x / (4.0 * p.D * t)) /
         std::sqrt(4.0 * std::numbers::pi * p.D * t);
}

// Cell average of lambda * sign(price - x) over cell i.
inline double deposition(const Grid& g, std::size_t i, double price, double lambda) {
  const double a = g.x_min + static_cast<double>(i) * g.dx();
  const double b = a + g.dx();
  const double c = std::clamp(price, a, b);
  return lambda * (2.0 * c - a - b) / g.dx();
}

// Linear split of a point mass at `price` between the two bracketing cell centres.
struct SourceWeights {
  std::size_t i = 0;
  double w_left = 0.0;
  double w_right = 0.0;
};

inline SourceWeights source_weights(const Grid& g, double price) {
  const double s = (price - g.x_min) / g.dx() - 0.5;
  const double last = static_cast<double>(g.n_cells - 1);
  if (s <= 0.0) return {0, 1.0, 0.0};
  if (s >= last) return {g.n_cells - 2, 0.0, 1.0};
  const double f = std::floor(s);
  const double r = s - f;
  return {static_cast<std::size_t>(f), 1.0 - r, r};
}

// Value at x of the piecewise-linear interpolant through cell centres.
inline double interpolate(const std::vector<double>& phi, const Grid& g, double x) {
  const SourceWeights w = source_weights(g, x);
  return w.w_left * phi[w.i] + w.w_right * phi[w.i + 1];
}

// Zero of f nearest x0 for a book-like f (positive on the bid side, so a positive
// value points to the right). Widens a bracket by doubling, trying the indicated side
// first and then the other one, and refines it with TOMS748.
template <class F>
double find_zero_near(F&& f, double x0, double step, double lo_lim, double hi_lim) {
  const double a = std::clamp(x0, lo_lim, hi_lim);
  const double fa = f(a);
  if (fa == 0.0) return a;
  const double dir = fa > 0.0 ? 1.0 : -1.0;
  auto refine = [&](double u, double fu, double v, double fv) {
    if (fv == 0.0) return v;
    boost::uintmax_t iters = 200;
    auto tol = [step](double p, double q) { return std::abs(p - q) <= 1e-12 * step; };
    const auto r = u < v ? boost::math::tools::toms748_solve(f, u, v, fu, fv, tol, iters)
                         : boost::math::tools::toms748_solve(f, v, u, fv, fu, tol, iters);
    return 0.5 * (r.first + r.second);
  };
  double near_x = a, near_f = fa, far_x = a, far_f = fa;  // last points on each side
  bool near_open = true, far_open = true;
  double d = step;
  for (int k = 0; k < 80 && (near_open || far_open); ++k, d *= 2.0) {
    for (const double side : {dir, -dir}) {
      bool& open = side == dir ? near_open : far_open;
      if (!open) continue;
      double& px = side == dir ? near_x : far_x;
      double& pf = side == dir ? near_f : far_f;
      const double b = std::clamp(a + side * d, lo_lim, hi_lim);
      const double fb = f(b);
      if (k == 0 && std::abs(fa) <= 1e-10 * std::abs(fb)) return a;  // x0 is a zero to rounding
      if (fb == 0.0 || (fb > 0.0) != (pf > 0.0)) return refine(px, pf, b, fb);
      px = b;
      pf = fb;
      if (b == lo_lim || b == hi_lim) open = false;
    }
  }
  throw no_root_error("book has no zero crossing inside the grid");
}

// Zero of the piecewise-linear interpolant through cell centres. Among several
// crossings the one closest to `previous` wins.
inline double find_price(const std::vector<double>& phi, const Grid& g, double previous = 0.0) {
  double best = std::numeric_limits<double>::quiet_NaN();
  double best_dist = kInf;
  const double dx = g.dx();
  for (std::size_t i = 0; i + 1 < phi.size(); ++i) {
    const double a = phi[i], b = phi[i + 1];
    double root;
    if (a == 0.0) {
      root = g.x(i);
    } else if ((a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0)) {
      root = g.x(i) + a / (a - b) * dx;
    } else {
      continue;
    }
    const double d = std::abs(root - previous);
    if (d < best_dist) {
      best_dist = d;
      best = root;
    }
  }
  if (!phi.empty() && phi.back() == 0.0) {
    const double root = g.x(phi.size() - 1);
    if (std::abs(root - previous) < best_dist) best = root;
  }
  if (std::isnan(best)) throw no_root_error("book has no sign change");
  return best;
}

inline double find_price(const BookState& s, const Grid& g) { return find_price(s.phi, g, s.price); }

enum class Boundary { far_field, reflecting };

struct StepOptions {
  double theta = 1.0;  // 1 backward Euler, 0.5 Crank-Nicolson
  Boundary boundary = Boundary::far_field;
};

// Discrete equilibrium of the book for a price at `price`: solves A phi + s = 0 with
// far-field ghost values taken from the analytic book.
inline std::vector<double> equilibrium_book(const ModelParams& p, const Grid& g, double price = 0.0) {
  const std::size_t n = g.n_cells;
  std::vector<double> phi(n);
  if (p.linear()) {
    for (std::size_t i = 0; i < n; ++i) phi[i] = -p.L() * (g.x(i) - price);
    return phi;
  }
  const double dx = g.dx(), k = p.D / (dx * dx);
  std::vector<double> a(n, k), b(n, -2.0 * k - p.nu), c(n, k);
  for (std::size_t i = 0; i < n; ++i) phi[i] = -deposition(g, i, price, p.lambda);
  phi[0] -= k * phi_stationary(g.x_min - 0.5 * dx - price, p);
  phi[n - 1] -= k * phi_stationary(g.x_max + 0.5 * dx - price, p);
  solve_tridiagonal(a, b, c, phi);
  return phi;
}

// Stationary book centred at 0. `horizon` bounds the region a run explores.
inline BookState stationary_book(const ModelParams& p, const Grid& g, double horizon = kInf) {
  p.validate();
  g.validate();
  check_width(p, g, horizon);
  BookState s;
  s.phi = equilibrium_book(p, g, 0.0);
  s.t = 0.0;
  s.price = 0.0;
  return s;
}

// Time stepper in delta form:
//   phi += (I - theta dt A)^{-1} [dt (A phi + s) + q e / dx]
// with A = D d2/dx2 - nu, s the deposition term and q the volume dropped at the price
// during the step. Exact discrete equilibria are fixed points for every dt.
class Stepper {
 public:
  Stepper(const ModelParams& p, const Grid& g, StepOptions opt = {}) : p_(p), g_(g), opt_(opt) {
    p_.validate();
    g_.validate();
    if (!(opt_.theta >= 0.5 && opt_.theta <= 1.0)) throw input_error("theta must be in [0.5, 1]");
    ghost_left_ = phi_stationary(g_.x_min - 0.5 * g_.dx(), p_);
    ghost_right_ = phi_stationary(g_.x_max + 0.5 * g_.dx(), p_);
    const double edge = std::max(std::abs(g_.x_min), std::abs(g_.x_max));
    limit_ = 1e6 * (p_.linear() ? p_.L() * edge : p_.plateau());
  }

  const Grid& grid() const { return g_; }
  const ModelParams& params() const { return p_; }
  const StepOptions& options() const { return opt_; }

  void set_ghosts(double left, double right) {
    ghost_left_ = left;
    ghost_right_ = right;
  }

  // Moves the window by `cells` (positive: to the right), filling new cells with
  // the given values and resetting the ghosts to them.
  void shift(long cells, std::vector<double>& phi, double fill_left, double fill_right) {
    const long n = static_cast<long>(phi.size());
    if (cells == 0) return;
    std::vector<double> out(phi.size());
    for (long i = 0; i < n; ++i) {
      const long src = i + cells;
      out[i] = src < 0 ? fill_left : (src >= n ? fill_right : phi[src]);
    }
    phi.swap(out);
    const double dxs = static_cast<double>(cells) * g_.dx();
    g_.x_min += dxs;
    g_.x_max += dxs;
    set_ghosts(fill_left, fill_right);
  }

  // out = A phi + s(price)
  void apply(const std::vector<double>& phi, double price, std::vector<double>& out) const {
    const std::size_t n = phi.size();
    const double dx = g_.dx(), k = p_.D / (dx * dx);
    out.resize(n);
    const bool refl = opt_.boundary == Boundary::reflecting;
    for (std::size_t i = 0; i < n; ++i) {
      const double l = i > 0 ? phi[i - 1] : (refl ? phi[0] : ghost_left_);
      const double r = i + 1 < n ? phi[i + 1] : (refl ? phi[n - 1] : ghost_right_);
      out[i] = k * (l - 2.0 * phi[i] + r) - p_.nu * phi[i];
      if (p_.lambda != 0.0) out[i] += deposition(g_, i, price, p_.lambda);
    }
  }

  // Free evolution (deposition, no meta-order volume) plus volume q at `price`.
  void advance(std::vector<double>& phi, double price, double q, double dt) {
    apply(phi, price, work_);
    for (double& v : work_) v *= dt;
    if (q != 0.0) add_point(work_, price, q);
    factor(dt).solve(work_);
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] += work_[i];
  }

  // Change of phi after one step per unit volume dropped at `price`.
  void unit_response(double price, double dt, std::vector<double>& g) {
    g.assign(g_.n_cells, 0.0);
    add_point(g, price, 1.0);
    factor(dt).solve(g);
  }

  // Change of phi after one step per unit volume dropped at the centre of cell j.
  void unit_column(std::size_t j, double dt, std::vector<double>& g) {
    g.assign(g_.n_cells, 0.0);
    g[j] = 1.0 / g_.dx();
    factor(dt).solve(g);
  }

  void check(const std::vector<double>& phi) const {
    for (double v : phi)
      if (!std::isfinite(v) || std::abs(v) > limit_)
        throw instability_error("book blew up: dt too large or grid too coarse");
  }

  // One step of a single book. Deposition and the executed volume q sit at the
  // new price c, found so that the updated book crosses zero exactly at c.
  void step(BookState& s, double q, double dt) {
    auto residual = [&](double c) {
      trial_ = s.phi;
      advance(trial_, c, q, dt);
      return interpolate(trial_, g_, c);
    };
    const double c = find_zero_near(residual, s.price, g_.dx(), g_.x_min + g_.dx(), g_.x_max - g_.dx());
    advance(s.phi, c, q, dt);
    check(s.phi);
    s.t += dt;
    s.price = c;
  }


 private:
  void add_point(std::vector<double>& v, double price, double q) const {
    const SourceWeights w = source_weights(g_, price);
    v[w.i] += q * w.w_left / g_.dx();
    v[w.i + 1] += q * w.w_right / g_.dx();
  }

  const TridiagFactor& factor(double dt) {
    if (dt != factor_dt_ || factor_.size() != g_.n_cells) {
      const double dx = g_.dx(), k = p_.D / (dx * dx), th = opt_.theta * dt;
      const double diag = 1.0 + th * (2.0 * k + p_.nu);
      const double edge = opt_.boundary == Boundary::reflecting ? 1.0 + th * (k + p_.nu) : diag;
      factor_ = TridiagFactor(g_.n_cells, -th * k, diag, edge, edge);
      factor_dt_ = dt;
    }
    return factor_;
  }

  ModelParams p_;
  Grid g_;
  StepOptions opt_;
  double ghost_left_ = 0.0, ghost_right_ = 0.0;
  double limit_ = kInf;
  double factor_dt_ = -1.0;
  TridiagFactor factor_;
  std::vector<double> work_, trial_;
};

inline double book_mass(const std::vector<double>& phi, const Grid& g) {
  double m = 0.0;
  for (double v : phi) m += v;
  return m * g.dx();
}

struct TrajectoryPoint {
  double t = 0.0;
  double x = 0.0;
  double phi_min = 0.0;
  double phi_max = 0.0;
  double mass = 0.0;
};

using Trajectory = std::vector<TrajectoryPoint>;

struct SimOptions {
  StepOptions step;
  // After execution dt is multiplied by dt_growth each step, up to dt_max.
  double dt_growth = 1.0;
  double dt_max = kInf;
  std::size_t stride = 1;
  std::optional<std::vector<double>> initial_phi;  // default: stationary book
  double initial_price = 0.0;
};

inline TrajectoryPoint snapshot(const BookState& s, const Grid& g) {
  const auto [lo, hi] = std::minmax_element(s.phi.begin(), s.phi.end());
  return {s.t, s.price, *lo, *hi, book_mass(s.phi, g)};
}

// Runs the book from its stationary state through execution of `order` and
// relaxation until t_end. The first point is t = 0; t = T is always recorded.
inline Trajectory simulate_metaorder(const ModelParams& p, const MetaOrderSpec& order, const Grid& g,
                                     double dt, double t_end, const SimOptions& opt = {}) {
  if (!(dt > 0.0)) throw input_error("dt must be positive");
  if (t_end < order.T) throw input_error("t_end must be at least T");
  BookState s = stationary_book(p, g, t_end);
  if (opt.initial_phi) {
    if (opt.initial_phi->size() != g.n_cells) throw input_error("initial book has wrong size");
    s.phi = *opt.initial_phi;
    s.price = find_price(s.phi, g, opt.initial_price);
  }
  Stepper stepper(p, g, opt.step);
  const double margin = 4.0 * run_scale(p, t_end);
  Trajectory out;
  out.push_back(snapshot(s, g));
  std::size_t k = 0;
  double h = dt;
  while (s.t < t_end * (1.0 - 1e-14)) {
    const bool executing = s.t < order.T;
    double step = executing ? std::min(h, order.T - s.t) : std::min(h, t_end - s.t);
    if (executing && order.T - s.t - step < 1e-9 * dt) step = order.T - s.t;
    const double q = order.volume(s.t, s.t + step);
    stepper.step(s, q, step);
    if (executing && std::abs(s.t - order.T) < 1e-12 * std::max(1.0, order.T)) s.t = order.T;
    if (s.price - g.x_min < margin || g.x_max - s.price < margin)
      throw grid_error("price came within 4 run scales of the grid edge");
    ++k;
    const bool at_T = executing && s.t == order.T;
    if (k % opt.stride == 0 || at_T || s.t >= t_end * (1.0 - 1e-14)) out.push_back(snapshot(s, g));
    if (s.t >= order.T) h = std::min(h * opt.dt_growth, opt.dt_max);
  }
  return out;
}

}  // namespace llob
