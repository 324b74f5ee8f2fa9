#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "llob/analytics.hpp"
#include "llob/config.hpp"
#include "llob/core.hpp"
#include "llob/dual.hpp"
#include "llob/fit.hpp"
#include "llob/multi.hpp"
#include "llob/orderflow.hpp"

namespace llob {

// One acceptance band: pass iff lo <= value <= hi.
struct Check {
  std::string label;
  std::string quantity;
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool pass = false;
};

struct Report {
  std::string experiment;
  std::vector<Check> checks;
  std::vector<std::string> notes;

  void band(const std::string& label, const std::string& quantity, double value, double lo, double hi) {
    checks.push_back({label, quantity, value, lo, hi, std::isfinite(value) && value >= lo && value <= hi});
  }
  void note(const std::string& s) { notes.push_back(s); }
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
};

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string format_report(const Report& r) {
  std::ostringstream o;
  o << "experiment " << r.experiment << '\n';
  for (const auto& c : r.checks)
    o << (c.pass ? "PASS " : "FAIL ") << c.label << "  " << c.quantity << " = " << format_number(c.value) << "  band ["
      << format_number(c.lo) << ", " << format_number(c.hi) << "]\n";
  for (const auto& n : r.notes) o << "note " << n << '\n';
  o << (r.passed() ? "all bands pass" : "some bands fail") << '\n';
  return o.str();
}

// Writes <experiment>_<quantity>.csv into a directory; a default-constructed sink
// discards everything.
class Sink {
 public:
  Sink() = default;
  Sink(std::filesystem::path dir, std::string experiment) : dir_(std::move(dir)), name_(std::move(experiment)) {
    std::filesystem::create_directories(dir_);
  }

  bool active() const { return !dir_.empty(); }

  void csv(const std::string& quantity, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& cols) const {
    if (!active()) return;
    if (header.size() != cols.size()) throw std::logic_error("csv: header and columns disagree");
    std::ofstream f(dir_ / (name_ + "_" + quantity + ".csv"), std::ios::binary);
    for (std::size_t c = 0; c < header.size(); ++c) f << (c ? "," : "") << header[c];
    f << '\n';
    const std::size_t rows = cols.empty() ? 0 : cols[0].size();
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t c = 0; c < cols.size(); ++c) f << (c ? "," : "") << format_number(cols[c].at(i));
      f << '\n';
    }
  }

  void text(const std::string& file, const std::string& body) const {
    if (!active()) return;
    std::ofstream f(dir_ / file, std::ios::binary);
    f << body;
  }

 private:
  std::filesystem::path dir_;
  std::string name_;
};

struct Experiment {
  std::string name;
  std::string description;
  std::string target;
  std::function<void(Config&)> declare;
  std::function<Report(const Config&, const Sink&)> run;
};

namespace detail {

// Covers [lo, hi] (lo < 0 < hi) with cells of size dx and a cell face at 0, so a
// book centred at 0 is exactly antisymmetric about its price.
inline Grid span_grid(double lo, double hi, double dx) {
  const double left = std::ceil(-lo / dx), right = std::ceil(hi / dx);
  return Grid{-left * dx, right * dx, static_cast<std::size_t>(left + right)};
}

inline std::vector<double> column(const Trajectory& tr, double TrajectoryPoint::*f) {
  std::vector<double> v;
  v.reserve(tr.size());
  for (const auto& p : tr) v.push_back(p.*f);
  return v;
}

inline void trajectory_csv(const Sink& sink, const std::string& quantity, const Trajectory& tr) {
  sink.csv(quantity, {"t", "x", "phi_min", "phi_max", "mass"},
           {column(tr, &TrajectoryPoint::t), column(tr, &TrajectoryPoint::x), column(tr, &TrajectoryPoint::phi_min),
            column(tr, &TrajectoryPoint::phi_max), column(tr, &TrajectoryPoint::mass)});
}

// Price at time t by linear interpolation along a trajectory.
inline double price_at(const Trajectory& tr, double t) {
  auto it = std::lower_bound(tr.begin(), tr.end(), t, [](const TrajectoryPoint& p, double v) { return p.t < v; });
  if (it == tr.begin()) return it->x;
  if (it == tr.end()) return tr.back().x;
  const auto& b = *it;
  const auto& a = *(it - 1);
  return a.x + (b.x - a.x) * (t - a.t) / (b.t - a.t);
}

// Single-book meta-order run on a grid sized from the expected price range.
struct BookRun {
  ModelParams p;
  Grid grid;
  Trajectory tr;
};

inline BookRun run_book(const ModelParams& p, double m0, double T, double x_expect, double dx, double dt_factor) {
  const double pad = 8.0 * run_scale(p, T);
  BookRun r{p, span_grid(std::min(-pad, x_expect - pad), std::max(pad, x_expect + pad), dx), {}};
  const double dt = std::min(dt_factor * dx * dx / p.D, 0.1 / p.nu);
  r.tr = simulate_metaorder(p, MetaOrderSpec::constant(m0, T), r.grid, dt, T);
  return r;
}

// Power-law fits x = c t^e on two windows; returns the time where they cross.
inline double power_law_crossing(const LineFit& a, const LineFit& b) {
  return std::exp((b.intercept - a.intercept) / (a.slope - b.slope));
}

}  // namespace detail

// ---------------------------------------------------------------- stationary

inline void declare_stationary(Config& c) {
  c.declare("D", "1", "diffusivity");
  c.declare("nu", "1", "cancellation rate");
  c.declare("lambda", "1", "deposition intensity");
  c.declare("x_min", "-12", "grid lower bound");
  c.declare("x_max", "12", "grid upper bound");
  c.declare("cells", "960", "grid cells");
  c.declare("perturb_amplitude", "0.3", "bump height in units of lambda/nu");
  c.declare("perturb_center", "0.7", "bump centre");
  c.declare("perturb_width", "0.8", "bump width");
  c.declare("dt", "0.01", "first time step");
  c.declare("dt_growth", "1.05", "step growth factor");
  c.declare("dt_max", "0.25", "largest step");
  c.declare("t_end", "12", "relaxation time");
  c.declare("stride", "1", "trajectory output stride");
  c.declare("tolerance", "0.01", "L-infinity band relative to lambda/nu");
}

inline Report run_stationary(const Config& c, const Sink& sink) {
  Report rep{"stationary", {}, {}};
  const ModelParams p{c.real("D"), c.real("nu"), c.real("lambda"), 0.0};
  p.validate();
  const Grid g{c.real("x_min"), c.real("x_max"), c.count("cells")};
  g.validate();
  if (p.linear()) throw input_error("stationary needs nu > 0");
  if (g.width() < 8.0 * p.xi_c()) throw grid_error("grid narrower than 8 xi_c");
  const double plateau = p.plateau();
  std::vector<double> phi0(g.n_cells);
  const double a = c.real("perturb_amplitude"), x0 = c.real("perturb_center"), w = c.real("perturb_width");
  for (std::size_t i = 0; i < g.n_cells; ++i) {
    const double x = g.x(i);
    phi0[i] = phi_stationary(x, p) + a * plateau * std::exp(-0.5 * (x - x0) * (x - x0) / (w * w));
  }
  SimOptions opt;
  opt.initial_phi = phi0;
  opt.dt_growth = c.real("dt_growth");
  opt.dt_max = c.real("dt_max");
  opt.stride = c.count("stride");
  BookState s{phi0, 0.0, find_price(phi0, g, 0.0)};
  Stepper st(p, g, opt.step);
  const double t_end = c.real("t_end");
  Trajectory tr{snapshot(s, g)};
  double h = c.real("dt");
  for (std::size_t k = 1; s.t < t_end * (1.0 - 1e-14); ++k) {
    st.step(s, 0.0, std::min(h, t_end - s.t));
    if (k % opt.stride == 0 || s.t >= t_end * (1.0 - 1e-14)) tr.push_back(snapshot(s, g));
    h = std::min(h * opt.dt_growth, opt.dt_max);
  }
  std::vector<double> xs(g.n_cells), st_shift(g.n_cells);
  double gap = 0.0;
  for (std::size_t i = 0; i < g.n_cells; ++i) {
    xs[i] = g.x(i);
    st_shift[i] = phi_stationary(xs[i] - s.price, p);
    gap = std::max(gap, std::abs(s.phi[i] - st_shift[i]));
  }
  rep.band("stationary", "Linf |phi - phi_st| / (lambda/nu)", gap / plateau, 0.0, c.real("tolerance"));
  rep.note("final price " + format_number(s.price));
  sink.csv("book", {"x", "phi_initial", "phi_final", "phi_stationary"}, {xs, phi0, s.phi, st_shift});
  detail::trajectory_csv(sink, "trajectory", tr);
  return rep;
}

// ---------------------------------------------------------------- impact regimes

inline void declare_impact(Config& c) {
  c.declare("D", "1", "diffusivity");
  c.declare("L", "1", "liquidity slope");
  c.declare("T", "1", "execution horizon");
  c.declare("nu_T_fast", "1e-3", "nu T of the fast runs");
  c.declare("nu_T_slow", "20", "nu T of the slow runs");
  c.declare("large_participation", "10", "m0 / J of the large-participation runs");
  c.declare("small_participation", "0.05", "m0 / J of the small-participation runs");
  c.declare("fast_cells_per_scale", "100", "fast runs: cells per sqrt(D T)");
  c.declare("slow_cells_per_xi", "10", "slow runs: cells per xi_c");
  c.declare("dt_factor", "2", "dt = dt_factor dx^2 / D (capped at 0.1 / nu)");
  c.declare("exponent_window_lo", "0.1", "exponent fit from this fraction of T");
  c.declare("correction_window_lo", "0.3", "first-order correction compared from this fraction of T");
  c.declare("slope_window_lo", "0.5", "slow-regime slope fitted from this fraction of T");
}

inline Report run_impact(const Config& c, const Sink& sink) {
  Report rep{"impact-regimes", {}, {}};
  const double D = c.real("D"), L = c.real("L"), T = c.real("T");
  const double dtf = c.real("dt_factor");
  const ModelParams fast = ModelParams::from_liquidity(D, c.real("nu_T_fast") / T, L);
  const ModelParams slow = ModelParams::from_liquidity(D, c.real("nu_T_slow") / T, L);
  const double J = fast.J();
  const double fdx = run_scale(fast, T) / c.real("fast_cells_per_scale");
  const double sdx = slow.xi_c() / c.real("slow_cells_per_xi");

  auto overlay = [&](const std::string& name, const detail::BookRun& run, double m0) {
    const Regime r = classify_regime(m0, T, run.p);
    std::vector<double> t, an, fo, sim;
    for (const auto& q : run.tr) {
      if (q.t > T) break;
      t.push_back(q.t);
      sim.push_back(q.x);
      an.push_back(r.intermediate() ? NAN : analytic_price(q.t, m0, run.p, r));
      fo.push_back(r.intermediate() || detail::linear_growth(r) ? NAN : an.back() + first_order_correction(q.t, m0, run.p, r));
    }
    sink.csv(name, {"t", "analytic", "first_order", "simulated"}, {t, an, fo, sim});
    rep.note(name + ": regime " + r.name());
  };

  // large participation, fast: square-root growth
  {
    const double m0 = c.real("large_participation") * J;
    const auto run = detail::run_book(fast, m0, T, std::sqrt(2.0 * m0 * T / L), fdx, dtf);
    const double lo = c.real("exponent_window_lo") * T;
    const auto f = fit_power_law(detail::column(run.tr, &TrajectoryPoint::t), detail::column(run.tr, &TrajectoryPoint::x), lo, T);
    rep.band("large participation", "exponent of x_t", f.slope, 0.47, 0.53);
    rep.band("large participation", "x_T / (sqrt(2 m0 / L) sqrt(T))", run.tr.back().x / (std::sqrt(2.0 * m0 / L) * std::sqrt(T)), 0.95, 1.05);
    overlay("large", run, m0);
  }
  // small participation, fast: sqrt(t) with the linear-response prefactor, and its correction
  {
    const double m0 = c.real("small_participation") * J;
    const double a = trajectory_alpha(m0, fast, Participation::small);
    const auto run = detail::run_book(fast, m0, T, a * std::sqrt(T), fdx, dtf);
    rep.band("small participation", "x_T / (m0 sqrt(T) / (L sqrt(pi D)))", run.tr.back().x / (a * std::sqrt(T)), 0.95, 1.05);
    const double k = correction_k(), rn = std::sqrt(fast.nu);
    double lo_ratio = kInf, hi_ratio = -kInf;
    std::vector<double> tc, zc, zp;
    for (const auto& q : run.tr) {
      if (q.t < c.real("correction_window_lo") * T || q.t > T) continue;
      const double z1 = (q.x - a * std::sqrt(q.t)) / (a * rn);
      const double ratio = z1 / (-k * q.t);
      lo_ratio = std::min(lo_ratio, ratio);
      hi_ratio = std::max(hi_ratio, ratio);
      tc.push_back(q.t);
      zc.push_back(z1);
      zp.push_back(-k * q.t);
    }
    rep.band("first-order correction", "min of z1_sim / (-k t)", lo_ratio, 0.9, 1.1);
    rep.band("first-order correction", "max of z1_sim / (-k t)", hi_ratio, 0.9, 1.1);
    sink.csv("correction", {"t", "z1_simulated", "z1_predicted"}, {tc, zc, zp});
    overlay("small", run, m0);
  }
  // slow: linear growth at m0 nu / lambda for either participation
  for (const auto& [label, part] : {std::pair<std::string, double>{"slow-small", c.real("small_participation")},
                                    std::pair<std::string, double>{"slow-large", c.real("large_participation")}}) {
    const double m0 = part * slow.J();
    const double v = m0 * slow.nu / slow.lambda;
    const auto run = detail::run_book(slow, m0, T, v * T, sdx, dtf);
    std::vector<double> t, x;
    for (const auto& q : run.tr)
      if (q.t >= c.real("slope_window_lo") * T) {
        t.push_back(q.t);
        x.push_back(q.x);
      }
    const auto f = fit_line(t, x);
    rep.band(label, "fitted dx/dt / (m0 nu / lambda)", f.slope / v, 0.95, 1.05);
    overlay(label, run, m0);
  }
  return rep;
}

// ---------------------------------------------------------------- decay

inline void declare_decay(Config& c) {
  c.declare("D", "1", "diffusivity");
  c.declare("L", "1", "liquidity slope");
  c.declare("nu", "1", "cancellation rate");
  c.declare("T", "1e-3", "execution horizon");
  c.declare("small_participation", "0.05", "m0 / J, small-participation run");
  c.declare("large_participation", "10", "m0 / J, large-participation run");
  c.declare("t_end", "14", "relaxation horizon (units of 1/nu)");
  c.declare("half_width", "8", "co-moving frame half-width in units of xi_c");
  c.declare("cells", "2048", "co-moving frame cells");
  c.declare("dt_factor", "0.5", "dt = dt_factor dx^2 / D during execution");
  c.declare("dt_growth", "1.02", "step growth after execution");
  c.declare("dt_max", "0.002", "largest step after execution (units of 1/nu)");
  c.declare("approach_window_lo", "4", "residual rate fitted from nu t");
  c.declare("approach_window_hi", "8", "residual rate fitted up to nu t");
  c.declare("profile_beta", "0.5", "beta of the emitted F(u) profile");
  c.declare("profile_u_max", "40", "largest u of the emitted F(u) profile");
  c.declare("profile_points", "400", "grid points of the emitted F(u) profile");
}

inline Report run_decay(const Config& c, const Sink& sink) {
  Report rep{"decay", {}, {}};
  const double D = c.real("D"), L = c.real("L"), nu = c.real("nu"), T = c.real("T");
  const ModelParams p = ModelParams::from_liquidity(D, nu, L);
  p.validate();
  const double t_end = c.real("t_end") / nu;
  // the book is followed in the frame of the price: impacts far below one cell would
  // otherwise creep toward the nearest cell face during the long relaxation
  const std::size_t cells = c.count("cells");
  const double dx = 2.0 * c.real("half_width") * p.xi_c() / static_cast<double>(cells);
  auto run = [&](double m0, double horizon) {
    SimOptions opt;
    opt.dt_growth = c.real("dt_growth");
    opt.dt_max = c.real("dt_max") / nu;
    return simulate_metaorder_comoving(p, MetaOrderSpec::constant(m0, horizon), dx, cells,
                                       c.real("dt_factor") * dx * dx / D, t_end, opt);
  };
  const double u_lo = c.real("approach_window_lo"), u_hi = c.real("approach_window_hi");
  std::vector<double> plateaus;
  for (const auto& [label, part] : {std::pair<std::string, double>{"small", c.real("small_participation")},
                                    std::pair<std::string, double>{"large", c.real("large_participation")}}) {
    const double m0 = part * p.J();
    const auto tr = run(m0, T);
    const double I_inf = tr.back().x, I_pred = permanent_impact(m0 * T, p);
    rep.band(label + " participation", "plateau / (xi_c Q / (2 Q_lin))", I_inf / I_pred, 0.9, 1.1);
    // residual r(t) = x_t - x_inf against the e^{-nu t}/sqrt(t) approach: fitted rate
    std::vector<double> u, y;
    for (const auto& q : tr) {
      const double uu = nu * q.t, res = q.x - I_inf;
      if (uu >= u_lo && uu <= u_hi && res > 0.0) {
        u.push_back(uu);
        y.push_back(std::log(res * std::sqrt(uu)));
      }
    }
    const double rate = u.size() >= 3 ? -fit_line(u, y).slope : NAN;
    rep.band(label + " participation", "fitted approach rate / nu", rate, 0.8, 1.2);
    detail::trajectory_csv(sink, label + "_trajectory", tr);
    plateaus.push_back(I_inf);
    if (label == "small") {
      const auto tr2 = run(2.0 * m0, 0.5 * T);
      rep.band("(m0, T) -> (2 m0, T/2)", "plateau ratio", tr2.back().x / I_inf, 0.9, 1.1);
      detail::trajectory_csv(sink, "small_doubled_trajectory", tr2);
    }
  }
  // reference profile of the post-execution integral equation
  {
    const double beta = c.real("profile_beta");
    const auto u = geometric_grid(1e-3, c.real("profile_u_max"), c.count("profile_points"));
    const auto F = decay_profile(u, beta);
    std::vector<double> asym(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
      asym[i] = beta * std::sqrt(std::numbers::pi) - beta / std::sqrt(u[i]) * (1.0 - std::exp(-u[i]));
    sink.csv("profile", {"u", "F", "F_asymptotic"}, {u, F, asym});
    const double F_inf = F.back() + beta / std::sqrt(u.back());
    rep.note("F_inf / (beta sqrt(pi)) = " + format_number(F_inf / (beta * std::sqrt(std::numbers::pi))) +
             " with F_inf = F(u_max) + beta / sqrt(u_max)");
  }
  return rep;
}

// ---------------------------------------------------------------- dual frequency

inline void declare_dual(Config& c) {
  c.declare("D", "1", "diffusivity (shared)");
  c.declare("L_s", "1", "slow liquidity slope (slow book in the linear limit)");
  c.declare("nu_f", "1", "fast cancellation rate");
  c.declare("lambda_f", "1000", "fast deposition intensity, crossover run");
  c.declare("m0", "100", "meta-order rate, crossover run");
  c.declare("T_over_tstar", "10", "crossover run horizon in units of t*");
  c.declare("decay_lambda_f", "100", "fast deposition intensity, decay run");
  c.declare("decay_m0", "10", "meta-order rate, decay run");
  c.declare("decay_T_over_tstar", "2000", "decay run horizon in units of t*");
  c.declare("decay_t_end_over_T", "100", "decay run length in units of T");
  c.declare("slow_cells", "4096", "slow grid cells");
  c.declare("pad_run_scales", "6", "slow grid padding in units of sqrt(D t_end)");
  c.declare("fast_cells", "256", "co-moving fast book cells");
  c.declare("fast_dx", "0.125", "fast cell size in units of the fast xi_c");
  c.declare("dt_rel", "0.002", "step as a fraction of elapsed time");
  c.declare("dt_min", "0.05", "smallest step in units of 1/nu_f");
  c.declare("agreement_lo", "0.1", "PDE/analytic comparison from this multiple of t*");
  c.declare("agreement_hi", "10", "PDE/analytic comparison up to this multiple of t*");
  c.declare("early_window", "1e-3,1e-2", "early slope window, multiples of t*");
  c.declare("late_window", "1e2,1e3", "late slope window, multiples of t*");
  c.declare("decay_window", "10,100", "decay fit window, multiples of T");
  c.declare("threshold_nu_f", "1", "threshold example: nu_f");
  c.declare("threshold_T_d", "3e4", "threshold example: trading day");
  c.declare("threshold_Js_over_J", "0.1", "threshold example: J_s / J");
  c.declare("linear_m0", "0.01", "very small participation example: m0 (J_s = 1, J_f = 10)");
  c.declare("unsafe", "false", "skip regime guards");
}

namespace detail {
inline std::pair<double, double> parse_window(const Config& c, const std::string& key) {
  const std::string& s = c.text(key);
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw input_error("config key '" + key + "' must be lo,hi");
  Config tmp;
  tmp.declare("lo", Config::trim(s.substr(0, comma)));
  tmp.declare("hi", Config::trim(s.substr(comma + 1)));
  const double lo = tmp.real("lo"), hi = tmp.real("hi");
  if (!(lo > 0.0 && hi > lo)) throw input_error("config key '" + key + "' needs 0 < lo < hi");
  return {lo, hi};
}

inline DualSimOptions dual_options(const Config& c, const DualParams& d, double t_end, double x_expect) {
  DualSimOptions o;
  const double pad = c.real("pad_run_scales") * std::sqrt(d.D() * t_end);
  o.slow_grid = Grid{-pad, x_expect + pad, c.count("slow_cells")};
  o.fast_cells = c.count("fast_cells");
  o.fast_dx = c.real("fast_dx");
  o.dt_rel = c.real("dt_rel");
  o.dt_min = c.real("dt_min");
  return o;
}
}  // namespace detail

inline Report run_dual(const Config& c, const Sink& sink) {
  Report rep{"dual-frequency", {}, {}};
  const bool unsafe = c.flag("unsafe");
  const double D = c.real("D");
  const ModelParams slow = ModelParams::linear_limit(D, c.real("L_s"));
  // crossover
  {
    const DualParams d{slow, ModelParams{D, c.real("nu_f"), c.real("lambda_f"), 0.0}, c.real("m0")};
    const double ts = d.t_star(), T = c.real("T_over_tstar") * ts;
    check_rate(d, unsafe);
    check_timescales(d, T, unsafe);
    const auto path = simulate_dual(d, T, T, detail::dual_options(c, d, T, 1.2 * price_trajectory(T, d, unsafe)));
    const double a_lo = c.real("agreement_lo") * ts, a_hi = c.real("agreement_hi") * ts;
    double worst = 0.0;
    std::vector<double> t, x, xa, ms, mf, msa;
    for (const auto& q : path) {
      if (q.t <= 0.0) continue;
      t.push_back(q.t);
      x.push_back(q.x);
      xa.push_back(price_trajectory(q.t, d, unsafe));
      ms.push_back(q.m_s);
      mf.push_back(q.m_f);
      msa.push_back(split_rates(q.t, d, unsafe).m_s);
      if (q.t >= a_lo * (1.0 - 1e-12) && q.t <= a_hi * (1.0 + 1e-12)) worst = std::max(worst, std::abs(q.x / xa.back() - 1.0));
    }
    rep.band("crossover", "max |x_PDE / x_analytic - 1| on [t*/10, 10 t*]", worst, 0.0, 0.1);
    sink.csv("crossover", {"t", "x_simulated", "x_analytic", "m_s_simulated", "m_f_simulated", "m_s_analytic"},
             {t, x, xa, ms, mf, msa});
    // local slopes of the closed form, one decade inside each asymptotic regime
    for (const auto& [key, label, target] : {std::tuple<std::string, std::string, double>{"early_window", "early slope", 1.0},
                                             std::tuple<std::string, std::string, double>{"late_window", "late slope", 0.5}}) {
      const auto [lo, hi] = detail::parse_window(c, key);
      const auto tt = geometric_grid(lo * ts, hi * ts, 64);
      std::vector<double> xx;
      for (double v : tt) xx.push_back(price_trajectory(v, d, unsafe));
      rep.band(label, "fitted exponent of the closed-form trajectory", fit_power_law(tt, xx, lo * ts, hi * ts).slope,
               target - 0.05, target + 0.05);
    }
    const auto f_pde = fit_power_law(t, x, 0.01 * ts, 0.1 * ts);
    rep.note("PDE exponent on [t*/100, t*/10] = " + format_number(f_pde.slope));
    const double Js_J = c.real("threshold_Js_over_J");
    const double thr = sqrt_regime_threshold(c.real("threshold_nu_f"), c.real("threshold_T_d"), 1.0, Js_J);
    rep.band("threshold", "Q / V_d threshold", thr, 2.5e-4, 3.5e-4);
  }
  // decay after execution
  {
    const DualParams d{slow, ModelParams{D, c.real("nu_f"), c.real("decay_lambda_f"), 0.0}, c.real("decay_m0")};
    const double ts = d.t_star(), T = c.real("decay_T_over_tstar") * ts;
    const double t_end = c.real("decay_t_end_over_T") * T;
    const auto coef = decay_coefficients(T, d, unsafe);
    const auto path = simulate_dual(d, T, t_end, detail::dual_options(c, d, t_end, 1.2 * price_trajectory(T, d, unsafe)));
    const auto [w_lo, w_hi] = detail::parse_window(c, "decay_window");
    std::vector<double> t, x, xa, u, xw;
    for (const auto& q : path) {
      if (q.t <= T) continue;
      t.push_back(q.t);
      x.push_back(q.x);
      xa.push_back(coef.B / std::sqrt(q.t));
      if (q.t >= w_lo * T && q.t <= w_hi * T) {
        u.push_back(1.0 / std::sqrt(q.t));
        xw.push_back(q.x);
      }
    }
    const auto f = fit_power_law(t, x, w_lo * T, w_hi * T);
    rep.band("decay", "fitted exponent", f.slope, -0.55, -0.45);
    // x = x_inf + B u, u = t^{-1/2}
    const auto lf = fit_line(u, xw);
    const double x_ref = xw.front();
    rep.band("decay", "|x_inf| / x(start of window)", std::abs(lf.intercept) / x_ref, 0.0, 0.05);
    double su = 0.0, sxu = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      su += u[i] * u[i];
      sxu += xw[i] * u[i];
    }
    const double B_fit = sxu / su;
    rep.band("decay", "B_analytic / B_PDE", coef.B / B_fit, 0.9, 1.1);
    rep.note("B_analytic = " + format_number(coef.B) + ", B_PDE = " + format_number(B_fit) + ", f_T = " + format_number(coef.f_T));
    sink.csv("decay", {"t", "x_simulated", "x_analytic"}, {t, x, xa});
  }
  // very small participation: slow rate and price by Laplace inversion
  {
    const DualParams d{ModelParams::linear_limit(D, 1.0), ModelParams{D, 1.0, 10.0, 0.0}, c.real("linear_m0")};
    const double td = d.t_dagger();
    const auto tt = geometric_grid(1e-3 * td, 1e3 * td, 61);
    std::vector<double> ms, ms_t, ms_s, x, xs, xl;
    for (double v : tt) {
      const auto r = linear_regime_slow_rate(v, d, unsafe);
      ms.push_back(r.value);
      ms_t.push_back(r.talbot);
      ms_s.push_back(r.stehfest);
      x.push_back(linear_regime_price(v, d, unsafe).value);
      xs.push_back(linear_regime_price_short(v, d));
      xl.push_back(linear_regime_price_long(v, d));
    }
    sink.csv("linear_regime", {"t", "m_s", "m_s_talbot", "m_s_stehfest", "x", "x_short", "x_long"}, {tt, ms, ms_t, ms_s, x, xs, xl});
  }
  return rep;
}

// ---------------------------------------------------------------- kernel

inline void declare_kernel(Config& c) {
  c.declare("alpha", "0.25", "frequency density exponent");
  c.declare("t_c", "1", "high-frequency cutoff time");
  c.declare("delta", "1", "time step");
  c.declare("n", "2048", "number of time points");
  c.declare("tau_index", "20", "column (source time index) of the lag cut");
  c.declare("lag_window_lo", "10", "lag fit from this multiple of tau");
  c.declare("diagonal_window_lo", "0.1", "K(t, t/2) fit from this fraction of t_max");
  c.declare("h_off", "false", "drop the local H term");
}

inline Report run_kernel(const Config& c, const Sink& sink) {
  Report rep{"kernel", {}, {}};
  FrequencyDistribution fd{c.real("alpha"), c.real("t_c"), 0.0};
  const std::size_t n = c.count("n");
  const double delta = c.real("delta");
  const std::size_t j0 = c.count("tau_index");
  if (j0 + 2 >= n) throw input_error("tau_index beyond the series");
  auto measure = [&](bool h_off, bool emit) {
    auto km = build_kernel(uniform_times(n, delta), fd, {h_off});
    invert_kernel(km);
    // price kernel P(t_i, t_j) = delta sum_{i' <= i} K[i'][j]
    std::vector<double> P(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t i = j; i < n; ++i) {
        acc += km.k(i, j) * delta;
        P[i * n + j] = acc;
      }
    }
    const double tau = km.times[j0];
    std::vector<double> lag, pl, kl;
    for (std::size_t i = j0 + 1; i < n; ++i) {
      lag.push_back(km.times[i] - tau);
      pl.push_back(std::abs(P[i * n + j0]));
      kl.push_back(km.k(i, j0));
    }
    const double lag_lo = c.real("lag_window_lo") * tau;
    const auto f_lag = fit_power_law(lag, pl, lag_lo, lag.back());
    std::vector<double> td, pd;
    for (std::size_t i = 3; i < n; i += 2) {
      const std::size_t j = (i + 1) / 2 - 1;  // t_j = t_i / 2
      td.push_back(km.times[i]);
      pd.push_back(std::abs(P[i * n + j]));
    }
    const auto f_diag = fit_power_law(td, pd, c.real("diagonal_window_lo") * km.times.back(), km.times.back());
    if (emit) {
      sink.csv("lag", {"lag", "P", "K"}, {lag, pl, kl});
      sink.csv("diagonal", {"t", "P_t_half_t"}, {td, pd});
    }
    return std::pair{f_lag.slope, f_diag.slope};
  };
  const bool h_off = c.flag("h_off");
  const auto [lag_e, diag_e] = measure(h_off, true);
  rep.band("lag", "exponent of K(t, tau) in t - tau", lag_e, -0.55, -0.45);
  rep.band("diagonal", "exponent of K(t, t/2) in t", diag_e, -0.30, -0.20);
  {
    // price under a constant small flow by both routes
    const ModelParams p = ModelParams::from_liquidity(1.0, 1.0, 1.0);
    const std::vector<double> flow(n, 0.01 * p.J());
    const auto km = build_kernel(uniform_times(n, delta), fd, {h_off});
    const double xk = kernel_price(km, flow, p).back(), xa = asymptotic_price(flow, delta, fd, p).back();
    rep.note("constant flow, price at t_max: kernel route " + format_number(xk) + ", closed-form route " +
             format_number(xa) + ", ratio " + format_number(xk / xa));
  }
  if (!h_off) {
    const auto [lag0, diag0] = measure(true, false);
    rep.note("without the local H term: lag exponent " + format_number(lag0) + ", K(t, t/2) exponent " + format_number(diag0));
  }
  return rep;
}

// ---------------------------------------------------------------- diffusivity

inline void declare_diffusivity(Config& c) {
  c.declare("gamma", "0.5", "flow autocorrelation exponent");
  c.declare("alpha", "0.25", "frequency density exponent");
  c.declare("control_alpha", "0", "frequency exponent of the control run (0: single timescale)");
  c.declare("t_c", "1", "high-frequency cutoff time");
  c.declare("delta", "1", "time step");
  c.declare("log2_samples", "14", "series length 2^k");
  c.declare("realizations", "64", "independent flow series");
  c.declare("amplitude", "0.01", "flow standard deviation in units of J");
  c.declare("D", "1", "diffusivity");
  c.declare("L", "1", "liquidity slope");
  c.declare("seed", "1", "flow seed; realization r uses stream r");
  c.declare("bootstrap", "200", "bootstrap resamples");
  c.declare("flow", "gaussian", "gaussian, or signed: amplitude * sign of the Gaussian flow");
  c.declare("unsafe", "false", "skip the small-flow guard");
}

inline Report run_diffusivity(const Config& c, const Sink& sink) {
  Report rep{"diffusivity", {}, {}};
  const std::size_t n = std::size_t{1} << c.count("log2_samples");
  const std::size_t R = c.count("realizations");
  const double delta = c.real("delta"), gamma = c.real("gamma");
  const auto seed = static_cast<std::uint64_t>(c.integer("seed"));
  const ModelParams p = ModelParams::from_liquidity(c.real("D"), 1.0, c.real("L"));
  const CirculantEmbedding emb(n, gamma, std::pow(c.real("amplitude") * p.J(), 2.0));
  if (emb.min_eigenvalue() < 0.0) rep.note("circulant embedding clipped eigenvalues down to " + format_number(emb.min_eigenvalue()));
  const std::string kind = c.text("flow");
  if (kind != "gaussian" && kind != "signed") throw input_error("flow must be gaussian or signed");
  std::vector<FlowSeries> flows;
  for (std::size_t r = 0; r < R; ++r) {
    Philox4x32 rng(seed, r);
    flows.push_back({emb.sample(rng), delta, gamma, seed, r});
    if (kind == "signed") flows.back() = signed_flow(flows.back(), c.real("amplitude") * p.J());
  }
  if (sink.active()) {
    std::ostringstream o;
    write_flow_csv(o, flows.front());
    sink.text("diffusivity_flow.csv", o.str());
  }
  const auto g_est = autocov_exponent(flows, 10, 1000, c.count("bootstrap"), seed);
  rep.note("flow autocovariance exponent " + format_number(g_est.gamma) + " +- " + format_number(g_est.error));
  auto ensemble = [&](double alpha, const std::string& label, double target) {
    const FrequencyDistribution fd{alpha, c.real("t_c"), 0.0};
    const auto km = build_kernel(uniform_times(n, delta), fd);
    std::vector<std::vector<double>> paths;
    for (const auto& f : flows) {
      check_small_flow(f.samples, p, c.flag("unsafe"));
      paths.push_back(kernel_price(km, f.samples, p));
    }
    const auto fit = diffusion_exponent(paths, delta, c.count("bootstrap"), seed);
    rep.band(label, "exponent of <x_t^2>", fit.exponent, target - 0.1, target + 0.1);
    rep.note(label + ": bootstrap error " + format_number(fit.error) + ", window [" + format_number(fit.t_lo) + ", " +
             format_number(fit.t_hi) + "]");
    std::vector<double> t, msd;
    for (std::size_t i = 0; i < n; i = i < 16 ? i + 1 : i + i / 16) {
      t.push_back(fit.t[i]);
      msd.push_back(fit.msd[i]);
    }
    sink.csv(label + "_msd", {"t", "msd"}, {t, msd});
  };
  ensemble(c.real("alpha"), "long-memory", 1.0);
  ensemble(c.real("control_alpha"), "control", 0.5);
  return rep;
}

// ---------------------------------------------------------------- multi-frequency meta-order

inline void declare_multi(Config& c) {
  c.declare("alpha", "0.1", "frequency density exponent");
  c.declare("zeta", "0.15", "trade-rate exponent, J_nu = J_hf (nu t_c)^zeta");
  c.declare("m0", "0.1", "meta-order rate");
  c.declare("J_hf", "1", "high-frequency trade rate");
  c.declare("t_c", "1", "high-frequency cutoff time");
  c.declare("D", "1", "diffusivity");
  c.declare("t_min", "1e-2", "first grid time");
  c.declare("t_max", "1e12", "last grid time");
  c.declare("points", "1500", "geometric grid points");
  c.declare("early_window_lo", "100", "early fit from this time (units of t_c)");
  c.declare("early_window_hi", "0.1", "early fit up to this multiple of 1/nu*");
  c.declare("late_window_lo", "10", "late fit from this multiple of 1/nu*");
  c.declare("unsafe", "false", "skip the small-rate guard");
}

inline Report run_multi(const Config& c, const Sink& sink) {
  Report rep{"metaorder-multi", {}, {}};
  const FrequencyDistribution fd{c.real("alpha"), c.real("t_c"), 0.0};
  const TradeRateProfile pr{c.real("J_hf"), c.real("zeta")};
  const double m0 = c.real("m0");
  const auto grid = geometric_grid(c.real("t_min"), c.real("t_max"), c.count("points"));
  MultiMetaorderOptions opt;
  opt.unsafe = c.flag("unsafe");
  const auto r = metaorder_multi(m0, pr, fd, grid, c.real("D"), opt);
  const double ts = 1.0 / pr.nu_star(m0, fd.t_c);
  const auto early = fit_power_law(r.t, r.x, c.real("early_window_lo") * fd.t_c, c.real("early_window_hi") * ts);
  const auto late = fit_power_law(r.t, r.x, c.real("late_window_lo") * ts, c.real("t_max"));
  rep.band("early", "exponent of x_t", early.slope, 0.72, 0.78);
  rep.band("late", "exponent of x_t", late.slope, 0.595, 0.655);
  // switch: first time the local exponent d ln x / d ln t leaves the early law by more
  // than half the gap between the two fitted exponents
  const double gap = 0.5 * std::abs(early.slope - late.slope);
  auto local_exponent = [&](std::size_t i) { return std::log(r.x[i + 1] / r.x[i]) / std::log(r.t[i + 1] / r.t[i]); };
  double t_switch = NAN, t_mid = NAN;
  for (std::size_t i = 0; i + 1 < r.t.size(); ++i) {
    if (r.t[i] <= c.real("early_window_lo") * fd.t_c) continue;
    const double e = local_exponent(i);
    if (std::isnan(t_switch) && std::abs(e - early.slope) > gap) t_switch = r.t[i];
    if (std::isnan(t_mid) && std::abs(e - late.slope) < gap && std::abs(e - early.slope) > gap) t_mid = r.t[i];
  }
  rep.band("switch", "t_switch / (1/nu*)", t_switch / ts, 0.5, 2.0);
  rep.note("1/nu* = " + format_number(ts) + ", price jump ratio at the switch " + format_number(r.jump) +
           ", local exponent nearer the late law from " + format_number(t_mid / ts) +
           " / nu*, fitted power laws cross at " + format_number(detail::power_law_crossing(early, late) / ts) + " / nu*");
  sink.csv("trajectory", {"t", "x", "xdot"}, {r.t, r.x, r.xdot});
  return rep;
}

// ---------------------------------------------------------------- registry

inline const std::vector<Experiment>& experiments() {
  static const std::vector<Experiment> list = {
      {"stationary", "relaxation of a perturbed book to the stationary profile", "Eq. (3)", declare_stationary,
       run_stationary},
      {"impact-regimes", "price trajectories during execution in each regime", "Table 1, Eq. (10)", declare_impact,
       run_impact},
      {"decay", "post-execution relaxation and permanent impact", "Eqs. (11)–(14)", declare_decay, run_decay},
      {"dual-frequency", "slow/fast liquidity crossover and decay", "Eqs. (21)–(25)", declare_dual, run_dual},
      {"kernel", "inverse propagator kernel", "Fig. 4", declare_kernel, run_kernel},
      {"diffusivity", "price diffusion under long-memory order flow", "Eq. (36)", declare_diffusivity,
       run_diffusivity},
      {"metaorder-multi", "meta-order impact with a continuum of liquidity frequencies", "§6.3", declare_multi,
       run_multi},
  };
  return list;
}

inline const Experiment& find_experiment(const std::string& name) {
  for (const auto& e : experiments())
    if (e.name == name) return e;
  throw input_error("unknown experiment '" + name + "'");
}

inline std::string list_experiments() {
  std::ostringstream o;
  for (const auto& e : experiments()) o << e.name << " → " << e.target << "  " << e.description << '\n';
  return o.str();
}

// Declares the experiment's keys plus the common ones.
inline Config default_config(const Experiment& e) {
  Config c;
  e.declare(c);
  return c;
}

// Runs with a resolved config, writing the manifest, CSVs and summary into `out`
// (nothing is written when out is empty).
inline Report run_experiment(const Experiment& e, const Config& c, const std::filesystem::path& out) {
  Sink sink = out.empty() ? Sink() : Sink(out, e.name);
  sink.text(e.name + "_manifest.ini", "experiment = " + e.name + "\n" + c.dump());
  Report rep = e.run(c, sink);
  sink.text(e.name + "_summary.txt", format_report(rep));
  return rep;
}

}  // namespace llob
