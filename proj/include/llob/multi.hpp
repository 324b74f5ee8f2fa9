#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "llob/core.hpp"
#include "llob/fit.hpp"
#include "llob/orderflow.hpp"
#include "llob/special.hpp"

namespace llob {

// rho(nu) = Z nu^{alpha-1} e^{-nu t_c}, Z = t_c^alpha / Gamma(alpha). alpha = 0 stands for
// the single-timescale limit where G = 1 and H = 0 identically.
struct FrequencyDistribution {
  double alpha = 0.25;
  double t_c = 1.0;
  double nu_lf = 0.0;  // optional low-frequency cutoff

  double Z() const { return std::pow(t_c, alpha) / std::tgamma(alpha); }
  double density(double nu) const {
    return nu > nu_lf ? Z() * std::pow(nu, alpha - 1.0) * std::exp(-nu * t_c) : 0.0;
  }
  void validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw input_error("alpha must be nonnegative");
    if (!(t_c > 0.0)) throw input_error("t_c must be positive");
    if (nu_lf < 0.0) throw input_error("nu_lf must be nonnegative");
  }
};

struct Memory {
  double G = 1.0;
  double H = 0.0;
};

// G(t) = int_{nu_lf}^{1/t} rho, H(t) = int_{1/t}^inf rho(nu) (nu t_c)^{-1/2}.
inline Memory memory_functions(double t, const FrequencyDistribution& d) {
  if (!(t > 0.0)) throw std::domain_error("memory_functions needs t > 0");
  d.validate();
  if (d.alpha == 0.0) return {1.0, 0.0};
  const double ga = std::tgamma(d.alpha), x = d.t_c / t;
  Memory m;
  if (d.nu_lf > 0.0 && 1.0 / t <= d.nu_lf) {
    m.G = 0.0;
    m.H = upper_gamma(d.alpha - 0.5, d.t_c * d.nu_lf) / ga;
    return m;
  }
  m.G = 1.0 - upper_gamma(d.alpha, x) / ga;
  if (d.nu_lf > 0.0) m.G -= lower_gamma(d.alpha, d.t_c * d.nu_lf) / ga;
  m.H = upper_gamma(d.alpha - 0.5, x) / ga;
  return m;
}

// Large-t forms of G and H for alpha < 1/2.
inline Memory memory_asymptotic(double t, const FrequencyDistribution& d) {
  const double ga = std::tgamma(d.alpha), r = t / d.t_c;
  return {std::pow(r, -d.alpha) / (d.alpha * ga), 2.0 * std::pow(r, 0.5 - d.alpha) / (ga * (1.0 - 2.0 * d.alpha))};
}

// Cell-integrated Psi(s) = 2/sqrt(pi s) on [k delta, (k+1) delta].
inline double psi_weight(std::size_t k, double delta) {
  return 4.0 / std::sqrt(std::numbers::pi) * std::sqrt(delta) *
         (std::sqrt(static_cast<double>(k) + 1.0) - std::sqrt(static_cast<double>(k)));
}

// Lower-triangular discretization of M(t, tau) = G(t) Psi(t - tau) + H(t) sqrt(t_c) delta(t - tau)
// on t_i = i delta: M[i][j] = G_i W_{i-j} + [i == j] H_i sqrt(t_c). Entries are produced on
// demand; dense M and K are filled only when asked for.
struct KernelMatrix {
  std::vector<double> times;
  double delta = 1.0;
  double sqrt_tc = 1.0;
  std::vector<double> G, H, W;
  std::vector<double> K;  // dense row-major inverse, empty until invert_kernel

  std::size_t n() const { return times.size(); }
  double m(std::size_t i, std::size_t j) const {
    if (j > i) return 0.0;
    return G[i] * W[i - j] + (i == j ? H[i] * sqrt_tc : 0.0);
  }
  double k(std::size_t i, std::size_t j) const { return K.at(i * n() + j); }

  // y = M v
  std::vector<double> apply(const std::vector<double>& v) const {
    const std::size_t N = n();
    std::vector<double> y(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j <= i; ++j) s += W[i - j] * v[j];
      y[i] = G[i] * s + H[i] * sqrt_tc * v[i];
    }
    return y;
  }

  // Solves M v = rhs by forward substitution. Entries of rhs before `first` are taken as
  // zero, which makes column solves start at the diagonal.
  std::vector<double> solve(const std::vector<double>& rhs, std::size_t first = 0) const {
    const std::size_t N = n();
    std::vector<double> v(N, 0.0);
    for (std::size_t i = first; i < N; ++i) {
      double s = 0.0;
      for (std::size_t j = first; j < i; ++j) s += W[i - j] * v[j];
      const double d = G[i] * W[0] + H[i] * sqrt_tc;
      if (!(d > 0.0)) throw numerical_error("kernel has a non-positive diagonal");
      v[i] = (rhs[i] - G[i] * s) / d;
    }
    return v;
  }
};

struct KernelOptions {
  bool h_off = false;  // drop the local H term
};

inline KernelMatrix build_kernel(const std::vector<double>& times, const FrequencyDistribution& d,
                                 KernelOptions opt = {}) {
  d.validate();
  if (times.size() < 2) throw input_error("kernel needs at least two times");
  KernelMatrix km;
  km.times = times;
  km.delta = times[0];
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double step = times[i] - times[i - 1];
    if (!(step > 0.0) || std::abs(step - km.delta) > 1e-9 * km.delta)
      throw input_error("kernel times must be uniform: t_i = i * delta");
  }
  km.sqrt_tc = std::sqrt(d.t_c);
  const std::size_t n = times.size();
  km.G.resize(n);
  km.H.resize(n);
  km.W.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Memory mem = memory_functions(times[i], d);
    km.G[i] = mem.G;
    km.H[i] = opt.h_off ? 0.0 : mem.H;
    km.W[i] = psi_weight(i, km.delta);
  }
  return km;
}

inline std::vector<double> uniform_times(std::size_t n, double delta) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = delta * static_cast<double>(i + 1);
  return t;
}

// Fills the dense causal inverse K = M^{-1} column by column.
inline void invert_kernel(KernelMatrix& km) {
  const std::size_t n = km.n();
  km.K.assign(n * n, 0.0);
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const auto col = km.solve(e, j);
    e[j] = 0.0;
    for (std::size_t i = j; i < n; ++i) km.K[i * n + j] = col[i];
  }
}

// Price response at t_i to unit flow m/(L sqrt D) in cell j: delta * sum_{i' <= i} K[i'][j].
inline std::vector<double> price_response_column(const KernelMatrix& km, std::size_t j) {
  std::vector<double> e(km.n(), 0.0);
  e[j] = 1.0;
  auto v = km.solve(e, j);
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc += v[i] * km.delta;
    v[i] = i >= j ? acc : 0.0;
  }
  return v;
}

struct PropagatorPrice {
  std::vector<double> x_kernel;     // via forward substitution
  std::vector<double> x_asymptotic; // closed-form large-t approximation
};

inline void check_small_flow(const std::vector<double>& m, const ModelParams& p, bool unsafe) {
  double top = 0.0;
  for (double v : m) top = std::max(top, std::abs(v));
  if (!unsafe && top > 0.1 * p.J()) throw regime_error("flow amplitude exceeds 0.1 J");
}

inline std::vector<double> kernel_price(const KernelMatrix& km, const std::vector<double>& m, const ModelParams& p) {
  std::vector<double> rhs(m.size());
  const double s = 1.0 / (p.L() * std::sqrt(p.D));
  for (std::size_t i = 0; i < m.size(); ++i) rhs[i] = m[i] * s;
  auto v = km.solve(rhs);
  double acc = 0.0;
  for (double& e : v) {
    acc += e * km.delta;
    e = acc;
  }
  return v;
}

// alpha Gamma(alpha) / (L t_c^alpha sqrt D) int_0^t m tau^alpha / sqrt(4 pi (t - tau)) dtau, with m
// constant on cells and tau^alpha taken at cell midpoints.
inline std::vector<double> asymptotic_price(const std::vector<double>& m, double delta, const FrequencyDistribution& d,
                                            const ModelParams& p) {
  const std::size_t n = m.size();
  const double pre = std::tgamma(d.alpha + 1.0) / (p.L() * std::pow(d.t_c, d.alpha) * std::sqrt(p.D)) /
                     std::sqrt(4.0 * std::numbers::pi);
  std::vector<double> w(n), x(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = m[j] * std::pow((static_cast<double>(j) + 0.5) * delta, d.alpha);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i + 1) * delta;
    double s = 0.0;
    for (std::size_t j = 0; j <= i; ++j) {
      const double a = static_cast<double>(j) * delta, b = a + delta;
      s += w[j] * 2.0 * (std::sqrt(t - a) - std::sqrt(std::max(0.0, t - b)));
    }
    x[i] = pre * s;
  }
  return x;
}

inline PropagatorPrice propagator_price(const FlowSeries& flow, const FrequencyDistribution& d, const ModelParams& p,
                                        bool unsafe = false, bool with_asymptotic = true) {
  check_small_flow(flow.samples, p, unsafe);
  const auto km = build_kernel(uniform_times(flow.samples.size(), flow.dt), d);
  PropagatorPrice out;
  out.x_kernel = kernel_price(km, flow.samples, p);
  if (with_asymptotic) out.x_asymptotic = asymptotic_price(flow.samples, flow.dt, d, p);
  return out;
}

struct DiffusionFit {
  double exponent = 0.0;
  double error = 0.0;  // bootstrap standard error
  double t_lo = 0.0, t_hi = 0.0;
  std::vector<double> t, msd;  // ensemble <x_t^2>
};

// Exponent of <x_t^2> over the top two decades of t, bootstrapping over realizations.
inline DiffusionFit diffusion_exponent(const std::vector<std::vector<double>>& paths, double delta,
                                       std::size_t n_boot = 200, std::uint64_t boot_seed = 7) {
  if (paths.size() < 2) throw input_error("diffusion_exponent needs several realizations");
  const std::size_t n = paths[0].size();
  if (n < (1u << 14)) throw input_error("diffusion_exponent needs at least 2^14 samples per path");
  for (const auto& p : paths)
    if (p.size() != n) throw input_error("paths must have equal length");
  DiffusionFit f;
  f.t = uniform_times(n, delta);
  f.t_hi = f.t.back();
  f.t_lo = f.t_hi / 100.0;
  // log-spaced sample indices inside the window
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < 60; ++k) {
    const double tt = f.t_lo * std::pow(100.0, k / 59.0);
    const auto i = std::min(n - 1, static_cast<std::size_t>(std::llround(tt / delta)) - 1);
    if (idx.empty() || i != idx.back()) idx.push_back(i);
  }
  auto fit_of = [&](const std::vector<std::size_t>& pick) {
    std::vector<double> lx, ly;
    for (std::size_t i : idx) {
      double s = 0.0;
      for (std::size_t r : pick) s += paths[r][i] * paths[r][i];
      lx.push_back(std::log(f.t[i]));
      ly.push_back(std::log(s / double(pick.size())));
    }
    return fit_line(lx, ly).slope;
  };
  const std::size_t R = paths.size();
  std::vector<std::size_t> all(R);
  for (std::size_t r = 0; r < R; ++r) all[r] = r;
  f.exponent = fit_of(all);
  f.msd.assign(n, 0.0);
  for (const auto& p : paths)
    for (std::size_t i = 0; i < n; ++i) f.msd[i] += p[i] * p[i] / double(R);
  Philox4x32 rng(boot_seed, 0xD1FFull);
  double s = 0.0, s2 = 0.0;
  for (std::size_t b = 0; b < n_boot; ++b) {
    std::vector<std::size_t> pick(R);
    for (auto& p : pick) p = static_cast<std::size_t>(rng.uniform() * R);
    const double e = fit_of(pick);
    s += e;
    s2 += e * e;
  }
  if (n_boot > 1) f.error = std::sqrt(std::max(0.0, (s2 - s * s / n_boot) / (n_boot - 1)));
  return f;
}

// J_nu = J_hf (nu t_c)^zeta
struct TradeRateProfile {
  double J_hf = 1.0;
  double zeta = 0.15;

  double J_nu(double nu, double t_c) const { return J_hf * std::pow(nu * t_c, zeta); }
  double J_total(const FrequencyDistribution& d) const {
    return J_hf * std::tgamma(zeta + d.alpha) / std::tgamma(d.alpha);
  }
  // nu* t_c = (m0 / J_hf)^{1/zeta}
  double nu_star(double m0, double t_c) const { return std::pow(m0 / J_hf, 1.0 / zeta) / t_c; }
  double upsilon(double t_c) const { return J_hf * t_c; }
  // Volume beyond which the late (square-root-like) branch applies.
  double volume_threshold(double m0, double t_c) const {
    return upsilon(t_c) * std::pow(J_hf / m0, (1.0 - zeta) / zeta);
  }
  void validate(const FrequencyDistribution& d) const {
    if (!(J_hf > 0.0)) throw input_error("J_hf must be positive");
    if (!(zeta > 0.0)) throw input_error("zeta must be positive");
    if (!(d.alpha + zeta < 0.5)) throw input_error("alpha + zeta must be below 1/2");
  }
};

struct MemoryZeta {
  double G = 0.0, H = 0.0;        // exact (incomplete gamma)
  double G_asym = 0.0, H_asym = 0.0;
};

// G_zeta(t) = int_0^{1/t} rho (nu t_c)^zeta, H_zeta(t) = int_{1/t}^inf rho (nu t_c)^{zeta - 1/2}.
inline MemoryZeta memory_functions_zeta(double t, const FrequencyDistribution& d, const TradeRateProfile& pr) {
  if (!(t > 0.0)) throw std::domain_error("memory_functions_zeta needs t > 0");
  MemoryZeta m;
  const double a = d.alpha + pr.zeta;
  if (d.alpha == 0.0) {
    m.G = m.G_asym = pr.zeta == 0.0 ? 1.0 : 0.0;
    return m;
  }
  const double ga = std::tgamma(d.alpha), x = d.t_c / t;
  m.G = lower_gamma(a, x) / ga;
  m.H = upper_gamma(a - 0.5, x) / ga;
  m.G_asym = std::pow(x, a) / (ga * a);
  m.H_asym = std::pow(x, a - 0.5) / (ga * (0.5 - a));
  return m;
}

struct MultiMetaorderOptions {
  bool h_off = false;
  bool use_switch = true;  // false: keep the early branch for all t
  bool unsafe = false;
};

struct MultiMetaorderResult {
  std::vector<double> t, x, xdot;
  double t_switch = 0.0;
  std::size_t switch_index = 0;
  double jump = 0.0;  // |xdot| ratio across the switch
};

// Marches the meta-order price equation on an increasing grid t_grid (t_grid[0] > 0; the
// origin is added). Early branch: product integration of Psi against piecewise-constant
// xdot. Late branch: positive root of the quadratic in xdot.
inline MultiMetaorderResult metaorder_multi(double m0, const TradeRateProfile& pr, const FrequencyDistribution& d,
                                            const std::vector<double>& t_grid, double D = 1.0,
                                            MultiMetaorderOptions opt = {}) {
  d.validate();
  pr.validate(d);
  if (!opt.unsafe && !(m0 <= 0.1 * pr.J_hf)) throw regime_error("metaorder_multi needs m0 <= 0.1 J_hf");
  if (!(m0 > 0.0)) throw input_error("m0 must be positive");
  if (t_grid.empty() || !(t_grid[0] > 0.0)) throw input_error("t grid must start above 0");
  MultiMetaorderResult r;
  r.t.push_back(0.0);
  for (double v : t_grid) {
    if (!(v > r.t.back())) throw input_error("t grid must be increasing");
    r.t.push_back(v);
  }
  const std::size_t n = r.t.size();
  r.x.assign(n, 0.0);
  r.xdot.assign(n, 0.0);
  r.t_switch = opt.use_switch ? 1.0 / pr.nu_star(m0, d.t_c) : kInf;
  const double c = m0 * std::sqrt(D) / pr.J_hf, sq = std::sqrt(d.t_c), k4 = 4.0 / std::sqrt(std::numbers::pi);
  r.switch_index = n;
  for (std::size_t i = 1; i < n; ++i) {
    const double ti = r.t[i];
    const MemoryZeta mz = memory_functions_zeta(ti, d, pr);
    const double H = opt.h_off ? 0.0 : mz.H;
    if (ti <= r.t_switch) {
      double hist = 0.0;
      for (std::size_t j = 1; j < i; ++j) hist += r.xdot[j] * k4 * (std::sqrt(ti - r.t[j - 1]) - std::sqrt(ti - r.t[j]));
      const double wii = k4 * std::sqrt(ti - r.t[i - 1]);
      r.xdot[i] = (c - mz.G * hist) / (mz.G * wii + sq * H);
    } else {
      if (r.switch_index == n) r.switch_index = i;
      const double h = ti - r.t[i - 1];
      const double A = mz.G * h / (2.0 * std::sqrt(D));
      const double B = mz.G * r.x[i - 1] / (2.0 * std::sqrt(D)) + sq * H;
      r.xdot[i] = 2.0 * c / (B + std::sqrt(B * B + 4.0 * A * c));
    }
    if (!std::isfinite(r.xdot[i]) || r.xdot[i] < 0.0) throw numerical_error("metaorder_multi: invalid velocity");
    r.x[i] = r.x[i - 1] + r.xdot[i] * (ti - r.t[i - 1]);
  }
  if (r.switch_index < n && r.switch_index > 1) {
    const std::size_t s = r.switch_index;
    r.jump = r.xdot[s] / r.xdot[s - 1];
    // x itself must stay continuous: the increment over the switching cell may not
    // exceed the smooth extrapolation from the previous cell by more than 10x.
    const double prev = r.x[s - 1] - r.x[s - 2];
    const double expect = prev * (r.t[s] - r.t[s - 1]) / (r.t[s - 1] - r.t[s - 2]);
    if (r.x[s] - r.x[s - 1] > 10.0 * expect + 1e-12)
      throw numerical_error("metaorder_multi: price discontinuous at the branch switch");
  }
  return r;
}

}  // namespace llob
