#pragma once

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <limits>
#include <numbers>
#include <vector>

#include "llob/errors.hpp"
#include "llob/fit.hpp"

namespace llob {

// Philox4x32-10 counter-based generator. The 128-bit counter is (block index, stream),
// the key is the seed, so stream s of seed k is independent of how many other
// streams exist or in which order they are drawn.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += W0;
        key[1] += W1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

  result_type operator()() {
    if (pos_ == 4) {
      buf_ = block({static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                    static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                   key_);
      ++counter_;
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = (*this)(), lo = (*this)();
    return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
  }

  // Standard normal pair by Box-Muller; implemented here so output does not depend on
  // the standard library's distribution algorithms.
  std::pair<double, double> normal_pair() {
    const double u1 = 1.0 - uniform(), u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

struct FlowSeries {
  std::vector<double> samples;
  double dt = 1.0;
  double gamma = 0.5;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

inline bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

namespace detail {
// In-place complex DFT (forward sign) of length n.
inline void dft(std::vector<std::complex<double>>& v) {
  auto* p = reinterpret_cast<fftw_complex*>(v.data());
  fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(v.size()), p, p, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
}
}  // namespace detail

// Circulant embedding of C(l) = amplitude (1 + l)^{-gamma}, l = 0..n, into size 2n.
class CirculantEmbedding {
 public:
  CirculantEmbedding(std::size_t n, double gamma, double amplitude) : n_(n) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw input_error("gamma must be in (0, 1)");
    if (!is_power_of_two(n)) throw input_error("series length must be a power of two");
    if (!(amplitude > 0.0)) throw input_error("amplitude must be positive");
    const std::size_t N = 2 * n;
    std::vector<std::complex<double>> row(N);
    for (std::size_t k = 0; k <= n; ++k) row[k] = amplitude * std::pow(1.0 + static_cast<double>(k), -gamma);
    for (std::size_t k = n + 1; k < N; ++k) row[k] = row[N - k];
    detail::dft(row);
    eig_.resize(N);
    double top = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      eig_[k] = row[k].real();
      top = std::max(top, eig_[k]);
    }
    min_eig_ = *std::min_element(eig_.begin(), eig_.end());
    for (double& e : eig_) {
      if (e < 0.0) {
        if (-e > 1e-6 * top) throw numerical_error("circulant embedding has a significantly negative eigenvalue");
        std::fprintf(stderr, "warning: clipping circulant eigenvalue %.3e\n", e);
        e = 0.0;
      }
    }
    scale_.resize(N);
    for (std::size_t k = 0; k < N; ++k) scale_[k] = std::sqrt(eig_[k] / static_cast<double>(N));
  }

  double min_eigenvalue() const { return min_eig_; }

  std::vector<double> sample(Philox4x32& rng) const {
    const std::size_t N = 2 * n_;
    std::vector<std::complex<double>> z(N);
    for (std::size_t k = 0; k < N; ++k) {
      const auto [a, b] = rng.normal_pair();
      z[k] = scale_[k] * std::complex<double>(a, b);
    }
    detail::dft(z);
    std::vector<double> out(n_);
    for (std::size_t k = 0; k < n_; ++k) out[k] = z[k].real();
    return out;
  }

 private:
  std::size_t n_;
  std::vector<double> eig_, scale_;
  double min_eig_ = 0.0;
};

inline FlowSeries generate_long_memory_flow(std::size_t n, double gamma, double amplitude, std::uint64_t seed,
                                            std::uint64_t stream = 0, double dt = 1.0) {
  CirculantEmbedding emb(n, gamma, amplitude);
  Philox4x32 rng(seed, stream);
  return {emb.sample(rng), dt, gamma, seed, stream};
}

// Sample autocovariance sum_t m_t m_{t+l} / (n - l) for l = 0..max_lag (mean known to be 0).
// Sign-like flow: each sample replaced by amplitude * sign(m). The autocorrelation of
// the signs is (2/pi) arcsin of the Gaussian one, so the tail exponent is unchanged.
inline FlowSeries signed_flow(const FlowSeries& f, double amplitude) {
  if (!(amplitude > 0.0)) throw input_error("amplitude must be positive");
  FlowSeries out = f;
  for (double& v : out.samples) v = v > 0.0 ? amplitude : (v < 0.0 ? -amplitude : 0.0);
  return out;
}

namespace detail {
inline std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}
}  // namespace detail

// CSV (t, m) with a leading comment line carrying seed, stream, gamma and dt.
inline void write_flow_csv(std::ostream& o, const FlowSeries& f) {
  o << "# seed=" << f.seed << " stream=" << f.stream << " gamma=" << detail::shortest(f.gamma)
    << " dt=" << detail::shortest(f.dt) << '\n';
  o << "t,m\n";
  for (std::size_t i = 0; i < f.samples.size(); ++i)
    o << detail::shortest(f.dt * static_cast<double>(i)) << ',' << detail::shortest(f.samples[i]) << '\n';
}

inline FlowSeries read_flow_csv(std::istream& in) {
  FlowSeries f;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw input_error("flow csv: missing header comment");
  std::istringstream h(line.substr(2));
  std::string kv;
  int found = 0;
  while (h >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw input_error("flow csv: bad header field '" + kv + "'");
    const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
    try {
      if (k == "seed") f.seed = std::stoull(v), ++found;
      else if (k == "stream") f.stream = std::stoull(v), ++found;
      else if (k == "gamma") f.gamma = std::stod(v), ++found;
      else if (k == "dt") f.dt = std::stod(v), ++found;
    } catch (const std::exception&) {
      throw input_error("flow csv: bad header value '" + kv + "'");
    }
  }
  if (found != 4) throw input_error("flow csv: header needs seed, stream, gamma and dt");
  if (!std::getline(in, line) || line != "t,m") throw input_error("flow csv: expected column header t,m");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw input_error("flow csv: expected t,m row");
    double m = 0.0;
    const char* b = line.data() + comma + 1;
    const char* e = line.data() + line.size();
    const auto [p, ec] = std::from_chars(b, e, m);
    if (ec != std::errc() || p != e) throw input_error("flow csv: bad value '" + line + "'");
    f.samples.push_back(m);
  }
  return f;
}

inline std::vector<double> sample_autocov(const std::vector<double>& m, std::size_t max_lag) {
  const std::size_t n = m.size();
  std::size_t N = 1;
  while (N < 2 * n) N <<= 1;
  std::vector<std::complex<double>> v(N);
  for (std::size_t i = 0; i < n; ++i) v[i] = m[i];
  detail::dft(v);
  for (auto& c : v) c = std::norm(c);
  detail::dft(v);  // forward again: real symmetric input, so this is N times the inverse
  std::vector<double> out(std::min(max_lag, n - 1) + 1);
  for (std::size_t l = 0; l < out.size(); ++l) out[l] = v[(N - l) % N].real() / N / static_cast<double>(n - l);
  return out;
}

struct GammaEstimate {
  double gamma = 0.0;
  double error = 0.0;
  double r2 = 0.0;
  bool reliable = false;
};

namespace detail {
inline std::vector<std::size_t> log_lags(std::size_t lo, std::size_t hi, std::size_t count) {
  std::vector<std::size_t> lags;
  for (std::size_t i = 0; i < count; ++i) {
    const auto l = static_cast<std::size_t>(
        std::llround(lo * std::pow(double(hi) / lo, double(i) / double(count - 1))));
    if (lags.empty() || l != lags.back()) lags.push_back(l);
  }
  return lags;
}

inline bool fit_gamma(const std::vector<double>& c, const std::vector<std::size_t>& lags, LineFit& f) {
  std::vector<double> x, y;
  for (std::size_t l : lags)
    if (c[l] > 0.0) {
      x.push_back(std::log(double(l)));
      y.push_back(std::log(c[l]));
    }
  if (x.size() * 2 < lags.size() || x.size() < 3) return false;
  f = fit_line(x, y);
  return true;
}
}  // namespace detail

// Exponent of the ensemble-averaged autocovariance over [lag_lo, lag_hi], with a
// bootstrap over realizations.
inline GammaEstimate autocov_exponent(const std::vector<FlowSeries>& ensemble, std::size_t lag_lo = 10,
                                      std::size_t lag_hi = 1000, std::size_t n_boot = 200,
                                      std::uint64_t boot_seed = 1) {
  if (ensemble.size() < 16) throw input_error("autocov_exponent needs at least 16 realizations");
  if (lag_lo < 1 || lag_hi < 2 * lag_lo) throw input_error("lag window too short");
  for (const auto& f : ensemble)
    if (lag_hi >= f.samples.size()) throw input_error("lag window longer than the series");
  const std::size_t R = ensemble.size();
  std::vector<std::vector<double>> ac(R);
  for (std::size_t r = 0; r < R; ++r) ac[r] = sample_autocov(ensemble[r].samples, lag_hi);
  const auto lags = detail::log_lags(lag_lo, lag_hi, 30);
  auto mean_of = [&](const std::vector<std::size_t>& pick) {
    std::vector<double> c(lag_hi + 1, 0.0);
    for (std::size_t r : pick)
      for (std::size_t l = 0; l <= lag_hi; ++l) c[l] += ac[r][l];
    for (double& v : c) v /= double(pick.size());
    return c;
  };
  std::vector<std::size_t> all(R);
  for (std::size_t r = 0; r < R; ++r) all[r] = r;
  GammaEstimate est;
  LineFit f;
  if (!detail::fit_gamma(mean_of(all), lags, f)) return est;
  est.gamma = -f.slope;
  est.r2 = f.r2;
  Philox4x32 rng(boot_seed, 0xB00754ull);
  double s = 0.0, s2 = 0.0;
  std::size_t ok = 0;
  for (std::size_t b = 0; b < n_boot; ++b) {
    std::vector<std::size_t> pick(R);
    for (auto& p : pick) p = static_cast<std::size_t>(rng.uniform() * R);
    LineFit fb;
    if (!detail::fit_gamma(mean_of(pick), lags, fb)) continue;
    s += -fb.slope;
    s2 += fb.slope * fb.slope;
    ++ok;
  }
  if (ok > 1) est.error = std::sqrt(std::max(0.0, (s2 - s * s / ok) / (ok - 1)));
  est.reliable = est.r2 >= 0.8 && ok * 2 >= n_boot;
  return est;
}

}  // namespace llob
