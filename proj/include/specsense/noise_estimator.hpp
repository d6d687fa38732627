#pragma once

// Blind noise-variance estimation from a sample frame.
//
// Pipeline: sample covariance -> Hermitian eigenvalues -> MDL split into
// signal and noise eigenvalue groups -> candidate noise-variance interval from
// the Marcenko-Pastur support edges -> grid search minimising the L2 distance
// between the empirical CDF of the noise eigenvalues and the MP CDF.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "specsense/signal_model.hpp"

namespace specsense {

/// Raised when the frame leaves no noise eigenvalues to fit (K_hat = L-1) or
/// the fit interval is unusable. The Monte Carlo harness counts these.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense L x L complex Hermitian matrix, row-major.
class CovarianceMatrix {
 public:
  explicit CovarianceMatrix(std::size_t dim) : dim_(dim), a_(dim * dim) {}

  CovarianceMatrix(std::size_t dim, std::vector<std::complex<double>> entries)
      : dim_(dim), a_(std::move(entries)) {
    if (a_.size() != dim_ * dim_) throw std::invalid_argument("CovarianceMatrix: entry count != L*L");
  }

  std::size_t dim() const noexcept { return dim_; }
  std::complex<double>& operator()(std::size_t i, std::size_t j) noexcept { return a_[i * dim_ + j]; }
  const std::complex<double>& operator()(std::size_t i, std::size_t j) const noexcept {
    return a_[i * dim_ + j];
  }

  double trace() const noexcept {
    double t = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) t += a_[i * dim_ + i].real();
    return t;
  }

  double frobenius_norm() const noexcept {
    double s = 0.0;
    for (const auto& v : a_) s += std::norm(v);
    return std::sqrt(s);
  }

  /// Largest |a(i,j) - conj(a(j,i))|.
  double hermitian_defect() const noexcept {
    double d = 0.0;
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = i; j < dim_; ++j)
        d = std::max(d, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
    return d;
  }

 private:
  std::size_t dim_;
  std::vector<std::complex<double>> a_;
};

/// Eigenvalues sorted descending, clamped at zero.
struct EigenSpectrum {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double sum() const noexcept {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
};

struct NoiseEstimate {
  double sigma_hat2 = 0.0;
  std::size_t k_hat = 0;
  double beta_hat = 0.0;
  double sigma_lo2 = 0.0;
  double sigma_hi2 = 0.0;
  std::vector<double> fit_scores;
  double p_ratio = 0.0;
  bool degenerate_grid = false;
  EigenSpectrum spectrum;
};

// ---------------------------------------------------------------------------
// Covariance and eigenvalues
// ---------------------------------------------------------------------------

/// (1/N) y y^H over the N snapshot columns of the frame.
inline CovarianceMatrix sample_covariance(const SampleFrame& frame) {
  const std::size_t l = frame.rows();
  const std::size_t n = frame.cols();
  CovarianceMatrix c(l);
  for (std::size_t col = 0; col < n; ++col) {
    const auto y = frame.column(col);
    for (std::size_t i = 0; i < l; ++i) {
      const auto yi = y[i];
      for (std::size_t j = i; j < l; ++j) c(i, j) += yi * std::conj(y[j]);
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < l; ++i) {
    c(i, i) = {c(i, i).real() * inv_n, 0.0};
    for (std::size_t j = i + 1; j < l; ++j) {
      c(i, j) *= inv_n;
      c(j, i) = std::conj(c(i, j));
    }
  }
  return c;
}

/// Cyclic Jacobi eigenvalue iteration for a Hermitian matrix. Converges when
/// the off-diagonal Frobenius norm drops below 1e-12 * ||m||_F; at most 100
/// sweeps.
inline EigenSpectrum eigenvalues_hermitian(const CovarianceMatrix& m) {
  using cd = std::complex<double>;
  constexpr int kMaxSweeps = 100;
  constexpr double kRelTol = 1e-12;

  const std::size_t l = m.dim();
  const double norm = m.frobenius_norm();
  if (m.hermitian_defect() > 1e-10 * norm + 1e-12) {
    throw std::invalid_argument("eigenvalues_hermitian: matrix is not Hermitian");
  }

  CovarianceMatrix a = m;
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = 0; j < l; ++j)
        if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
  };

  const double target = kRelTol * norm;
  bool converged = norm == 0.0 || off_norm() <= target;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    for (std::size_t p = 0; p + 1 < l; ++p) {
      for (std::size_t q = p + 1; q < l; ++q) {
        const cd apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag == 0.0) continue;

        // Phase e^{-i phi} makes the (p,q) entry real, then a real rotation
        // annihilates it. U = diag(1, e^{-i phi}) * [[c, s], [-s, c]].
        const cd phase = std::conj(apq) / mag;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const cd upp = c;
        const cd upq = s;
        const cd uqp = -s * phase;
        const cd uqq = c * phase;

        for (std::size_t k = 0; k < l; ++k) {  // A <- A U
          const cd akp = a(k, p);
          const cd akq = a(k, q);
          a(k, p) = akp * upp + akq * uqp;
          a(k, q) = akp * upq + akq * uqq;
        }
        for (std::size_t k = 0; k < l; ++k) {  // A <- U^H A
          const cd apk = a(p, k);
          const cd aqk = a(q, k);
          a(p, k) = std::conj(upp) * apk + std::conj(uqp) * aqk;
          a(q, k) = std::conj(upq) * apk + std::conj(uqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
    }
    converged = off_norm() <= target;
  }
  if (!converged) {
    throw std::runtime_error("eigenvalues_hermitian: Jacobi iteration did not converge in 100 sweeps");
  }

  EigenSpectrum out;
  out.values.reserve(l);
  for (std::size_t i = 0; i < l; ++i) out.values.push_back(std::max(0.0, a(i, i).real()));
  std::sort(out.values.begin(), out.values.end(), std::greater<>());
  return out;
}

// ---------------------------------------------------------------------------
// MDL model order
// ---------------------------------------------------------------------------

/// MDL description length for a signal count K:
///   -(L-K) N log(phi(K)/theta(K)) + K(2L-K) log(N) / 2
/// with phi/theta the geometric/arithmetic means of the trailing L-K values.
inline double mdl_criterion(std::span<const double> descending, std::size_t n, std::size_t k) {
  constexpr double kFloor = 1e-300;
  const std::size_t l = descending.size();
  const std::size_t m = l - k;
  double log_sum = 0.0;
  double sum = 0.0;
  for (std::size_t i = k; i < l; ++i) {
    const double v = std::max(descending[i], kFloor);
    log_sum += std::log(v);
    sum += v;
  }
  const double log_phi = log_sum / static_cast<double>(m);
  const double log_theta = std::log(std::max(sum / static_cast<double>(m), kFloor));
  const double nn = static_cast<double>(n);
  const double kk = static_cast<double>(k);
  const double ll = static_cast<double>(l);
  return -static_cast<double>(m) * nn * (log_phi - log_theta) + 0.5 * kk * (2.0 * ll - kk) * std::log(nn);
}

/// argmin over K in [0, L-1] of the MDL criterion; ties go to the smaller K.
inline std::size_t mdl_signal_count(const EigenSpectrum& spectrum, std::size_t n) {
  const std::size_t l = spectrum.size();
  if (l < 2) throw std::invalid_argument("mdl_signal_count: need at least 2 eigenvalues");
  if (n < l) throw std::invalid_argument("mdl_signal_count: n must be >= L");
  std::size_t best_k = 0;
  double best = mdl_criterion(spectrum.values, n, 0);
  for (std::size_t k = 1; k < l; ++k) {
    const double v = mdl_criterion(spectrum.values, n, k);
    if (v < best) {
      best = v;
      best_k = k;
    }
  }
  return best_k;
}

// ---------------------------------------------------------------------------
// Marcenko-Pastur fit
// ---------------------------------------------------------------------------

/// Noise-variance search interval: the variances that would put the smallest
/// eigenvalue on the MP lower edge and the largest noise eigenvalue on the MP
/// upper edge. Returned ordered (lo, hi).
inline std::pair<double, double> sigma_bounds(const EigenSpectrum& spectrum, std::size_t k_hat, double p) {
  const std::size_t l = spectrum.size();
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("sigma_bounds: ratio p must lie in (0, 1), got " + std::to_string(p));
  }
  if (l < 2 || k_hat + 1 >= l) {
    throw std::invalid_argument("sigma_bounds: k_hat leaves no noise eigenvalues");
  }
  const double sp = std::sqrt(p);
  const double from_lower_edge = spectrum.values[l - 1] / ((1.0 - sp) * (1.0 - sp));
  const double from_upper_edge = spectrum.values[k_hat] / ((1.0 + sp) * (1.0 + sp));
  return std::minmax(from_lower_edge, from_upper_edge);
}

namespace detail {

template <typename F>
double adaptive_simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                             double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
  return adaptive_simpson_step(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
         adaptive_simpson_step(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double eps) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_step(f, a, b, fa, fm, fb, whole, eps, 48);
}

inline void check_mp_args(double p, double sigma2) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("mp: ratio p must lie in (0, 1)");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("mp: sigma2 must be > 0");
}

}  // namespace detail

inline double mp_lower_edge(double p, double sigma2) {
  const double s = 1.0 - std::sqrt(p);
  return sigma2 * s * s;
}

inline double mp_upper_edge(double p, double sigma2) {
  const double s = 1.0 + std::sqrt(p);
  return sigma2 * s * s;
}

/// Marcenko-Pastur density sqrt((z-a)(b-z)) / (2 pi sigma2 z p) on [a, b].
inline double mp_density(double z, double p, double sigma2) {
  detail::check_mp_args(p, sigma2);
  const double a = mp_lower_edge(p, sigma2);
  const double b = mp_upper_edge(p, sigma2);
  if (z <= a || z >= b) return 0.0;
  return std::sqrt((z - a) * (b - z)) / (2.0 * std::numbers::pi * sigma2 * z * p);
}

/// Marcenko-Pastur CDF by adaptive quadrature of the density. The
/// substitution z = c - r cos(t) removes the square-root endpoint behaviour so
/// the integrand is smooth on [0, pi].
inline double mp_cdf(double z, double p, double sigma2) {
  detail::check_mp_args(p, sigma2);
  const double a = mp_lower_edge(p, sigma2);
  const double b = mp_upper_edge(p, sigma2);
  if (z <= a) return 0.0;
  if (z >= b) return 1.0;

  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  const double t_end = std::acos(std::clamp((c - z) / r, -1.0, 1.0));
  const double scale = r * r / (2.0 * std::numbers::pi * sigma2 * p);
  auto integrand = [&](double t) {
    const double s = std::sin(t);
    return scale * s * s / (c - r * std::cos(t));
  };
  return std::clamp(detail::adaptive_simpson(integrand, 0.0, t_end, 1e-8), 0.0, 1.0);
}

/// Fraction of points <= t.
inline double ecdf(std::span<const double> points, double t) {
  if (points.empty()) throw std::invalid_argument("ecdf: empty point set");
  const auto count = std::count_if(points.begin(), points.end(), [t](double v) { return v <= t; });
  return static_cast<double>(count) / static_cast<double>(points.size());
}

/// L2 distance between the ECDF of the noise eigenvalues and the MP CDF with
/// parameters (p_eff, pi_m), both evaluated at the noise eigenvalues.
inline double goodness_of_fit(std::span<const double> noise_eigs, double pi_m, double p_eff) {
  if (noise_eigs.empty()) throw std::invalid_argument("goodness_of_fit: no noise eigenvalues");
  double s = 0.0;
  for (double v : noise_eigs) {
    const double d = ecdf(noise_eigs, v) - mp_cdf(v, p_eff, pi_m);
    s += d * d;
  }
  return std::sqrt(s);
}

inline constexpr std::size_t kDefaultGridSize = 100;

/// M linearly spaced candidates over [lo, hi], both ends included exactly.
/// A zero-width interval yields the single value lo.
inline std::vector<double> candidate_grid(double lo, double hi, std::size_t m) {
  if (m < 2) throw std::invalid_argument("candidate_grid: M must be >= 2");
  if (!(lo <= hi)) throw std::invalid_argument("candidate_grid: lo must not exceed hi");
  if (lo == hi) return {lo};
  std::vector<double> g(m);
  const double step = (hi - lo) / static_cast<double>(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) g[i] = lo + step * static_cast<double>(i);
  g[m - 1] = hi;
  return g;
}

/// Blind estimate of the noise variance of a frame.
inline NoiseEstimate estimate_noise(const SampleFrame& frame, std::size_t grid_size = kDefaultGridSize) {
  if (grid_size < 2) throw std::invalid_argument("estimate_noise: grid size M must be >= 2");

  const std::size_t l = frame.rows();
  const std::size_t n = frame.cols();

  NoiseEstimate est;
  est.spectrum = eigenvalues_hermitian(sample_covariance(frame));
  est.k_hat = mdl_signal_count(est.spectrum, n);
  if (est.k_hat + 1 >= l) {
    throw EstimationError("estimate_noise: MDL assigned every eigenvalue but one to the signal (K_hat = L-1)");
  }
  est.beta_hat = static_cast<double>(est.k_hat) / static_cast<double>(l);
  est.p_ratio = static_cast<double>(l) / static_cast<double>(n);
  if (!(est.p_ratio < 1.0)) {
    throw std::invalid_argument("estimate_noise: frame needs N > L so that L/N < 1");
  }

  std::tie(est.sigma_lo2, est.sigma_hi2) = sigma_bounds(est.spectrum, est.k_hat, est.p_ratio);
  if (!(est.sigma_lo2 > 0.0)) {
    throw EstimationError("estimate_noise: non-positive noise-variance bound (zero eigenvalue)");
  }

  const double p_eff = (1.0 - est.beta_hat) * est.p_ratio;
  const std::span<const double> noise(est.spectrum.values.data() + est.k_hat, l - est.k_hat);

  const auto grid = candidate_grid(est.sigma_lo2, est.sigma_hi2, grid_size);
  est.degenerate_grid = grid.size() == 1;
  est.fit_scores.reserve(grid.size());
  std::size_t best = 0;
  for (std::size_t m = 0; m < grid.size(); ++m) {
    est.fit_scores.push_back(goodness_of_fit(noise, grid[m], p_eff));
    if (est.fit_scores[m] < est.fit_scores[best]) best = m;
  }
  est.sigma_hat2 = grid[best];
  return est;
}

}  // namespace specsense
