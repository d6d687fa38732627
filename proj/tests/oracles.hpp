#pragma once

// Reference computations used only by the tests. Each one takes a different
// numerical route from the library code it checks.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using cd = std::complex<double>;
using Matrix = std::vector<std::vector<cd>>;

/// Standard normal upper tail by composite Simpson over [x, x + 40].
inline double normal_tail(double x, int intervals = 200000) {
  const double a = x;
  const double b = x + 40.0;
  const double h = (b - a) / intervals;
  auto phi = [](double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); };
  long double s = phi(a) + phi(b);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0L : 2.0L) * phi(a + i * h);
  return static_cast<double>(s * h / 3.0L);
}

/// Every term of the MDL description length, evaluated with the plain
/// product form of the geometric mean.
inline std::vector<double> mdl_terms(const std::vector<double>& descending, double n) {
  const std::size_t l = descending.size();
  std::vector<double> terms;
  for (std::size_t k = 0; k < l; ++k) {
    const double m = static_cast<double>(l - k);
    long double prod = 1.0L;
    long double sum = 0.0L;
    for (std::size_t i = k; i < l; ++i) {
      prod *= std::pow(static_cast<long double>(descending[i]), 1.0L / m);
      sum += descending[i];
    }
    const long double theta = sum / m;
    terms.push_back(static_cast<double>(-m * n * std::log(prod / theta) +
                                        0.5L * k * (2.0L * l - k) * std::log(static_cast<long double>(n))));
  }
  return terms;
}

inline std::size_t mdl_argmin(const std::vector<double>& descending, double n) {
  const auto t = mdl_terms(descending, n);
  return static_cast<std::size_t>(std::min_element(t.begin(), t.end()) - t.begin());
}

/// MP CDF by a midpoint rule on the raw density in z.
inline double mp_cdf_midpoint(double z, double p, double s2, int steps = 400000) {
  const double a = s2 * (1 - std::sqrt(p)) * (1 - std::sqrt(p));
  const double b = s2 * (1 + std::sqrt(p)) * (1 + std::sqrt(p));
  if (z <= a) return 0.0;
  const double hi = std::min(z, b);
  const double h = (hi - a) / steps;
  long double s = 0.0L;
  for (int i = 0; i < steps; ++i) {
    const double u = a + (i + 0.5) * h;
    s += std::sqrt((u - a) * (b - u)) / (2.0 * std::numbers::pi * s2 * u * p);
  }
  return static_cast<double>(s * h);
}

/// Random Hermitian positive semidefinite matrix B B^H with B of size dim x (dim+extra).
inline Matrix random_psd(std::size_t dim, std::mt19937_64& rng, std::size_t extra = 2) {
  std::normal_distribution<double> g;
  const std::size_t cols = dim + extra;
  std::vector<std::vector<cd>> b(dim, std::vector<cd>(cols));
  for (auto& row : b)
    for (auto& v : row) v = {g(rng), g(rng)};
  Matrix m(dim, std::vector<cd>(dim));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      cd s = 0;
      for (std::size_t k = 0; k < cols; ++k) s += b[i][k] * std::conj(b[j][k]);
      m[i][j] = s;
    }
  for (std::size_t i = 0; i < dim; ++i) {
    m[i][i] = m[i][i].real();
    for (std::size_t j = i + 1; j < dim; ++j) m[j][i] = std::conj(m[i][j]);
  }
  return m;
}

inline Matrix multiply(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.size();
  Matrix c(n, std::vector<cd>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

/// Characteristic polynomial coefficients c[0..n] of det(xI - A) (c[n] = 1)
/// by Faddeev-LeVerrier. Real for Hermitian A.
inline std::vector<double> char_poly(const Matrix& a) {
  const std::size_t n = a.size();
  std::vector<double> c(n + 1, 0.0);
  c[n] = 1.0;
  Matrix m(n, std::vector<cd>(n));  // M_0 = 0
  for (std::size_t k = 1; k <= n; ++k) {
    // M_k = A M_{k-1} + c_{n-k+1} I
    Matrix am = multiply(a, m);
    for (std::size_t i = 0; i < n; ++i) am[i][i] += c[n - k + 1];
    m = am;
    const Matrix amk = multiply(a, m);
    cd tr = 0;
    for (std::size_t i = 0; i < n; ++i) tr += amk[i][i];
    c[n - k] = -tr.real() / static_cast<double>(k);
  }
  return c;
}

inline double poly_eval(const std::vector<double>& c, double x, double* deriv = nullptr) {
  double v = 0.0, d = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) {
    d = d * x + v;
    v = v * x + c[i];
  }
  if (deriv) *deriv = d;
  return v;
}

/// Real roots of a polynomial known to have only real roots: Newton from an
/// upper bound converges monotonically to the largest root; deflate, repeat,
/// then polish against the original polynomial. Descending order.
inline std::vector<double> real_roots_descending(std::vector<double> c) {
  const std::vector<double> original = c;
  std::vector<double> roots;
  while (c.size() > 1) {
    const std::size_t deg = c.size() - 1;
    double bound = 0.0;
    for (std::size_t i = 0; i < deg; ++i) bound = std::max(bound, std::abs(c[i] / c[deg]));
    double x = 1.0 + bound;
    for (int it = 0; it < 10000; ++it) {
      double d = 0.0;
      const double v = poly_eval(c, x, &d);
      if (d == 0.0) break;
      const double nx = x - v / d;
      if (!(nx < x)) break;
      x = nx;
    }
    roots.push_back(x);
    // Synthetic division by (x - root).
    std::vector<double> q(deg);
    double carry = c[deg];
    for (std::size_t i = deg; i-- > 0;) {
      q[i] = carry;
      carry = c[i] + carry * x;
    }
    c = q;
  }
  for (auto& r : roots) {
    for (int it = 0; it < 50; ++it) {
      double d = 0.0;
      const double v = poly_eval(original, r, &d);
      if (d == 0.0) break;
      const double step = v / d;
      r -= step;
      if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(r))) break;
    }
  }
  std::sort(roots.begin(), roots.end(), std::greater<>());
  return roots;
}

inline std::vector<double> eig_char_poly(const Matrix& a) { return real_roots_descending(char_poly(a)); }

/// Power iteration with Hotelling deflation, for Hermitian PSD matrices.
inline std::vector<double> eig_power_deflation(Matrix a) {
  const std::size_t n = a.size();
  std::vector<double> out;
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> g;
  double scale = 0.0;
  for (const auto& r : a)
    for (const auto& v : r) scale = std::max(scale, std::abs(v));
  for (std::size_t e = 0; e < n; ++e) {
    std::vector<cd> v(n);
    for (auto& x : v) x = {g(rng), g(rng)};
    double rho = 0.0;
    for (int it = 0; it < 2000000; ++it) {
      std::vector<cd> w(n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) w[i] += a[i][j] * v[j];
      double nw = 0.0;
      for (const auto& x : w) nw += std::norm(x);
      nw = std::sqrt(nw);
      if (nw < 1e-300) {
        rho = 0.0;
        break;
      }
      for (auto& x : w) x /= nw;
      // Rayleigh quotient and residual of the normalised iterate.
      std::vector<cd> aw(n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) aw[i] += a[i][j] * w[j];
      cd rq = 0;
      for (std::size_t i = 0; i < n; ++i) rq += std::conj(w[i]) * aw[i];
      rho = rq.real();
      double res = 0.0;
      for (std::size_t i = 0; i < n; ++i) res += std::norm(aw[i] - rho * w[i]);
      v = w;
      if (std::sqrt(res) < 1e-13 * scale) break;
    }
    out.push_back(rho);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a[i][j] -= rho * v[i] * std::conj(v[j]);
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

}  // namespace oracle
