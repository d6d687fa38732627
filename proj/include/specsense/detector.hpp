#pragma once

// Energy detection: test statistic, Gaussian Q-function, closed-form Pd/Pfa
// under the Gaussian approximation, and static/dynamic threshold rules.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>

#include "specsense/signal_model.hpp"

namespace specsense {

struct EnergyStatistic {
  double value = 0.0;
  std::size_t n = 0;
};

enum class Verdict { AbsentH0, PresentH1 };

struct SensingDecision {
  EnergyStatistic statistic;
  double threshold = 0.0;
  Verdict verdict = Verdict::AbsentH0;
};

/// Threshold scales with an assumed (nominal) noise variance F.
struct StaticThreshold {
  double factor = 1.0;
};
/// Threshold scales with the blind noise estimate of the current frame.
struct DynamicThreshold {};

using ThresholdMode = std::variant<StaticThreshold, DynamicThreshold>;

inline bool is_dynamic(const ThresholdMode& m) noexcept {
  return std::holds_alternative<DynamicThreshold>(m);
}

/// Sum of squared magnitudes over every sample.
inline EnergyStatistic energy_statistic(std::span<const ComplexSample> samples) {
  if (samples.empty()) throw std::invalid_argument("energy_statistic: empty input");
  double acc = 0.0;
  for (const auto& y : samples) acc += std::norm(y);
  return {acc, samples.size()};
}

/// Energy over `n` real degrees of freedom taken from the head of a complex
/// stream: 2 * sum |y|^2 over the first n/2 samples. With y of total complex
/// variance s2 this has mean n*s2 and variance 2*n*s2^2 under H0, the moments
/// the closed-form Pd/Pfa expressions assume.
inline EnergyStatistic detection_statistic(std::span<const ComplexSample> stream, std::size_t n) {
  if (n == 0 || n % 2 != 0) {
    throw std::invalid_argument("detection_statistic: n must be a positive even count, got " +
                                std::to_string(n));
  }
  if (stream.size() < n / 2) {
    throw std::invalid_argument("detection_statistic: stream shorter than n/2 complex samples");
  }
  auto e = energy_statistic(stream.first(n / 2));
  return {2.0 * e.value, n};
}

/// Standard Gaussian tail probability.
inline double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Inverse of q_function by bisection on [-40, 40].
inline double q_inverse(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("q_inverse: p must lie in (0, 1), got " + std::to_string(p));
  }
  double lo = -40.0;
  double hi = 40.0;
  // Q is decreasing: Q(lo) > p > Q(hi).
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (q_function(mid) > p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace detail {

inline void check_threshold_args(double target_pfa, std::size_t n) {
  if (!(target_pfa > 0.0 && target_pfa < 1.0)) {
    throw std::invalid_argument("target_pfa must lie in (0, 1), got " + std::to_string(target_pfa));
  }
  if (n == 0) throw std::invalid_argument("sample count n must be >= 1");
}

inline double unit_threshold(double target_pfa, std::size_t n) {
  const double nn = static_cast<double>(n);
  return q_inverse(target_pfa) * std::sqrt(2.0 * nn) + nn;
}

}  // namespace detail

/// F * (Qinv(Pfa) * sqrt(2N) + N). F is the assumed nominal noise variance.
inline double static_threshold(double factor, double target_pfa, std::size_t n) {
  if (!(factor > 0.0)) throw std::invalid_argument("static_threshold: factor must be > 0");
  detail::check_threshold_args(target_pfa, n);
  return factor * detail::unit_threshold(target_pfa, n);
}

/// sigma_hat2 * (Qinv(Pfa) * sqrt(2N) + N).
inline double dynamic_threshold(double sigma_hat2, double target_pfa, std::size_t n) {
  if (!(sigma_hat2 > 0.0)) throw std::invalid_argument("dynamic_threshold: sigma_hat2 must be > 0");
  detail::check_threshold_args(target_pfa, n);
  return sigma_hat2 * detail::unit_threshold(target_pfa, n);
}

/// PresentH1 iff value > threshold; a tie decides AbsentH0.
inline SensingDecision decide(const EnergyStatistic& stat, double threshold) {
  if (!std::isfinite(threshold)) throw std::invalid_argument("decide: threshold must be finite");
  return {stat, threshold, stat.value > threshold ? Verdict::PresentH1 : Verdict::AbsentH0};
}

inline double closed_form_pd(double lambda, std::size_t n, double sigma_w2, double sigma_s2) {
  if (!(sigma_w2 > 0.0)) throw std::invalid_argument("closed_form_pd: sigma_w2 must be > 0");
  const double nn = static_cast<double>(n);
  const double total = sigma_w2 + sigma_s2;
  return q_function((lambda - nn * total) / (total * std::sqrt(2.0 * nn)));
}

inline double closed_form_pfa(double lambda, std::size_t n, double sigma_w2) {
  if (!(sigma_w2 > 0.0)) throw std::invalid_argument("closed_form_pfa: sigma_w2 must be > 0");
  const double nn = static_cast<double>(n);
  return q_function((lambda - nn * sigma_w2) / (sigma_w2 * std::sqrt(2.0 * nn)));
}

}  // namespace specsense
