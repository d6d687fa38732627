#pragma once

// Seeded synthesis of primary-user signals and AWGN, and framing of sample
// streams into L x N snapshot matrices for covariance estimation.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace specsense {

using ComplexSample = std::complex<double>;
using SampleStream = std::vector<ComplexSample>;

enum class Hypothesis { H0, H1 };

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

/// Independent generator substreams within one trial.
enum class StreamRole : std::uint64_t {
  signal = 1,
  noise_h1 = 2,
  noise_h0 = 3,
  mismatch = 4,
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Counter-based split of a master seed into a per-(trial, role) seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial,
                                    StreamRole role) noexcept {
  std::uint64_t s = detail::splitmix64(master);
  s = detail::splitmix64(s ^ (trial * 0xd1342543de82ef95ULL));
  return detail::splitmix64(s ^ static_cast<std::uint64_t>(role));
}

// ---------------------------------------------------------------------------
// Sample frame
// ---------------------------------------------------------------------------

/// L x N matrix of complex samples. Column j is the length-L snapshot of
/// consecutive samples j*L .. j*L+L-1; storage is column-major.
class SampleFrame {
 public:
  SampleFrame(std::size_t rows, std::size_t cols, std::vector<ComplexSample> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows_ < 2) {
      throw std::invalid_argument("SampleFrame: L must be >= 2, got " + std::to_string(rows_));
    }
    if (cols_ < rows_) {
      throw std::invalid_argument("SampleFrame: N must be >= L (L=" + std::to_string(rows_) +
                                  ", N=" + std::to_string(cols_) + ")");
    }
    if (data_.size() != rows_ * cols_) {
      throw std::invalid_argument("SampleFrame: data size does not equal L*N");
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  const ComplexSample& operator()(std::size_t row, std::size_t col) const noexcept {
    return data_[col * rows_ + row];
  }

  std::span<const ComplexSample> column(std::size_t col) const noexcept {
    return {data_.data() + col * rows_, rows_};
  }

  /// Column-major flattening; equals the framed prefix of the source stream.
  std::span<const ComplexSample> flat() const noexcept { return data_; }

  /// Frame with every sample multiplied by `c`.
  SampleFrame scaled(double c) const {
    std::vector<ComplexSample> d(data_);
    for (auto& v : d) v *= c;
    return {rows_, cols_, std::move(d)};
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<ComplexSample> data_;
};

/// Places the first L*N samples column-major into an L x N frame.
inline SampleFrame frame(std::span<const ComplexSample> stream, std::size_t l, std::size_t n) {
  if (stream.size() < l * n) {
    throw std::invalid_argument("frame: stream has " + std::to_string(stream.size()) +
                                " samples, need L*N = " + std::to_string(l * n));
  }
  return {l, n, std::vector<ComplexSample>(stream.begin(), stream.begin() + static_cast<std::ptrdiff_t>(l * n))};
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

/// Constant-envelope QPSK, each symbol held for `samples_per_symbol` samples.
/// Every sample has |x|^2 = sigma_s2.
inline SampleStream generate_qpsk(std::size_t n_samples, double sigma_s2, std::uint64_t seed,
                                  std::size_t samples_per_symbol = 1) {
  if (n_samples == 0) throw std::invalid_argument("generate_qpsk: n_samples must be > 0");
  if (!(sigma_s2 > 0.0) || !std::isfinite(sigma_s2)) {
    throw std::invalid_argument("generate_qpsk: sigma_s2 must be > 0");
  }
  if (samples_per_symbol == 0) {
    throw std::invalid_argument("generate_qpsk: samples_per_symbol must be > 0");
  }

  const double a = std::sqrt(sigma_s2 / 2.0);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> symbol(0, 3);

  SampleStream out;
  out.reserve(n_samples);
  ComplexSample current;
  for (std::size_t i = 0; i < n_samples; ++i) {
    if (i % samples_per_symbol == 0) {
      const int s = symbol(rng);
      current = {(s & 1) ? -a : a, (s & 2) ? -a : a};
    }
    out.push_back(current);
  }
  return out;
}

/// Adds circularly symmetric complex Gaussian noise of total variance sigma_w2
/// (sigma_w2/2 per real component).
inline SampleStream add_awgn(std::span<const ComplexSample> stream, double sigma_w2,
                             std::uint64_t seed) {
  if (!(sigma_w2 > 0.0) || !std::isfinite(sigma_w2)) {
    throw std::invalid_argument("add_awgn: sigma_w2 must be > 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(sigma_w2 / 2.0));

  SampleStream out;
  out.reserve(stream.size());
  for (const auto& x : stream) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    out.emplace_back(x.real() + re, x.imag() + im);
  }
  return out;
}

inline double snr_db(double sigma_s2, double sigma_w2) {
  if (!(sigma_s2 > 0.0) || !(sigma_w2 > 0.0)) {
    throw std::invalid_argument("snr_db: powers must be > 0");
  }
  return 10.0 * std::log10(sigma_s2 / sigma_w2);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

struct ScenarioSpec {
  double sigma_s2 = 0.0;
  double sigma_w2 = 1.0;
  Hypothesis hypothesis = Hypothesis::H1;
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  std::size_t samples_per_symbol = 1;

  void validate() const {
    if (!(sigma_s2 >= 0.0)) throw std::invalid_argument("ScenarioSpec: sigma_s2 must be >= 0");
    if (!(sigma_w2 > 0.0)) throw std::invalid_argument("ScenarioSpec: sigma_w2 must be > 0");
    if (n_samples == 0) throw std::invalid_argument("ScenarioSpec: n_samples must be > 0");
  }
};

/// Received stream y(n) for a scenario: w(n) under H0, x(n) + w(n) under H1.
/// Signal and noise come from independent substreams of `seed`.
inline SampleStream synthesize(const ScenarioSpec& spec) {
  spec.validate();
  const auto noise_role = spec.hypothesis == Hypothesis::H1 ? StreamRole::noise_h1 : StreamRole::noise_h0;
  const std::uint64_t noise_seed = derive_seed(spec.seed, 0, noise_role);
  if (spec.hypothesis == Hypothesis::H0 || spec.sigma_s2 == 0.0) {
    const SampleStream zeros(spec.n_samples);
    return add_awgn(zeros, spec.sigma_w2, noise_seed);
  }
  const auto x = generate_qpsk(spec.n_samples, spec.sigma_s2, derive_seed(spec.seed, 0, StreamRole::signal),
                               spec.samples_per_symbol);
  return add_awgn(x, spec.sigma_w2, noise_seed);
}

}  // namespace specsense
