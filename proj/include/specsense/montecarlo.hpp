#pragma once

// Seeded Monte Carlo estimation of detection and false-alarm rates for the
// static and dynamic threshold rules, the three sweep protocols, and the CSV
// result format.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

#include "specsense/detector.hpp"
#include "specsense/noise_estimator.hpp"
#include "specsense/signal_model.hpp"

namespace specsense {

/// Parameters of one Monte Carlo operating point.
///
/// Per trial the true noise variance is sigma_w2_true * 10^(U/10) with U
/// uniform on [-mismatch_db, +mismatch_db]; the signal power scales with it,
/// so the received SNR stays at sigma_s2 / sigma_w2_true. A static threshold
/// assumes noise variance threshold_factor * sigma_nominal2; a dynamic one
/// estimates it blindly from an L x cov_columns frame of the same trial.
struct TrialPlan {
  std::size_t n_trials = 10000;
  std::size_t n = 128;  ///< real degrees of freedom in the energy statistic
  std::size_t l = 8;
  std::size_t cov_columns = 8192;
  double target_pfa = 0.1;
  ThresholdMode mode = StaticThreshold{1.0};
  double sigma_w2_true = 1.0;
  double sigma_nominal2 = 1.0;
  double sigma_s2 = 0.0;
  double mismatch_db = 0.0;
  std::size_t samples_per_symbol = 16;
  std::uint64_t master_seed = 42;
  std::size_t m_grid = kDefaultGridSize;

  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("TrialPlan: " + what); };
    if (n_trials == 0) fail("n_trials must be > 0");
    if (n == 0 || n % 2 != 0) fail("n must be a positive even count");
    if (l < 2) fail("l must be >= 2");
    if (cov_columns <= l) fail("cov_columns must exceed l");
    if (!(target_pfa > 0.0 && target_pfa < 1.0)) fail("target_pfa must lie in (0, 1)");
    if (!(sigma_w2_true > 0.0)) fail("sigma_w2_true must be > 0");
    if (!(sigma_nominal2 > 0.0)) fail("sigma_nominal2 must be > 0");
    if (!(sigma_s2 >= 0.0)) fail("sigma_s2 must be >= 0");
    if (!(mismatch_db >= 0.0)) fail("mismatch_db must be >= 0");
    if (samples_per_symbol == 0) fail("samples_per_symbol must be > 0");
    if (m_grid < 2) fail("m_grid must be >= 2");
    if (const auto* s = std::get_if<StaticThreshold>(&mode); s && !(s->factor > 0.0)) {
      fail("threshold factor must be > 0");
    }
  }
};

struct RunOptions {
  unsigned workers = 1;
};

struct PointResult {
  double pd = 0.0;
  double pfa = 0.0;
  double pd_ci = 0.0;
  double pfa_ci = 0.0;
  std::optional<double> mean_sigma_hat2;
  std::size_t failed_trials = 0;
  std::size_t effective_trials = 0;
};

struct SweepRow {
  double sweep_value = 0.0;
  double pd = 0.0;
  double pfa = 0.0;
  double pd_ci = 0.0;
  double pfa_ci = 0.0;
  std::optional<double> mean_sigma_hat2;
  std::size_t failed_trials = 0;

  bool operator==(const SweepRow&) const = default;
};

struct SweepResult {
  std::string label;
  std::vector<SweepRow> rows;
};

/// 99% normal-approximation binomial half-width.
inline double binomial_ci99(double p_hat, std::size_t trials) {
  if (trials == 0) return 0.0;
  return 2.576 * std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(trials));
}

namespace detail {

struct TrialOutcome {
  bool failed = false;
  bool detected_h1 = false;
  bool detected_h0 = false;
  double sigma_hat2_h1 = 0.0;
  double sigma_hat2_h0 = 0.0;
};

inline TrialOutcome run_trial(const TrialPlan& plan, std::size_t trial) {
  const bool dynamic = is_dynamic(plan.mode);

  double gain = 1.0;
  if (plan.mismatch_db > 0.0) {
    std::mt19937_64 rng(derive_seed(plan.master_seed, trial, StreamRole::mismatch));
    std::uniform_real_distribution<double> u(-plan.mismatch_db, plan.mismatch_db);
    gain = db_to_linear(u(rng));
  }
  const double sigma_w2 = plan.sigma_w2_true * gain;
  const double sigma_s2 = plan.sigma_s2 * gain;

  const std::size_t len = dynamic ? std::max(plan.n / 2, plan.l * plan.cov_columns) : plan.n / 2;
  const SampleStream zeros(len);
  const SampleStream y0 = add_awgn(zeros, sigma_w2, derive_seed(plan.master_seed, trial, StreamRole::noise_h0));
  const SampleStream y1 =
      sigma_s2 > 0.0
          ? add_awgn(generate_qpsk(len, sigma_s2, derive_seed(plan.master_seed, trial, StreamRole::signal),
                                   plan.samples_per_symbol),
                     sigma_w2, derive_seed(plan.master_seed, trial, StreamRole::noise_h1))
          : add_awgn(zeros, sigma_w2, derive_seed(plan.master_seed, trial, StreamRole::noise_h1));

  const auto ted1 = detection_statistic(y1, plan.n);
  const auto ted0 = detection_statistic(y0, plan.n);

  TrialOutcome out;
  if (const auto* s = std::get_if<StaticThreshold>(&plan.mode)) {
    const double lambda = static_threshold(s->factor * plan.sigma_nominal2, plan.target_pfa, plan.n);
    out.detected_h1 = decide(ted1, lambda).verdict == Verdict::PresentH1;
    out.detected_h0 = decide(ted0, lambda).verdict == Verdict::PresentH1;
    return out;
  }

  try {
    const auto e1 = estimate_noise(frame(y1, plan.l, plan.cov_columns), plan.m_grid);
    const auto e0 = estimate_noise(frame(y0, plan.l, plan.cov_columns), plan.m_grid);
    out.sigma_hat2_h1 = e1.sigma_hat2;
    out.sigma_hat2_h0 = e0.sigma_hat2;
    out.detected_h1 =
        decide(ted1, dynamic_threshold(e1.sigma_hat2, plan.target_pfa, plan.n)).verdict == Verdict::PresentH1;
    out.detected_h0 =
        decide(ted0, dynamic_threshold(e0.sigma_hat2, plan.target_pfa, plan.n)).verdict == Verdict::PresentH1;
  } catch (const EstimationError&) {
    out.failed = true;
  }
  return out;
}

}  // namespace detail

/// Empirical Pd and Pfa over the plan's trials. Each trial draws an H1 and
/// an H0 stream from its own derived substreams, so the result depends only on
/// the plan, not on the worker count.
inline PointResult run_point(const TrialPlan& plan, RunOptions options = {}) {
  plan.validate();
  std::vector<detail::TrialOutcome> outcomes(plan.n_trials);

  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(plan.n_trials)));
  if (workers == 1) {
    for (std::size_t t = 0; t < plan.n_trials; ++t) outcomes[t] = detail::run_trial(plan, t);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t t = w; t < plan.n_trials; t += workers) outcomes[t] = detail::run_trial(plan, t);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  PointResult r;
  std::size_t det1 = 0;
  std::size_t det0 = 0;
  double sigma_sum = 0.0;
  for (const auto& o : outcomes) {
    if (o.failed) {
      ++r.failed_trials;
      continue;
    }
    det1 += o.detected_h1 ? 1 : 0;
    det0 += o.detected_h0 ? 1 : 0;
    sigma_sum += o.sigma_hat2_h1 + o.sigma_hat2_h0;
  }
  if (static_cast<double>(r.failed_trials) > 0.01 * static_cast<double>(plan.n_trials)) {
    throw std::runtime_error("run_point: " + std::to_string(r.failed_trials) + " of " +
                             std::to_string(plan.n_trials) + " trials failed noise estimation (> 1%)");
  }
  r.effective_trials = plan.n_trials - r.failed_trials;
  const double n_eff = static_cast<double>(r.effective_trials);
  r.pd = static_cast<double>(det1) / n_eff;
  r.pfa = static_cast<double>(det0) / n_eff;
  r.pd_ci = binomial_ci99(r.pd, r.effective_trials);
  r.pfa_ci = binomial_ci99(r.pfa, r.effective_trials);
  if (is_dynamic(plan.mode)) r.mean_sigma_hat2 = sigma_sum / (2.0 * n_eff);
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

inline SweepRow make_row(double sweep_value, const PointResult& p) {
  return {sweep_value, p.pd, p.pfa, p.pd_ci, p.pfa_ci, p.mean_sigma_hat2, p.failed_trials};
}

inline std::string mode_label(const ThresholdMode& m) { return is_dynamic(m) ? "dynamic" : "static"; }

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

namespace detail {

inline TrialPlan at_snr(TrialPlan plan, double snr_db_value) {
  plan.sigma_s2 = plan.sigma_w2_true * db_to_linear(snr_db_value);
  return plan;
}

}  // namespace detail

/// Static-threshold Pd vs SNR, one curve per threshold factor.
inline std::vector<SweepResult> sweep_threshold_factor(const TrialPlan& base, const std::vector<double>& factors,
                                                       const std::vector<double>& snr_grid_db,
                                                       RunOptions options = {}) {
  std::vector<SweepResult> out;
  for (double f : factors) {
    if (!(f > 0.0)) throw std::invalid_argument("sweep_threshold_factor: factors must be > 0");
    SweepResult curve{"f" + format_double(f), {}};
    for (double snr : snr_grid_db) {
      TrialPlan plan = detail::at_snr(base, snr);
      plan.mode = StaticThreshold{f};
      curve.rows.push_back(make_row(snr, run_point(plan, options)));
    }
    out.push_back(std::move(curve));
  }
  return out;
}

/// Pd vs SNR at the base plan's target Pfa, one curve per threshold mode.
inline std::vector<SweepResult> sweep_snr(const TrialPlan& base, const std::vector<double>& snr_grid_db,
                                          const std::vector<ThresholdMode>& modes, RunOptions options = {}) {
  if (snr_grid_db.empty()) throw std::invalid_argument("sweep_snr: empty SNR grid");
  std::vector<SweepResult> out;
  for (const auto& mode : modes) {
    SweepResult curve{mode_label(mode), {}};
    for (double snr : snr_grid_db) {
      TrialPlan plan = detail::at_snr(base, snr);
      plan.mode = mode;
      curve.rows.push_back(make_row(snr, run_point(plan, options)));
    }
    out.push_back(std::move(curve));
  }
  return out;
}

/// Pd vs target Pfa at a fixed SNR, one curve per threshold mode.
inline std::vector<SweepResult> sweep_pfa(const TrialPlan& base, const std::vector<double>& pfa_grid, double snr_db_value,
                                          const std::vector<ThresholdMode>& modes, RunOptions options = {}) {
  for (double p : pfa_grid) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("sweep_pfa: target Pfa values must lie in (0, 1)");
  }
  std::vector<SweepResult> out;
  for (const auto& mode : modes) {
    SweepResult curve{mode_label(mode), {}};
    for (double p : pfa_grid) {
      TrialPlan plan = detail::at_snr(base, snr_db_value);
      plan.mode = mode;
      plan.target_pfa = p;
      curve.rows.push_back(make_row(p, run_point(plan, options)));
    }
    out.push_back(std::move(curve));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kCsvHeader = "sweep_value,pd,pfa,pd_ci,pfa_ci,mean_sigma_hat2,failed_trials";

inline void write_results(const SweepResult& result, std::ostream& os) {
  os << kCsvHeader << '\n';
  for (const auto& r : result.rows) {
    os << format_double(r.sweep_value) << ',' << format_double(r.pd) << ',' << format_double(r.pfa) << ','
       << format_double(r.pd_ci) << ',' << format_double(r.pfa_ci) << ','
       << (r.mean_sigma_hat2 ? format_double(*r.mean_sigma_hat2) : std::string{}) << ',' << r.failed_trials << '\n';
  }
}

inline void write_results(const SweepResult& result, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_results: cannot open '" + path.string() + "' for writing");
  write_results(result, os);
  os.flush();
  if (!os) throw std::runtime_error("write_results: write to '" + path.string() + "' failed");
}

namespace detail {

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("read_results: bad number '" + s + "'");
  }
  return v;
}

}  // namespace detail

/// Parses a CSV produced by write_results.
inline SweepResult read_results(std::istream& is, std::string label = {}) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw std::runtime_error("read_results: missing header");
  SweepResult out{std::move(label), {}};
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 7) throw std::runtime_error("read_results: expected 7 fields in '" + line + "'");
    SweepRow r;
    r.sweep_value = detail::parse_double(f[0]);
    r.pd = detail::parse_double(f[1]);
    r.pfa = detail::parse_double(f[2]);
    r.pd_ci = detail::parse_double(f[3]);
    r.pfa_ci = detail::parse_double(f[4]);
    if (!f[5].empty()) r.mean_sigma_hat2 = detail::parse_double(f[5]);
    r.failed_trials = static_cast<std::size_t>(detail::parse_double(f[6]));
    out.rows.push_back(r);
  }
  return out;
}

}  // namespace specsense
