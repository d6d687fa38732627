#pragma once

// Command-line front end: configuration parsing (flags > config file >
// SPECSENSE_SEED > defaults), validation, and dispatch to the sensing and
// sweep operations.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "specsense/detector.hpp"
#include "specsense/montecarlo.hpp"
#include "specsense/noise_estimator.hpp"
#include "specsense/signal_model.hpp"
#include "specsense/svg_plot.hpp"

namespace specsense::cli {

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kUsageError = 2 };

/// Invalid flag, key, or value. Carries exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string command;
  TrialPlan plan;
  std::optional<std::string> mode;  ///< unset: both modes for sweeps, dynamic for sense
  std::vector<double> factors;      ///< unset: {1, 1.5, 2, 2.5} for sweep-factor, {1} otherwise
  std::optional<double> snr_db;
  double snr_min = -20.0;
  double snr_max = 20.0;
  double snr_step = 1.0;
  double pfa_min = 0.01;
  double pfa_max = 0.99;
  double pfa_step = 0.01;
  std::filesystem::path output_path = "results.csv";
  bool plot = false;
  bool quick = false;
  unsigned workers = 1;
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"sense", "sweep-snr", "sweep-pfa", "sweep-factor", "estimate-noise"};
  return c;
}

namespace detail {

inline std::vector<double> linear_grid(double lo, double hi, double step) {
  std::vector<double> g;
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= count; ++i) {
    // Rounded to 1e-9 so grid values print cleanly in CSV.
    g.push_back(std::round((lo + step * static_cast<double>(i)) * 1e9) / 1e9);
  }
  return g;
}

inline void require(bool ok, const std::string& flag, const std::string& rule, const std::string& got) {
  if (!ok) throw UsageError("invalid value for --" + flag + ": " + got + " (" + rule + ")");
}

inline void validate(const ExperimentConfig& c) {
  const auto& p = c.plan;
  require(p.n > 0 && p.n % 2 == 0, "n", "must be a positive even number of real samples", std::to_string(p.n));
  require(p.l >= 2, "l", "must be >= 2", std::to_string(p.l));
  require(p.target_pfa > 0.0 && p.target_pfa < 1.0, "pfa", "must lie in the open range (0, 1)",
          format_double(p.target_pfa));
  require(p.n_trials > 0, "trials", "must be > 0", std::to_string(p.n_trials));
  require(p.m_grid >= 2, "m-grid", "must be >= 2", std::to_string(p.m_grid));
  require(p.mismatch_db >= 0.0 && std::isfinite(p.mismatch_db), "mismatch-db", "must be >= 0",
          format_double(p.mismatch_db));
  require(p.cov_columns > p.l, "cov-n", "must exceed --l", std::to_string(p.cov_columns));
  require(p.samples_per_symbol > 0, "sps", "must be > 0", std::to_string(p.samples_per_symbol));
  for (double f : c.factors) require(f > 0.0 && std::isfinite(f), "factor", "must be > 0", format_double(f));
  require(c.snr_step > 0.0, "snr-step", "must be > 0", format_double(c.snr_step));
  require(c.snr_min <= c.snr_max, "snr-min", "must be <= --snr-max", format_double(c.snr_min));
  require(c.pfa_min > 0.0 && c.pfa_min < 1.0, "pfa-min", "must lie in (0, 1)", format_double(c.pfa_min));
  require(c.pfa_max > 0.0 && c.pfa_max < 1.0, "pfa-max", "must lie in (0, 1)", format_double(c.pfa_max));
  require(c.pfa_min <= c.pfa_max, "pfa-min", "must be <= --pfa-max", format_double(c.pfa_min));
  require(c.pfa_step > 0.0, "pfa-step", "must be > 0", format_double(c.pfa_step));
  require(c.workers >= 1, "workers", "must be >= 1", std::to_string(c.workers));
}

}  // namespace detail

/// Thrown by parse_config when --help was requested; `usage` holds the text.
struct HelpRequested {
  std::string usage;
};

/// Parses argv (including argv[0]). Throws UsageError or HelpRequested.
inline ExperimentConfig parse_config(const std::vector<std::string>& argv) {
  ExperimentConfig c;
  std::string mode;
  std::size_t trials = 0;

  CLI::App app{"Energy-detection spectrum sensing with blind noise estimation", "specsense"};
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "Flat key = value configuration file");

  app.add_option("command", c.command, "sense | sweep-snr | sweep-pfa | sweep-factor | estimate-noise")
      ->required()
      ->check(CLI::IsMember(commands()));
  app.add_option("--n", c.plan.n, "Real samples in the energy statistic (default 128)");
  app.add_option("--l", c.plan.l, "Smoothing factor: covariance dimension (default 8)");
  app.add_option("--pfa", c.plan.target_pfa, "Target probability of false alarm (default 0.1)");
  auto* snr_opt = app.add_option("--snr", c.snr_db, "SNR in dB for sense / estimate-noise / sweep-pfa");
  app.add_option("--snr-min", c.snr_min, "SNR grid start in dB (default -20)");
  app.add_option("--snr-max", c.snr_max, "SNR grid end in dB (default 20)");
  app.add_option("--snr-step", c.snr_step, "SNR grid step in dB (default 1)");
  app.add_option("--pfa-min", c.pfa_min, "sweep-pfa grid start (default 0.01)");
  app.add_option("--pfa-max", c.pfa_max, "sweep-pfa grid end (default 0.99)");
  app.add_option("--pfa-step", c.pfa_step, "sweep-pfa grid step (default 0.01)");
  auto* trials_opt = app.add_option("--trials", trials, "Monte Carlo trials per point (default 10000)");
  app.add_option("--mode", mode, "Threshold mode: static | dynamic")->check(CLI::IsMember({"static", "dynamic"}));
  app.add_option("--factor", c.factors, "Static threshold factor(s)");
  app.add_option("--mismatch-db", c.plan.mismatch_db, "Per-trial noise uncertainty in +/- dB (default 3)");
  app.add_option("--m-grid", c.plan.m_grid, "Noise-variance candidates M (default 100)");
  app.add_option("--cov-n", c.plan.cov_columns, "Snapshot columns per covariance frame (default 8192)");
  app.add_option("--sps", c.plan.samples_per_symbol, "QPSK samples per symbol (default 16)");
  app.add_option("--seed", c.plan.master_seed, "Master seed (default 42)")->envname("SPECSENSE_SEED");
  app.add_option("--out", c.output_path, "Output CSV path (default results.csv)");
  app.add_option("--workers", c.workers, "Monte Carlo worker threads (default 1)");
  app.add_flag("--plot", c.plot, "Also write an SVG chart next to the CSV");
  app.add_flag("--quick", c.quick, "1000 trials per point unless --trials is given");

  c.plan.mismatch_db = 3.0;

  std::vector<const char*> raw;
  raw.reserve(argv.size());
  for (const auto& a : argv) raw.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (trials_opt->count() > 0) {
    c.plan.n_trials = trials;
  } else {
    c.plan.n_trials = c.quick ? 1000 : 10000;
  }
  if (!mode.empty()) c.mode = mode;
  if (snr_opt->count() == 0) c.snr_db.reset();
  detail::validate(c);
  return c;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

namespace detail {

inline std::filesystem::path curve_path(const std::filesystem::path& out, const std::string& label) {
  auto p = out;
  const auto ext = out.has_extension() ? out.extension().string() : std::string(".csv");
  p.replace_filename(out.stem().string() + "." + label + ext);
  return p;
}

inline std::vector<ThresholdMode> sweep_modes(const ExperimentConfig& c) {
  const double f = c.factors.empty() ? 1.0 : c.factors.front();
  if (!c.mode) return {StaticThreshold{f}, DynamicThreshold{}};
  if (*c.mode == "static") return {StaticThreshold{f}};
  return {DynamicThreshold{}};
}

inline void emit(const ExperimentConfig& c, const std::vector<SweepResult>& curves, const PlotSpec& spec,
                 std::ostream& out) {
  for (const auto& curve : curves) {
    const auto path = curve_path(c.output_path, curve.label);
    write_results(curve, path);
    out << "curve=" << curve.label << " csv=" << path.string() << " rows=" << curve.rows.size() << '\n';
  }
  if (c.plot) {
    auto svg = c.output_path;
    svg.replace_extension(".svg");
    write_svg_plot(curves, spec, svg);
    out << "plot=" << svg.string() << '\n';
  }
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

inline SampleStream scenario_stream(const ExperimentConfig& c, std::optional<double> snr) {
  ScenarioSpec s;
  s.sigma_w2 = c.plan.sigma_w2_true;
  s.sigma_s2 = snr ? c.plan.sigma_w2_true * db_to_linear(*snr) : 0.0;
  s.hypothesis = snr ? Hypothesis::H1 : Hypothesis::H0;
  s.seed = c.plan.master_seed;
  s.n_samples = std::max(c.plan.n / 2, c.plan.l * c.plan.cov_columns);
  s.samples_per_symbol = c.plan.samples_per_symbol;
  return synthesize(s);
}

inline int run_sense(const ExperimentConfig& c, std::ostream& out) {
  const double snr = c.snr_db.value_or(-2.0);
  const auto y = scenario_stream(c, snr);
  const auto ted = detection_statistic(y, c.plan.n);
  const bool dynamic = c.mode.value_or("dynamic") == "dynamic";
  out << "command=sense mode=" << (dynamic ? "dynamic" : "static") << " snr_db=" << format_double(snr)
      << " n=" << c.plan.n;
  double threshold = 0.0;
  if (dynamic) {
    const auto est = estimate_noise(frame(y, c.plan.l, c.plan.cov_columns), c.plan.m_grid);
    threshold = dynamic_threshold(est.sigma_hat2, c.plan.target_pfa, c.plan.n);
    out << " sigma_hat2=" << format_double(est.sigma_hat2) << " k_hat=" << est.k_hat;
  } else {
    const double f = c.factors.empty() ? 1.0 : c.factors.front();
    threshold = static_threshold(f * c.plan.sigma_nominal2, c.plan.target_pfa, c.plan.n);
  }
  const auto d = decide(ted, threshold);
  out << " statistic=" << format_double(ted.value) << " threshold=" << format_double(threshold)
      << " verdict=" << (d.verdict == Verdict::PresentH1 ? "present" : "absent") << '\n';
  return kOk;
}

inline int run_estimate_noise(const ExperimentConfig& c, std::ostream& out) {
  const auto y = scenario_stream(c, c.snr_db);
  const auto est = estimate_noise(frame(y, c.plan.l, c.plan.cov_columns), c.plan.m_grid);
  out << "command=estimate-noise hypothesis=" << (c.snr_db ? "H1" : "H0") << '\n';
  out << "sigma_hat2=" << format_double(est.sigma_hat2) << '\n';
  out << "k_hat=" << est.k_hat << '\n';
  out << "beta_hat=" << format_double(est.beta_hat) << '\n';
  out << "sigma_lo2=" << format_double(est.sigma_lo2) << '\n';
  out << "sigma_hi2=" << format_double(est.sigma_hi2) << '\n';
  out << "p_ratio=" << format_double(est.p_ratio) << '\n';
  out << "degenerate_grid=" << (est.degenerate_grid ? "true" : "false") << '\n';
  out << "eigenvalues=" << join(est.spectrum.values) << '\n';
  out << "fit_scores=" << join(est.fit_scores) << '\n';
  return kOk;
}

}  // namespace detail

/// Runs a validated configuration. Runtime failures propagate as exceptions.
inline int run(const ExperimentConfig& c, std::ostream& out) {
  const RunOptions opts{c.workers};
  if (c.command == "sense") return detail::run_sense(c, out);
  if (c.command == "estimate-noise") return detail::run_estimate_noise(c, out);

  const auto snr_grid = detail::linear_grid(c.snr_min, c.snr_max, c.snr_step);
  if (c.command == "sweep-snr") {
    const auto curves = sweep_snr(c.plan, snr_grid, detail::sweep_modes(c), opts);
    detail::emit(c, curves, {"Pd vs SNR, Pfa = " + format_double(c.plan.target_pfa), "SNR (dB)"}, out);
  } else if (c.command == "sweep-pfa") {
    const double snr = c.snr_db.value_or(-2.0);
    const auto grid = detail::linear_grid(c.pfa_min, c.pfa_max, c.pfa_step);
    const auto curves = sweep_pfa(c.plan, grid, snr, detail::sweep_modes(c), opts);
    detail::emit(c, curves, {"Pd vs Pfa, SNR = " + format_double(snr) + " dB", "target Pfa"}, out);
  } else if (c.command == "sweep-factor") {
    const auto factors = c.factors.empty() ? std::vector<double>{1.0, 1.5, 2.0, 2.5} : c.factors;
    const auto curves = sweep_threshold_factor(c.plan, factors, snr_grid, opts);
    detail::emit(c, curves, {"Pd vs SNR by threshold factor", "SNR (dB)"}, out);
  }
  return kOk;
}

/// Full front end: parse, validate, dispatch, map failures to exit codes.
inline int main_entry(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = parse_config(argv);
  } catch (const HelpRequested& h) {
    out << h.usage;
    return kOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  try {
    return run(config, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

}  // namespace specsense::cli
