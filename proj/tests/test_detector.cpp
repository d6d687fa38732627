#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "specsense/detector.hpp"

using namespace specsense;

// Q^-1(0.1) * sqrt(256) + 128 with Q^-1(0.1) = 1.2815515655446004 (scipy norm.isf).
constexpr double kUnitThresholdPfa10N128 = 148.5048250487136;

TEST(EnergyStatistic, Values) {
  const SampleStream zeros(128);
  EXPECT_EQ(energy_statistic(zeros).value, 0.0);
  EXPECT_EQ(energy_statistic(zeros).n, 128u);

  const SampleStream unit{{1, 0}, {0, 1}, {-1, 0}, {0.6, 0.8}};
  EXPECT_NEAR(energy_statistic(unit).value, 4.0, 1e-15);
  EXPECT_THROW(energy_statistic(SampleStream{}), std::invalid_argument);
}

TEST(EnergyStatistic, MatchesElementwiseAccumulation) {
  const auto y = add_awgn(generate_qpsk(4096, 0.7, 1), 1.3, 2);
  long double re2 = 0.0L, im2 = 0.0L;
  for (const auto& s : y) {
    re2 += static_cast<long double>(s.real()) * s.real();
    im2 += static_cast<long double>(s.imag()) * s.imag();
  }
  const double ref = static_cast<double>(re2 + im2);
  EXPECT_NEAR(energy_statistic(y).value, ref, 1e-12 * ref);
}

TEST(DetectionStatistic, CountsRealDegreesOfFreedom) {
  const SampleStream y{{1, 1}, {2, 0}, {0, 3}, {5, 5}};
  // n = 4 real dof -> first 2 complex samples, doubled.
  const auto t = detection_statistic(y, 4);
  EXPECT_DOUBLE_EQ(t.value, 2.0 * (2.0 + 4.0));
  EXPECT_EQ(t.n, 4u);
  EXPECT_THROW(detection_statistic(y, 3), std::invalid_argument);
  EXPECT_THROW(detection_statistic(y, 0), std::invalid_argument);
  EXPECT_THROW(detection_statistic(y, 10), std::invalid_argument);
}

TEST(QFunction, Values) {
  EXPECT_NEAR(q_function(0.0), 0.5, 1e-15);
  EXPECT_NEAR(q_function(1.2816), oracle::normal_tail(1.2816), 1e-10);
  EXPECT_NEAR(q_function(1.2816), 0.1, 1e-4);
  EXPECT_LT(oracle::normal_tail(6.0), 1e-8);
  EXPECT_LT(q_function(6.0), 1e-8);
  EXPECT_NEAR(q_function(6.0), oracle::normal_tail(6.0), 1e-15);
}

TEST(QFunction, SymmetryAndMonotonicity) {
  double prev = 1.0;
  for (double x = -8.0; x <= 8.0; x += 0.01) {
    EXPECT_NEAR(q_function(-x), 1.0 - q_function(x), 1e-15);
    const double q = q_function(x);
    if (std::abs(x) < 5.0) {
      EXPECT_LT(q, prev);
    } else {
      EXPECT_LE(q, prev);
    }
    prev = q;
  }
}

TEST(QInverse, Values) {
  EXPECT_NEAR(q_inverse(0.5), 0.0, 1e-12);
  EXPECT_NEAR(q_inverse(0.1), 1.28155, 1e-4);
  EXPECT_NEAR(q_inverse(0.1), 1.2815515655446004, 1e-10);
  EXPECT_NEAR(q_inverse(0.9), -q_inverse(0.1), 1e-12);
  for (double p : {1e-6, 0.001, 0.01, 0.2, 0.5, 0.77, 0.999}) {
    EXPECT_LE(std::abs(q_function(q_inverse(p)) - p), 1e-10) << p;
  }
}

TEST(QInverse, RejectsOutsideOpenUnitInterval) {
  EXPECT_THROW(q_inverse(0.0), std::invalid_argument);
  EXPECT_THROW(q_inverse(1.0), std::invalid_argument);
  EXPECT_THROW(q_inverse(-0.2), std::invalid_argument);
  EXPECT_THROW(q_inverse(1.5), std::invalid_argument);
}

TEST(StaticThreshold, Values) {
  const double t = static_threshold(1.0, 0.1, 128);
  EXPECT_NEAR(t, kUnitThresholdPfa10N128, 1e-8);
  // Commonly quoted rounded down to 148.
  EXPECT_EQ(std::floor(t), 148.0);
  EXPECT_DOUBLE_EQ(static_threshold(1.0, 0.5, 128), 128.0);
  EXPECT_DOUBLE_EQ(static_threshold(2.0, 0.5, 128), 256.0);
  EXPECT_THROW(static_threshold(0.0, 0.1, 128), std::invalid_argument);
  EXPECT_THROW(static_threshold(1.0, 1.0, 128), std::invalid_argument);
  EXPECT_THROW(static_threshold(1.0, 0.1, 0), std::invalid_argument);
}

TEST(DynamicThreshold, Values) {
  EXPECT_DOUBLE_EQ(dynamic_threshold(1.0, 0.1, 128), static_threshold(1.0, 0.1, 128));
  EXPECT_NEAR(dynamic_threshold(0.5, 0.1, 128), 74.29, 0.05);
  EXPECT_NEAR(dynamic_threshold(0.5, 0.1, 128), kUnitThresholdPfa10N128 / 2, 1e-9);
  for (double s : {0.1, 0.25, 3.0, 17.0}) {
    EXPECT_NEAR(dynamic_threshold(s, 0.2, 64), s * dynamic_threshold(1.0, 0.2, 64), 1e-12 * s * 100);
  }
  EXPECT_THROW(dynamic_threshold(0.0, 0.1, 128), std::invalid_argument);
  EXPECT_THROW(dynamic_threshold(-1.0, 0.1, 128), std::invalid_argument);
}

TEST(Decide, TieRule) {
  EXPECT_EQ(decide({149.0, 128}, 148.58).verdict, Verdict::PresentH1);
  EXPECT_EQ(decide({148.58, 128}, 148.58).verdict, Verdict::AbsentH0);
  EXPECT_EQ(decide({0.0, 128}, 1.0).verdict, Verdict::AbsentH0);
  EXPECT_THROW(decide({1.0, 1}, std::nan("")), std::invalid_argument);
}

TEST(Decide, ScaleInvariance) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 300.0);
  std::uniform_real_distribution<double> c(0.01, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng), t = u(rng), k = c(rng);
    EXPECT_EQ(decide({v, 128}, t).verdict, decide({v * k, 128}, t * k).verdict);
  }
}

TEST(ClosedForm, Values) {
  EXPECT_NEAR(closed_form_pd(128.0 * 3.0, 128, 1.0, 2.0), 0.5, 1e-15);
  EXPECT_NEAR(closed_form_pd(148.58, 128, 1.0, 0.0), 0.1, 1e-3);
  EXPECT_NEAR(closed_form_pd(148.58, 128, 1.0, 1.0), oracle::normal_tail(-3.356875), 1e-9);
  EXPECT_NEAR(closed_form_pd(148.58, 128, 1.0, 1.0), 0.9996, 1e-4);
  EXPECT_NEAR(closed_form_pfa(128.0, 128, 1.0), 0.5, 1e-15);
  EXPECT_NEAR(closed_form_pfa(148.58, 128, 2.0), 0.9996, 1e-4);
  EXPECT_THROW(closed_form_pd(1.0, 128, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(closed_form_pfa(1.0, 128, -1.0), std::invalid_argument);
}

TEST(ClosedForm, PfaRoundTrip) {
  for (std::size_t n : {16u, 128u, 1024u})
    for (double s2 : {0.25, 1.0, 4.0})
      for (double p = 0.001; p < 0.999; p += 0.0125) {
        EXPECT_NEAR(closed_form_pfa(dynamic_threshold(s2, p, n), n, s2), p, 1e-9);
      }
  for (double p : {0.01, 0.1, 0.2, 0.5}) EXPECT_NEAR(closed_form_pfa(dynamic_threshold(1.0, p, 128), 128, 1.0), p, 1e-9);
}

TEST(ClosedForm, Monotonicity) {
  for (double s2 : {0.05, 0.5, 2.0}) {
    double prev = 2.0;
    for (double lambda = 50.0; lambda < 400.0; lambda += 1.0) {
      const double pd = closed_form_pd(lambda, 128, 1.0, s2);
      EXPECT_LE(pd, prev);
      prev = pd;
      EXPECT_GE(pd, closed_form_pfa(lambda, 128, 1.0));
    }
  }
  double prev = -1.0;
  for (double s2 = 0.0; s2 < 3.0; s2 += 0.05) {
    const double pd = closed_form_pd(150.0, 128, 1.0, s2);
    EXPECT_GE(pd, prev);
    prev = pd;
  }
}

TEST(ClosedForm, EmpiricalFalseAlarmWithKnownNoise) {
  constexpr int trials = 4000;
  const double sigma2 = 2.0;
  const double lambda = dynamic_threshold(sigma2, 0.1, 128);
  int alarms = 0;
  for (int t = 0; t < trials; ++t) {
    const auto y = add_awgn(SampleStream(64), sigma2, 1000 + t);
    alarms += decide(detection_statistic(y, 128), lambda).verdict == Verdict::PresentH1;
  }
  const double pfa = static_cast<double>(alarms) / trials;
  const double pred = closed_form_pfa(lambda, 128, sigma2);
  EXPECT_NEAR(pfa, pred, 2.576 * std::sqrt(pred * (1 - pred) / trials) + 0.005);
}
