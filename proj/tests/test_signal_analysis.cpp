#include "slipgait/signal_analysis.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

using namespace slipgait;

namespace {

TimeSeries sine_series(double f_hz, double fs, std::size_t n, double phase0 = 0.0,
                       double amplitude = 1.0) {
  TimeSeries ts;
  ts.sample_rate = fs;
  ts.units = "m";
  for (std::size_t i = 0; i < n; ++i)
    ts.values.push_back(amplitude * std::cos(2.0 * M_PI * f_hz * i / fs + phase0));
  return ts;
}

/// f1 for i < splice, then f2 with an extra phase offset `jump`,
/// phase-continuous otherwise.
TimeSeries spliced_series(double f1, double f2, double fs, std::size_t n,
                          std::size_t splice, double jump) {
  TimeSeries ts;
  ts.sample_rate = fs;
  ts.units = "m";
  const double w1 = 2.0 * M_PI * f1 / fs, w2 = 2.0 * M_PI * f2 / fs;
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = (i < splice)
                             ? w1 * i
                             : w1 * splice + jump + w2 * (i - splice);
    ts.values.push_back(std::cos(phase));
  }
  return ts;
}

TEST(Unwrap, ConsecutiveDifferencesInPrincipalRange) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-40.0, 40.0);
  std::vector<double> raw(500);
  for (auto& v : raw) v = u(rng);
  const auto un = unwrap(raw);
  for (std::size_t i = 1; i < un.size(); ++i) {
    const double d = un[i] - un[i - 1];
    EXPECT_GT(d, -M_PI - 1e-12);
    EXPECT_LE(d, M_PI + 1e-12);
  }
}

TEST(AnalyticSignal, CosineGivesUnitMagnitudeAndLinearPhase) {
  const double f = 16.0, fs = 256.0;
  const TimeSeries ts = sine_series(f, fs, 4096);
  const auto a = analytic_signal(ts);
  const auto ph = instantaneous_phase(ts);
  const std::size_t lo = ts.values.size() / 10, hi = ts.values.size() * 9 / 10;
  const double w = 2.0 * M_PI * f / fs;
  for (std::size_t i = lo; i < hi; ++i) {
    EXPECT_NEAR(std::abs(a[i]), 1.0, 1e-3);
    EXPECT_NEAR(ph[i] - ph[lo], w * (i - lo), 1e-3 * std::max(1.0, w * (i - lo)));
  }
}

TEST(AnalyticSignal, TooShortSeriesThrows) {
  TimeSeries ts;
  ts.sample_rate = 100.0;
  ts.values = {1.0, 2.0, 3.0};
  EXPECT_THROW(analytic_signal(ts), std::domain_error);
}

TEST(AnalyticSignal, WhiteNoiseSpectralEnergyOracle) {
  // energy of the analytic signal against a direct DFT spectral sum of the
  // detrended input: sum|a|^2 = (|X0|^2 + 4*sum_{0<k<N/2}|Xk|^2 + |X_{N/2}|^2)/N
  std::mt19937_64 rng(32);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t n = 1024;  // power of two: no padding in the transform
  TimeSeries ts;
  ts.sample_rate = 100.0;
  for (std::size_t i = 0; i < n; ++i) ts.values.push_back(gauss(rng));

  // detrend exactly as the transform does (independent re-implementation)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += i;
    sy += ts.values[i];
    sxx += double(i) * i;
    sxy += double(i) * ts.values[i];
  }
  const double den = n * sxx - sx * sx;
  const double b = (n * sxy - sx * sy) / den;
  const double a0 = (sy - b * sx) / n;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = ts.values[i] - (a0 + b * i);

  // naive DFT
  std::vector<std::complex<double>> X(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i)
      acc += x[i] * std::polar(1.0, -2.0 * M_PI * double(k) * double(i) / n);
    X[k] = acc;
  }
  double rhs = std::norm(X[0]) + std::norm(X[n / 2]);
  for (std::size_t k = 1; k < n / 2; ++k) rhs += 4.0 * std::norm(X[k]);
  rhs /= n;

  const auto an = analytic_signal(ts);
  double lhs = 0.0;
  for (const auto& c : an) lhs += std::norm(c);
  EXPECT_NEAR(lhs, rhs, 1e-9 * rhs);

  // and roughly twice the energy of the (detrended) input
  double ein = 0.0;
  for (const double v : x) ein += v * v;
  EXPECT_NEAR(lhs, 2.0 * ein, 0.05 * ein);
}

TEST(TransitionPoint, LocatesSpliceWithinThreeSamples) {
  const std::size_t n = 1024, splice = 600;
  const TimeSeries ts = spliced_series(2.0, 3.5, 256.0, n, splice, M_PI / 2);
  const TransitionPoint tp = transition_point(ts);
  ASSERT_TRUE(tp.found);
  EXPECT_NEAR(double(tp.index), double(splice), 3.0);
}

TEST(TransitionPoint, PureSinusoidHasNoTransition) {
  const TimeSeries ts = sine_series(4.0, 256.0, 1024);
  EXPECT_FALSE(transition_point(ts).found);
}

TEST(TransitionPoint, InvariantUnderAmplitudeScaling) {
  const std::size_t n = 1024, splice = 450;
  const TimeSeries ts = spliced_series(2.0, 3.0, 256.0, n, splice, 2.5);
  TimeSeries scaled = ts;
  for (auto& v : scaled.values) v *= 7.3;
  const TransitionPoint a = transition_point(ts);
  const TransitionPoint b = transition_point(scaled);
  ASSERT_TRUE(a.found);
  ASSERT_TRUE(b.found);
  EXPECT_EQ(a.index, b.index);
}

TEST(PhaseChange, IdenticalSidesGiveZero) {
  const std::size_t n = 1024;
  const TimeSeries ts = sine_series(4.0, 256.0, n);
  const double dphi = phase_change(ts, n / 2);
  EXPECT_NEAR(dphi * 180.0 / M_PI, 0.0, 1.0);
}

TEST(PhaseChange, RecoversInjectedJump) {
  const std::size_t n = 1024, splice = 512;
  // same frequency on both sides, pure phase jump
  const TimeSeries ts = spliced_series(4.0, 4.0, 256.0, n, splice, M_PI / 2);
  const double dphi = phase_change(ts, splice);
  EXPECT_NEAR(dphi * 180.0 / M_PI, 90.0, 2.0);

  // two frequencies and a jump, located by the detector itself
  const TimeSeries ts2 = spliced_series(2.5, 3.5, 256.0, n, splice, M_PI / 2);
  const TransitionPoint tp = transition_point(ts2);
  ASSERT_TRUE(tp.found);
  const double dphi2 = phase_change(ts2, tp.index);
  EXPECT_NEAR(dphi2 * 180.0 / M_PI, 90.0, 2.0);
}

TEST(PhaseChange, AntisymmetricUnderSideSwap) {
  const std::size_t n = 1024, splice = 512;
  const double jump = 0.9;
  const TimeSeries fwd = spliced_series(4.0, 4.0, 256.0, n, splice, jump);
  const TimeSeries swapped = spliced_series(4.0, 4.0, 256.0, n, splice, -jump);
  const double a = phase_change(fwd, splice);
  const double b = phase_change(swapped, splice);
  EXPECT_NEAR((a + b) * 180.0 / M_PI, 0.0, 1.0);
}

TEST(PhaseChange, InsufficientCyclesThrows) {
  // half a cycle per side
  const TimeSeries ts = sine_series(0.2, 256.0, 1024);
  EXPECT_THROW(phase_change(ts, 512), std::domain_error);
}

TEST(TouchdownAngles, ConstantSeriesGivesNothing) {
  TimeSeries ts;
  ts.sample_rate = 200.0;
  ts.values.assign(400, 0.7);
  EXPECT_TRUE(estimate_touchdown_angles(ts).empty());
}

TEST(TouchdownAngles, SawtoothDropsDetectedWithinOneSample) {
  // swing: fast angle sweep; support: slow; the velocity collapses at the
  // injected touchdown instants
  TimeSeries ts;
  ts.sample_rate = 200.0;
  const int swing = 60, support = 100;
  std::vector<std::size_t> truth;
  double v = 0.0;
  for (int cycle = 0; cycle < 5; ++cycle) {
    for (int i = 0; i < swing; ++i) {
      v += 2.0 / swing;
      ts.values.push_back(v);
    }
    truth.push_back(ts.values.size());
    for (int i = 0; i < support; ++i) {
      v += 0.05 / support;
      ts.values.push_back(v);
    }
  }
  const auto hits = estimate_touchdown_angles(ts);
  ASSERT_EQ(hits.size(), truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    EXPECT_NEAR(double(hits[i].index), double(truth[i]), 1.0);
    EXPECT_NEAR(hits[i].angle, ts.values[truth[i]], 0.05);
  }
}

TEST(Pipeline, HipSeriesEndToEnd) {
  const std::size_t n = 2048, splice = 1100;
  const TimeSeries ts = spliced_series(2.0, 3.0, 256.0, n, splice, 1.2);
  const PhaseAnalysis pa = analyze_hip_series(ts);
  ASSERT_TRUE(pa.transition_found);
  EXPECT_NEAR(double(pa.transition_index), double(splice), 3.0);
  ASSERT_TRUE(pa.delta_phi.has_value());
  EXPECT_NEAR(*pa.delta_phi, 1.2, 0.05);

  const PhaseAnalysis flat = analyze_hip_series(sine_series(3.0, 256.0, 1024));
  EXPECT_FALSE(flat.transition_found);
  EXPECT_EQ(flat.note, "no transition detected");
}

}  // namespace
