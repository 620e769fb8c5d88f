#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace slipgait {

/// Uniformly sampled scalar series.
struct TimeSeries {
  double sample_rate = 0.0;  ///< [Hz]
  std::vector<double> values;
  std::string units;
};

struct AnalysisOptions {
  double smooth_frac = 0.05;  ///< moving-average width as a series fraction
  double edge_frac = 0.10;    ///< samples excluded at each end (Hilbert edges)
  double peak_rel_threshold = 0.15;  ///< (max-median)/median to call a peak
  double plateau_frac = 0.5;  ///< upper prominence band searched for the raw peak
};

/// Wraps an angle to (-pi, pi].
inline double wrap_pi(double x) {
  double w = std::fmod(x + M_PI, 2.0 * M_PI);
  if (w <= 0.0) w += 2.0 * M_PI;
  return w - M_PI;
}

/// Unwraps a phase series so consecutive differences lie in (-pi, pi].
inline std::vector<double> unwrap(const std::vector<double>& ph) {
  std::vector<double> out(ph.size());
  if (ph.empty()) return out;
  out[0] = ph[0];
  for (std::size_t i = 1; i < ph.size(); ++i)
    out[i] = out[i - 1] + wrap_pi(ph[i] - ph[i - 1]);
  return out;
}

namespace detail {

inline std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

// least-squares line a + b*x over (x[i], y[i])
inline std::pair<double, double> line_fit(const std::vector<double>& x,
                                          const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  const double b = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
  const double a = (sy - b * sx) / n;
  return {a, b};
}

inline std::vector<double> moving_average(const std::vector<double>& v, int w) {
  const int n = static_cast<int>(v.size());
  std::vector<double> out(v.size());
  const int half = w / 2;
  double acc = 0.0;
  int lo = 0, hi = -1;  // inclusive window [lo, hi]
  for (int i = 0; i < n; ++i) {
    const int wlo = std::max(0, i - half), whi = std::min(n - 1, i + half);
    while (hi < whi) acc += v[++hi];
    while (lo < wlo) acc -= v[lo++];
    out[i] = acc / (whi - wlo + 1);
  }
  return out;
}

}  // namespace detail

/// Analytic signal via the frequency-domain Hilbert transform: the input is
/// detrended, zero-padded to the next power of two, negative frequencies are
/// zeroed and positive ones doubled, and the inverse transform is truncated
/// back to the input length.
inline std::vector<std::complex<double>> analytic_signal(const TimeSeries& ts) {
  const std::size_t n = ts.values.size();
  if (n < 8) throw std::domain_error("analytic_signal: series shorter than 8");

  // remove mean and linear trend
  std::vector<double> x(n), idx(n);
  std::iota(idx.begin(), idx.end(), 0.0);
  const auto [a, b] = detail::line_fit(idx, ts.values);
  for (std::size_t i = 0; i < n; ++i) x[i] = ts.values[i] - (a + b * idx[i]);

  std::size_t nfft = 1;
  while (nfft < n) nfft <<= 1;

  std::vector<std::complex<double>> buf(nfft, {0.0, 0.0});
  for (std::size_t i = 0; i < n; ++i) buf[i] = {x[i], 0.0};

  {
    std::lock_guard<std::mutex> lock(detail::fftw_mutex());
    fftw_plan fwd = fftw_plan_dft_1d(
        static_cast<int>(nfft), reinterpret_cast<fftw_complex*>(buf.data()),
        reinterpret_cast<fftw_complex*>(buf.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(fwd);
    fftw_destroy_plan(fwd);

    // one-sided spectrum: keep DC and Nyquist, double positive frequencies
    for (std::size_t k = 1; k < nfft / 2; ++k) buf[k] *= 2.0;
    for (std::size_t k = nfft / 2 + 1; k < nfft; ++k) buf[k] = {0.0, 0.0};

    fftw_plan inv = fftw_plan_dft_1d(
        static_cast<int>(nfft), reinterpret_cast<fftw_complex*>(buf.data()),
        reinterpret_cast<fftw_complex*>(buf.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(inv);
    fftw_destroy_plan(inv);
  }

  std::vector<std::complex<double>> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = buf[i] / static_cast<double>(nfft);
  return out;
}

/// Unwrapped instantaneous phase of the analytic signal.
inline std::vector<double> instantaneous_phase(const TimeSeries& ts) {
  const auto a = analytic_signal(ts);
  std::vector<double> ph(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) ph[i] = std::arg(a[i]);
  return unwrap(ph);
}

/// Smoothed instantaneous frequency [rad/s] (time derivative of the phase).
inline std::vector<double> instantaneous_frequency(const TimeSeries& ts,
                                                   const AnalysisOptions& opt = {}) {
  const auto ph = instantaneous_phase(ts);
  const std::size_t n = ph.size();
  const double dt = 1.0 / ts.sample_rate;
  std::vector<double> f(n);
  for (std::size_t i = 1; i + 1 < n; ++i) f[i] = (ph[i + 1] - ph[i - 1]) / (2 * dt);
  if (n >= 2) {
    f[0] = (ph[1] - ph[0]) / dt;
    f[n - 1] = (ph[n - 1] - ph[n - 2]) / dt;
  }
  int w = std::max(3, static_cast<int>(std::lround(opt.smooth_frac * n)));
  if (w % 2 == 0) ++w;
  return detail::moving_average(f, w);
}

struct TransitionPoint {
  bool found = false;
  std::size_t index = 0;
};

/// Finds the gait-transition instant as the highest peak of the smoothed
/// frequency signal; a flat signal (peak barely above the median) reports
/// "not found".  Smoothing flattens a phase-slip spike into a plateau, so the
/// peak is localized by the raw (unsmoothed) derivative's maximum inside the
/// near-maximal plateau.
inline TransitionPoint transition_point(const TimeSeries& ts,
                                        const AnalysisOptions& opt = {}) {
  const auto f = instantaneous_frequency(ts, opt);
  const std::size_t n = f.size();
  const std::size_t lo = static_cast<std::size_t>(opt.edge_frac * n);
  const std::size_t hi = n - lo;
  if (hi <= lo + 2) return {};

  std::vector<double> inner(f.begin() + lo, f.begin() + hi);
  std::vector<double> sorted = inner;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double med = sorted[sorted.size() / 2];
  const std::size_t arg =
      std::max_element(inner.begin(), inner.end()) - inner.begin();
  const double mx = inner[arg];

  if (!(mx - med > opt.peak_rel_threshold * std::max(std::abs(med), 1e-12)))
    return {};

  const double cut = mx - opt.plateau_frac * (mx - med);
  std::size_t first = arg, last = arg;
  while (first > 0 && inner[first - 1] >= cut) --first;
  while (last + 1 < inner.size() && inner[last + 1] >= cut) ++last;

  // raw phase derivative over the plateau
  const auto ph = instantaneous_phase(ts);
  const double dt = 1.0 / ts.sample_rate;
  std::size_t best = lo + arg;
  double best_v = -std::numeric_limits<double>::infinity();
  for (std::size_t i = lo + first; i <= lo + last && i + 1 < ph.size(); ++i) {
    if (i == 0) continue;
    const double raw = (ph[i + 1] - ph[i - 1]) / (2.0 * dt);
    if (raw > best_v) {
      best_v = raw;
      best = i;
    }
  }
  return {true, best};
}

/// Phase offset between the oscillations after and before the transition:
/// first-order polynomials are fitted to the unwrapped phase on each side
/// (time origin at the transition) and the intercept difference is wrapped to
/// (-pi, pi].  Requires at least two full cycles on each side.
inline double phase_change(const TimeSeries& ts, std::size_t t_index,
                           const AnalysisOptions& opt = {}) {
  const auto ph = instantaneous_phase(ts);
  const std::size_t n = ph.size();
  if (t_index >= n) throw std::domain_error("phase_change: index out of range");
  const double dt = 1.0 / ts.sample_rate;

  // transition-side ringing of the analytic signal decays like the inverse
  // distance; a full smoothing window of margin keeps it out of the fits
  int w = std::max(3, static_cast<int>(std::lround(opt.smooth_frac * n)));
  const std::size_t margin = static_cast<std::size_t>(std::max(3, w));
  const std::size_t edge = static_cast<std::size_t>(opt.edge_frac * n);

  auto fit_side = [&](std::size_t b, std::size_t e) -> double {
    if (e <= b + 4) throw std::domain_error("phase_change: side too short");
    if (std::abs(ph[e - 1] - ph[b]) < 2.0 * 2.0 * M_PI)
      throw std::domain_error("phase_change: fewer than two cycles on one side");
    std::vector<double> x, y;
    x.reserve(e - b);
    y.reserve(e - b);
    for (std::size_t i = b; i < e; ++i) {
      x.push_back((static_cast<double>(i) - static_cast<double>(t_index)) * dt);
      y.push_back(ph[i]);
    }
    return detail::line_fit(x, y).first;  // intercept at the transition
  };

  if (t_index < edge + margin || t_index + margin >= n - edge)
    throw std::domain_error("phase_change: transition too close to the edges");
  const double before = fit_side(edge, t_index - margin);
  const double after = fit_side(t_index + margin, n - edge);
  return wrap_pi(after - before);
}

struct PhaseAnalysis {
  double sample_rate = 0.0;
  std::vector<double> phase;      ///< unwrapped [rad]
  std::vector<double> frequency;  ///< smoothed [rad/s]
  bool transition_found = false;
  std::size_t transition_index = 0;
  std::optional<double> delta_phi;  ///< [rad], when computable
  std::string note;
};

/// The full hip-oscillation pipeline: analytic signal, phase, frequency,
/// transition point and phase change.
inline PhaseAnalysis analyze_hip_series(const TimeSeries& ts,
                                        const AnalysisOptions& opt = {}) {
  PhaseAnalysis out;
  out.sample_rate = ts.sample_rate;
  out.phase = instantaneous_phase(ts);
  out.frequency = instantaneous_frequency(ts, opt);
  const TransitionPoint tp = transition_point(ts, opt);
  out.transition_found = tp.found;
  out.transition_index = tp.index;
  if (!tp.found) {
    out.note = "no transition detected";
    return out;
  }
  try {
    out.delta_phi = phase_change(ts, tp.index, opt);
  } catch (const std::domain_error& e) {
    out.note = e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------

struct TouchdownEstimate {
  std::size_t index = 0;
  double angle = 0.0;  ///< series value at the detected touchdown
};

struct TouchdownOptions {
  double window_s = 0.05;  ///< comparison window on each side
  double ratio = 0.5;      ///< |velocity| drop factor marking an impact
};

/// Detects touchdown instants in a limb-angle series: the angular velocity is
/// large in swing and collapses at the impact, so indices where the mean
/// |velocity| of the leading window drops below `ratio` times the trailing
/// window are reported with the limb angle at that instant.
inline std::vector<TouchdownEstimate> estimate_touchdown_angles(
    const TimeSeries& ts, const TouchdownOptions& opt = {}) {
  std::vector<TouchdownEstimate> out;
  const std::size_t n = ts.values.size();
  if (n < 3 || !(ts.sample_rate > 0.0)) return out;

  const std::size_t nv = n - 1;
  std::vector<double> av(nv);
  for (std::size_t i = 0; i < nv; ++i)
    av[i] = std::abs((ts.values[i + 1] - ts.values[i]) * ts.sample_rate);

  const std::size_t w = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(opt.window_s * ts.sample_rate)));
  if (nv < 2 * w + 1) return out;

  double vmax = 0.0;
  for (const double v : av) vmax = std::max(vmax, v);
  if (!(vmax > 0.0)) return out;  // no motion at all

  // prefix sums for O(1) window means
  std::vector<double> ps(nv + 1, 0.0);
  for (std::size_t i = 0; i < nv; ++i) ps[i + 1] = ps[i] + av[i];
  auto mean = [&](std::size_t b, std::size_t e) {
    return (ps[e] - ps[b]) / static_cast<double>(e - b);
  };

  bool in_drop = false;
  std::size_t best_i = 0;
  double best_q = 0.0;
  for (std::size_t i = w; i + w < nv; ++i) {
    const double before = mean(i - w, i);
    const double after = mean(i, i + w);
    // a touchdown is a drop out of a genuine swing, not out of stillness
    if (before < 0.2 * vmax) {
      if (in_drop) {
        out.push_back({best_i, ts.values[best_i]});
        in_drop = false;
      }
      continue;
    }
    const double q = after / before;
    if (q < opt.ratio) {
      if (!in_drop || q < best_q) {
        best_i = i;
        best_q = q;
      }
      in_drop = true;
    } else if (in_drop) {
      out.push_back({best_i, ts.values[best_i]});
      in_drop = false;
    }
  }
  if (in_drop) out.push_back({best_i, ts.values[best_i]});
  return out;
}

}  // namespace slipgait
