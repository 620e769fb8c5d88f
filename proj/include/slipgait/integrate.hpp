#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

namespace slipgait {

using Vec4 = std::array<double, 4>;

struct IntegrateOptions {
  double rtol = 1e-9;
  double atol = 1e-11;
  double event_time_tol = 1e-12;      ///< event-time refinement [s]
  double event_residual_tol = 1e-10;  ///< accepted |residual| at the event
  double h_init = 1e-3;
  double h_max = std::numeric_limits<double>::infinity();
};

/// Dense-output polynomial of one accepted Dormand-Prince step, valid on
/// [t0, t0 + h].  Quartic per component (Hairer's contd5 layout).
struct DenseSegment {
  double t0 = 0.0, h = 0.0;
  std::array<Vec4, 5> rcont{};

  Vec4 eval(double t) const {
    const double theta = (t - t0) / h;
    const double theta1 = 1.0 - theta;
    Vec4 out;
    for (int i = 0; i < 4; ++i) {
      out[i] = rcont[0][i] +
               theta * (rcont[1][i] +
                        theta1 * (rcont[2][i] +
                                  theta * (rcont[3][i] + theta1 * rcont[4][i])));
    }
    return out;
  }
};

namespace detail {

// Dormand-Prince 5(4) coefficients.
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                        a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// error = 5th-order minus embedded 4th-order solution
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output weights
inline constexpr double d1 = -12715105075.0 / 11282082432.0;
inline constexpr double d3 = 87487479700.0 / 32700410799.0;
inline constexpr double d4 = -10690763975.0 / 1880347072.0;
inline constexpr double d5 = 701980252875.0 / 199316789632.0;
inline constexpr double d6 = -1453857185.0 / 822651844.0;
inline constexpr double d7 = 69997945.0 / 29380423.0;

}  // namespace detail

/// One Dormand-Prince step of size h from (t, y); k1 = f(y) must be supplied
/// and k7 = f(y_new) is returned through k_last (FSAL).  err is the scaled
/// error estimate; dense (optional) receives the interpolant coefficients.
template <class Rhs>
inline void dp45_step(const Rhs& f, double t, const Vec4& y, const Vec4& k1,
                      double h, Vec4& y_new, Vec4& k_last, double& err,
                      DenseSegment* dense, const IntegrateOptions& opt) {
  using namespace detail;
  Vec4 k2, k3, k4, k5, k6, tmp;

  for (int i = 0; i < 4; ++i) tmp[i] = y[i] + h * a21 * k1[i];
  f(tmp, k2);
  for (int i = 0; i < 4; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
  f(tmp, k3);
  for (int i = 0; i < 4; ++i)
    tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
  f(tmp, k4);
  for (int i = 0; i < 4; ++i)
    tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
  f(tmp, k5);
  for (int i = 0; i < 4; ++i)
    tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                         a65 * k5[i]);
  f(tmp, k6);
  for (int i = 0; i < 4; ++i)
    y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                           b6 * k6[i]);
  f(y_new, k_last);  // k7

  err = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                           e6 * k6[i] + e7 * k_last[i]);
    const double sc =
        opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
    const double q = ei / sc;
    err += q * q;
  }
  err = std::sqrt(err / 4.0);

  if (dense) {
    dense->t0 = t;
    dense->h = h;
    for (int i = 0; i < 4; ++i) {
      const double dy = y_new[i] - y[i];
      const double bspl = h * k1[i] - dy;
      dense->rcont[0][i] = y[i];
      dense->rcont[1][i] = dy;
      dense->rcont[2][i] = bspl;
      dense->rcont[3][i] = dy - h * k_last[i] - bspl;
      dense->rcont[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] +
                                d5 * k5[i] + d6 * k6[i] + d7 * k_last[i]);
    }
  }
}

struct EventHit {
  int index = -1;  ///< watched-event index, or -1 when the horizon was hit
  double t = 0.0;
  Vec4 y{};
  bool timed_out = false;
};

inline int sign_of(double v) { return (v > 0.0) ? 1 : (v < 0.0 ? -1 : 0); }

inline double step_scale_factor(double err) {
  return (err > 1e-12) ? std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)))
                       : 5.0;
}

/// Refines a bracketed residual crossing inside one accepted step: bisection
/// on the dense interpolant down to the time tolerance, then the state is
/// polished with a direct RK substep from the step start, nudging the time
/// until the residual on the polished state is inside tolerance.
template <class Rhs, class ResidualFn>
inline std::pair<double, Vec4> refine_crossing(
    const Rhs& f, const ResidualFn& residual, double t, const Vec4& y,
    const Vec4& k1, double h, const DenseSegment& dense, double lo, double hi,
    int sgn_lo, const IntegrateOptions& opt) {
  for (int it = 0; it < 200 && hi - lo > opt.event_time_tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const int sm = sign_of(residual(dense.eval(mid)));
    if (sm == sgn_lo || sm == 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double t_hit = 0.5 * (lo + hi);
  Vec4 y_hit = dense.eval(t_hit);
  {
    Vec4 yp, kp;
    double e2;
    for (int it = 0; it < 3; ++it) {
      dp45_step(f, t, y, k1, t_hit - t, yp, kp, e2, nullptr, opt);
      const double r = residual(yp);
      y_hit = yp;
      if (std::abs(r) <= opt.event_residual_tol) break;
      Vec4 frhs;
      f(yp, frhs);
      const double dtau = 1e-8 * std::max(1.0, h);
      Vec4 ypp = yp;
      for (int i = 0; i < 4; ++i) ypp[i] += dtau * frhs[i];
      const double drdt = (residual(ypp) - r) / dtau;
      if (drdt == 0.0) break;
      const double t_next = t_hit - r / drdt;
      if (!(t_next > t && t_next <= t + h)) break;
      t_hit = t_next;
    }
  }
  return {t_hit, y_hit};
}

/// Adaptive integration until the first zero crossing of a watched residual
/// whose guard holds at the crossing, or until t_end (timeout).
///
/// EventFns interface: int count(); double residual(int, const Vec4&);
///                     bool guard(int, const Vec4&).
/// on_step(t_lo, t_hi, dense) is invoked for every accepted step (clipped to
/// the event time when one fires) so callers can record dense samples.
///
/// Crossings are detected by sign change between scan samples; residuals that
/// merely touch zero are ignored, and a crossing whose guard fails at the
/// refined instant is skipped.
template <class Rhs, class EventFns, class StepCb>
inline EventHit integrate_with_events(const Rhs& f, const EventFns& ev,
                                      Vec4 y, double t0, double t_end,
                                      const IntegrateOptions& opt,
                                      StepCb&& on_step) {
  const int nev = ev.count();
  constexpr int kMaxEvents = 8;
  constexpr int kScan = 2;  // scan samples per accepted step (mid + end)
  int sign_prev[kMaxEvents];

  // An event may already hold at the start of the phase (e.g. takeoff from a
  // section state with the spring exactly at natural length and extending).
  for (int e = 0; e < nev; ++e) {
    const double r = ev.residual(e, y);
    if (std::abs(r) <= opt.event_residual_tol && ev.guard(e, y)) {
      return {e, t0, y, false};
    }
    sign_prev[e] = sign_of(r);
  }

  double t = t0;
  double h = std::min({opt.h_init, opt.h_max, t_end - t0});
  Vec4 k1;
  f(y, k1);

  DenseSegment dense;
  Vec4 y_new, k_new;

  while (t < t_end) {
    h = std::min(h, t_end - t);
    if (h < 1e-14 * std::max(1.0, std::abs(t))) break;  // exhausted horizon

    double err = 0.0;
    dp45_step(f, t, y, k1, h, y_new, k_new, err, &dense, opt);
    if (!std::isfinite(err)) err = 1e6;

    if (err > 1.0) {  // reject, shrink
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      continue;
    }

    // Residual signs at the scan samples of this step.
    int sig[kMaxEvents][kScan + 1];
    for (int e = 0; e < nev; ++e) sig[e][0] = sign_prev[e];
    for (int s = 1; s <= kScan; ++s) {
      const double ts = t + h * s / kScan;
      const Vec4 ys = (s == kScan) ? y_new : dense.eval(ts);
      for (int e = 0; e < nev; ++e) {
        const int sg = sign_of(ev.residual(e, ys));
        sig[e][s] = (sg == 0) ? sig[e][s - 1] : sg;  // carry sign over zeros
      }
    }

    // Process crossings in scan order; a guard-rejected crossing is skipped
    // and later crossings (also of the same event) remain visible.
    for (int s = 1; s <= kScan; ++s) {
      for (int e = 0; e < nev; ++e) {
        if (sig[e][s - 1] == 0 || sig[e][s] == 0) continue;
        if (sig[e][s] == sig[e][s - 1]) continue;
        const auto residual = [&](const Vec4& yy) { return ev.residual(e, yy); };
        const auto [t_hit, y_hit] =
            refine_crossing(f, residual, t, y, k1, h, dense,
                            t + h * (s - 1) / kScan, t + h * s / kScan,
                            sig[e][s - 1], opt);
        if (ev.guard(e, y_hit)) {
          on_step(t, t_hit, dense);
          return {e, t_hit, y_hit, false};
        }
      }
    }

    on_step(t, t + h, dense);
    t += h;
    y = y_new;
    k1 = k_new;
    for (int e = 0; e < nev; ++e) sign_prev[e] = sig[e][kScan];
    h = std::min(h * step_scale_factor(err), opt.h_max);
  }

  return {-1, t_end, y, true};
}

}  // namespace slipgait
