#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <variant>

#include "slipgait/integrate.hpp"
#include "slipgait/model.hpp"
#include "slipgait/trajectory.hpp"

namespace slipgait {

// ---------------------------------------------------------------------------
// Conventions.
//
// theta is the support-leg angle from the horizontal, increasing in the
// direction of travel (see StanceState).  The angle of attack alpha is
// measured from the VERTICAL: a touchdown fires when the CoM height falls to
// r0*cos(alpha) and the landing leg starts at theta = pi/2 - alpha.  With
// these two choices the touchdown height, the landing chart and the contact
// separation are mutually consistent and every phase switch conserves the
// total mechanical energy exactly.
// ---------------------------------------------------------------------------

inline constexpr double kHalfPi = 1.5707963267948966;

/// dX/dt of the ballistic phase.
inline FlightState flight_derivatives(const FlightState& s, const ModelParams& p) {
  return {s.vx, s.vy, 0.0, -p.g};
}

/// dX/dt of the single-stance phase (spring + gravity about the foot).
inline StanceState single_stance_derivatives(const StanceState& s,
                                             const ModelParams& p) {
  if (!(s.r > 0.0)) throw std::domain_error("single_stance_derivatives: r <= 0");
  const double sn = std::sin(s.theta), cs = std::cos(s.theta);
  const double rdd = p.k / p.m * (p.r0 - s.r) + s.r * s.thetadot * s.thetadot -
                     p.g * sn;
  const double tdd = -(2.0 * s.rdot * s.thetadot + p.g * cs) / s.r;
  return {s.rdot, s.thetadot, rdd, tdd, 0.0};
}

/// dX/dt of the double-stance phase.  The front leg owns the chart; the back
/// leg acts through its length (law of cosines) and direction.
inline StanceState double_stance_derivatives(const DoubleStanceState& s,
                                             const ModelParams& p) {
  if (!(s.r > 0.0)) throw std::domain_error("double_stance_derivatives: r <= 0");
  const double rb = back_leg_length(s);
  if (!(rb > 0.0)) throw std::domain_error("double_stance_derivatives: r_back <= 0");
  const double sn = std::sin(s.theta), cs = std::cos(s.theta);
  const double f = 1.0 - p.r0 / rb;  // back-spring load factor (<= 0 compressed)
  const double rdd = p.k / p.m * ((p.r0 - s.r) + f * (s.x_sep * cs - s.r)) +
                     s.r * s.thetadot * s.thetadot - p.g * sn;
  const double tdd =
      -(p.k / p.m * f * s.x_sep * sn + 2.0 * s.rdot * s.thetadot + p.g * cs) /
      s.r;
  return {s.rdot, s.thetadot, rdd, tdd, 0.0};
}

// --- event functions ---------------------------------------------------------

struct EventEval {
  double residual = 0.0;
  bool guard = false;
};

namespace detail {

inline double rback_rate(const DoubleStanceState& d) {
  const double rb = back_leg_length(d);
  return (d.r * d.rdot -
          d.x_sep * (d.rdot * std::cos(d.theta) -
                     d.r * d.thetadot * std::sin(d.theta))) /
         rb;
}

// Horizontal CoM acceleration, used to direction-filter the backwards monitor.
inline double com_xacc(const StanceState& s, const ModelParams& p) {
  const StanceState d = single_stance_derivatives(s, p);
  const double sn = std::sin(s.theta), cs = std::cos(s.theta);
  return -d.rdot * cs + 2.0 * s.rdot * s.thetadot * sn +
         s.r * s.thetadot * s.thetadot * cs + s.r * sn * d.thetadot;
}

inline double com_xacc(const DoubleStanceState& s, const ModelParams& p) {
  const StanceState d = double_stance_derivatives(s, p);
  const double sn = std::sin(s.theta), cs = std::cos(s.theta);
  return -d.rdot * cs + 2.0 * s.rdot * s.thetadot * sn +
         s.r * s.thetadot * s.thetadot * cs + s.r * sn * d.thetadot;
}

}  // namespace detail

/// Residual whose zero crossing locates the event, plus the directional guard
/// evaluated at the same state.  Throws std::invalid_argument when the kind
/// does not apply to the state's phase.
inline EventEval evaluate_event(EventKind kind, const HybridState& s,
                                double alpha, const ModelParams& p) {
  switch (kind) {
    case EventKind::Touchdown: {
      const auto* f = std::get_if<FlightState>(&s);
      if (!f) break;
      return {f->y - p.r0 * std::cos(alpha), f->vy < 0.0};
    }
    case EventKind::Takeoff: {
      const auto* st = std::get_if<StanceState>(&s);
      if (st) return {st->r - p.r0, st->rdot > 0.0};
      // front leg reaching natural length in double stance (a forbidden
      // double->flight attempt) uses the same residual
      const auto* d = std::get_if<DoubleStanceState>(&s);
      if (!d) break;
      return {d->r - p.r0, d->rdot > 0.0};
    }
    case EventKind::StanceToDouble: {
      const auto* st = std::get_if<StanceState>(&s);
      if (!st) break;
      return {st->r * std::sin(st->theta) - p.r0 * std::cos(alpha),
              st->theta > kHalfPi};
    }
    case EventKind::DoubleToStance: {
      const auto* d = std::get_if<DoubleStanceState>(&s);
      if (!d) break;
      return {back_leg_length(*d) - p.r0, detail::rback_rate(*d) > 0.0};
    }
    case EventKind::SectionCrossing: {
      if (const auto* st = std::get_if<StanceState>(&s))
        return {st->theta - kHalfPi, st->thetadot > 0.0};
      if (const auto* d = std::get_if<DoubleStanceState>(&s))
        return {d->theta - kHalfPi, d->thetadot > 0.0};
      break;
    }
    case EventKind::Failure:
      break;
  }
  throw std::invalid_argument("evaluate_event: event kind incompatible with phase");
}

// --- phase-switch maps -------------------------------------------------------

/// Applies the chart change of a fired event.  The identity-like maps keep
/// the CoM position and velocity bit-exact, so total energy is conserved to
/// machine precision across every switch.
inline std::variant<HybridState, FailureKind> switch_phase(
    EventKind kind, const HybridState& s, double alpha, const ModelParams& p) {
  switch (kind) {
    case EventKind::Takeoff: {
      const auto* st = std::get_if<StanceState>(&s);
      if (!st) break;
      const ComState c = com_state(*st);
      if (!(c.y > 0.0)) return FailureKind::ForbiddenTransition;
      return HybridState{FlightState{c.x, c.y, c.vx, c.vy}};
    }
    case EventKind::Touchdown: {
      const auto* f = std::get_if<FlightState>(&s);
      if (!f) break;
      const double th = kHalfPi - alpha;
      const double sn = std::sin(th), cs = std::cos(th);
      StanceState st;
      st.r = p.r0;
      st.theta = th;
      st.rdot = -f->vx * cs + f->vy * sn;
      st.thetadot = (f->vx * sn + f->vy * cs) / p.r0;
      st.foot_x = f->x + p.r0 * cs;
      if (!(st.theta > 0.0 && st.theta < kHalfPi + 1e-12))
        return FailureKind::ForbiddenTransition;
      return HybridState{st};
    }
    case EventKind::StanceToDouble: {
      const auto* st = std::get_if<StanceState>(&s);
      if (!st) break;
      const ComState c = com_state(*st);
      const double th = kHalfPi - alpha;
      const double sn = std::sin(th), cs = std::cos(th);
      DoubleStanceState d;
      d.r = p.r0;
      d.theta = th;
      d.rdot = -c.vx * cs + c.vy * sn;
      d.thetadot = (c.vx * sn + c.vy * cs) / p.r0;
      d.x_sep = p.r0 * cs - st->r * std::cos(st->theta);
      d.foot_x = st->foot_x + d.x_sep;
      if (!(d.x_sep > 0.0)) return FailureKind::ForbiddenTransition;
      // the released-to-back leg must still be compressed
      if (back_leg_length(d) > p.r0 * (1.0 + 1e-9))
        return FailureKind::ForbiddenTransition;
      return HybridState{d};
    }
    case EventKind::DoubleToStance: {
      const auto* d = std::get_if<DoubleStanceState>(&s);
      if (!d) break;
      return HybridState{StanceState{d->r, d->theta, d->rdot, d->thetadot, d->foot_x}};
    }
    default:
      break;
  }
  throw std::invalid_argument("switch_phase: event kind incompatible with phase");
}

// --- event-driven phase integration -------------------------------------------

struct DynamicsOptions {
  IntegrateOptions integ{};
  double max_phase_time_factor = 10.0;  ///< horizon = factor * sqrt(r0/g)
  double record_stride = 1e-3;
};

/// Streams dense samples onto a Trajectory at a fixed global tick grid.
class TrajectoryRecorder {
 public:
  TrajectoryRecorder(Trajectory& traj, const ModelParams& p)
      : traj_(traj), p_(p) {
    traj_.stride = stride_;
  }

  void set_stride(double s) {
    stride_ = s;
    traj_.stride = s;
    next_tick_ = std::ceil(t_cursor_ / stride_ - 1e-9) * stride_;
  }

  void start_at(double t) {
    t_cursor_ = t;
    next_tick_ = std::ceil(t / stride_ - 1e-9) * stride_;
  }

  template <class ChartToState>
  void record(double t_lo, double t_hi, const DenseSegment& dense,
              const ChartToState& to_state, int support) {
    while (next_tick_ <= t_hi + 1e-12) {
      const double t = std::max(next_tick_, t_lo);
      const HybridState hs = to_state(dense.eval(t));
      push(t, hs, support);
      next_tick_ += stride_;
    }
    t_cursor_ = t_hi;
  }

  void push(double t, const HybridState& hs, int support) {
    if (!traj_.samples.empty() && !(t > traj_.samples.back().t + 1e-12))
      return;  // keep timestamps strictly increasing
    const ComState c = com_state(hs);
    const Phase ph = phase_of(hs);
    const auto grf = normalized_grf(hs, p_, support);
    const auto contact = leg_contacts(ph, support);
    traj_.samples.push_back({t, c.x, c.y, c.vx, c.vy, ph, grf,
                             {contact[0], contact[1]}});
  }

  Trajectory& trajectory() { return traj_; }

 private:
  Trajectory& traj_;
  const ModelParams& p_;
  double stride_ = 1e-3;
  double t_cursor_ = 0.0;
  double next_tick_ = 0.0;
};

/// Integrates one phase until the first watched event fires.  Failure
/// conditions (fall, backwards motion, horizon timeout) are monitored
/// implicitly and reported as PhaseEvent{Failure, ...}, never thrown.
/// `support` only labels recorded samples with the owning leg.
inline PhaseEvent integrate_until_event(const HybridState& s0,
                                        std::span<const EventKind> watched,
                                        double alpha, const ModelParams& p,
                                        const DynamicsOptions& opts = {},
                                        TrajectoryRecorder* rec = nullptr,
                                        double t_start = 0.0, int support = 0) {
  const Phase phase = phase_of(s0);
  const double horizon = opts.max_phase_time_factor * std::sqrt(p.r0 / p.g);
  const double t_end = t_start + horizon;

  // Immediate backwards check: vx is an invariant of flight and the monitor
  // below only reacts to sign *crossings*.
  {
    const ComState c = com_state(s0);
    if (c.vx < 0.0) {
      return {EventKind::Failure, t_start, s0, FailureKind::Backwards};
    }
  }

  // Map chart vectors back to hybrid states (per-phase constants captured).
  struct Consts {
    double foot_x = 0.0, x_sep = 0.0;
  } cst;
  if (const auto* st = std::get_if<StanceState>(&s0)) cst.foot_x = st->foot_x;
  if (const auto* d = std::get_if<DoubleStanceState>(&s0)) {
    cst.foot_x = d->foot_x;
    cst.x_sep = d->x_sep;
  }

  auto to_state = [phase, cst](const Vec4& y) -> HybridState {
    switch (phase) {
      case Phase::Flight: return FlightState{y[0], y[1], y[2], y[3]};
      case Phase::SingleStance:
        return StanceState{y[0], y[1], y[2], y[3], cst.foot_x};
      case Phase::DoubleStance:
        return DoubleStanceState{y[0], y[1], y[2], y[3], cst.x_sep, cst.foot_x};
    }
    return FlightState{};
  };

  Vec4 y0;
  switch (phase) {
    case Phase::Flight: {
      const auto& f = std::get<FlightState>(s0);
      y0 = {f.x, f.y, f.vx, f.vy};
      break;
    }
    case Phase::SingleStance: {
      const auto& st = std::get<StanceState>(s0);
      y0 = {st.r, st.theta, st.rdot, st.thetadot};
      break;
    }
    case Phase::DoubleStance: {
      const auto& d = std::get<DoubleStanceState>(s0);
      y0 = {d.r, d.theta, d.rdot, d.thetadot};
      break;
    }
  }

  auto rhs = [phase, cst, &p](const Vec4& y, Vec4& dy) {
    switch (phase) {
      case Phase::Flight:
        dy = {y[2], y[3], 0.0, -p.g};
        return;
      case Phase::SingleStance: {
        const double sn = std::sin(y[1]), cs = std::cos(y[1]);
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = p.k / p.m * (p.r0 - y[0]) + y[0] * y[3] * y[3] - p.g * sn;
        dy[3] = -(2.0 * y[2] * y[3] + p.g * cs) / y[0];
        return;
      }
      case Phase::DoubleStance: {
        const double sn = std::sin(y[1]), cs = std::cos(y[1]);
        const double x = cst.x_sep;
        const double rb =
            std::sqrt(y[0] * y[0] + x * x - 2.0 * y[0] * x * cs);
        const double f = 1.0 - p.r0 / rb;
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = p.k / p.m * ((p.r0 - y[0]) + f * (x * cs - y[0])) +
                y[0] * y[3] * y[3] - p.g * sn;
        dy[3] = -(p.k / p.m * f * x * sn + 2.0 * y[2] * y[3] + p.g * cs) / y[0];
        return;
      }
    }
  };

  // Watched task events first, then the fall / backwards monitors.  The
  // residuals are specialized on the raw chart vector; this loop is the
  // hottest code in every region sweep.
  const int n_task = static_cast<int>(watched.size());
  const bool in_flight = phase == Phase::Flight;
  const int n_total = n_task + (in_flight ? 1 : 2);

  enum Code : int {
    kTouchdown,
    kTakeoff,
    kStanceToDouble,
    kDoubleToStance,
    kSection,
    kFallFlight,
    kFallStance,
    kBackwards,
  };
  int codes[8];
  for (int e = 0; e < n_task; ++e) {
    switch (watched[e]) {
      case EventKind::Touchdown: codes[e] = kTouchdown; break;
      case EventKind::Takeoff: codes[e] = kTakeoff; break;
      case EventKind::StanceToDouble: codes[e] = kStanceToDouble; break;
      case EventKind::DoubleToStance: codes[e] = kDoubleToStance; break;
      case EventKind::SectionCrossing: codes[e] = kSection; break;
      case EventKind::Failure:
        throw std::invalid_argument("integrate_until_event: Failure not watchable");
    }
  }
  codes[n_task] = in_flight ? kFallFlight : kFallStance;
  if (!in_flight) codes[n_task + 1] = kBackwards;

  struct Ev {
    int n_total;
    const int* codes;
    double td_height;  // r0 * cos(alpha)
    double r0, x_sep;
    const ModelParams* p;

    int count() const { return n_total; }

    double residual(int e, const Vec4& y) const {
      switch (codes[e]) {
        case kTouchdown: return y[1] - td_height;
        case kTakeoff: return y[0] - r0;
        case kStanceToDouble: return y[0] * std::sin(y[1]) - td_height;
        case kDoubleToStance: {
          const double x = x_sep;
          return std::sqrt(y[0] * y[0] + x * x -
                           2.0 * y[0] * x * std::cos(y[1])) -
                 r0;
        }
        case kSection: return y[1] - kHalfPi;
        case kFallFlight: return y[1];
        case kFallStance: return y[0] * std::sin(y[1]);
        case kBackwards:
          return -y[2] * std::cos(y[1]) + y[0] * std::sin(y[1]) * y[3];
      }
      return 0.0;
    }

    bool guard(int e, const Vec4& y) const {
      switch (codes[e]) {
        case kTouchdown: return y[3] < 0.0;  // falling
        case kTakeoff: return y[2] > 0.0;    // extending
        case kStanceToDouble: return y[1] > kHalfPi;
        case kDoubleToStance: {
          const double x = x_sep;
          const double rb = std::sqrt(y[0] * y[0] + x * x -
                                      2.0 * y[0] * x * std::cos(y[1]));
          return (y[0] * y[2] -
                  x * (y[2] * std::cos(y[1]) - y[0] * y[3] * std::sin(y[1]))) /
                     rb >
                 0.0;
        }
        case kSection: return y[3] > 0.0;
        case kFallFlight: return y[3] < 0.0;
        case kFallStance:  // CoM descending
          return y[2] * std::sin(y[1]) + y[0] * std::cos(y[1]) * y[3] < 0.0;
        case kBackwards: {
          // only a decelerating crossing counts; a residual resting at zero
          // never fires
          const bool dbl = x_sep > 0.0;
          const HybridState hs =
              dbl ? HybridState{DoubleStanceState{y[0], y[1], y[2], y[3], x_sep, 0.0}}
                  : HybridState{StanceState{y[0], y[1], y[2], y[3], 0.0}};
          if (const auto* st = std::get_if<StanceState>(&hs))
            return detail::com_xacc(*st, *p) < 0.0;
          return detail::com_xacc(std::get<DoubleStanceState>(hs), *p) < 0.0;
        }
      }
      return false;
    }
  } ev{n_total, codes, p.r0 * std::cos(alpha), p.r0, cst.x_sep, &p};

  IntegrateOptions iopt = opts.integ;
  auto on_step = [&](double lo, double hi, const DenseSegment& dense) {
    if (rec) rec->record(lo, hi, dense, to_state, support);
  };

  const EventHit hit =
      integrate_with_events(rhs, ev, y0, t_start, t_end, iopt, on_step);

  if (hit.timed_out) {
    return {EventKind::Failure, hit.t, to_state(hit.y),
            FailureKind::ForbiddenTransition};
  }
  if (hit.index >= n_task) {
    const FailureKind fk =
        (hit.index == n_task) ? FailureKind::Fall : FailureKind::Backwards;
    return {EventKind::Failure, hit.t, to_state(hit.y), fk};
  }
  return {watched[hit.index], hit.t, to_state(hit.y), std::nullopt};
}

/// Angle-sweep kernel for walking-like steps.  A first stance phase from the
/// section does not depend on the angle of attack except through the
/// touchdown height threshold r0*cos(alpha), so one integration serves every
/// sampled angle: for each threshold (sorted descending, i.e. alpha
/// ascending) this returns exactly the event a per-angle
/// integrate_until_event({StanceToDouble, Takeoff}) run would produce —
/// the same accepted-step sequence, the same scan brackets, the same
/// refinement — including the terminal takeoff/failure shared by thresholds
/// the trajectory never reached.
inline std::vector<PhaseEvent> stance_touchdown_table(
    const StanceState& s0, std::span<const double> thresholds,
    const ModelParams& p, const DynamicsOptions& opts = {},
    double t_start = 0.0) {
  const std::size_t n_thr = thresholds.size();
  std::vector<PhaseEvent> out(n_thr);
  std::vector<uint8_t> fired(n_thr, 0);
  std::size_t n_fired = 0;

  const double horizon = opts.max_phase_time_factor * std::sqrt(p.r0 / p.g);
  const double t_end = t_start + horizon;
  const IntegrateOptions& iopt = opts.integ;
  const double foot_x = s0.foot_x;

  auto to_state = [foot_x](const Vec4& y) -> HybridState {
    return StanceState{y[0], y[1], y[2], y[3], foot_x};
  };
  auto terminal_all = [&](const PhaseEvent& ev) {
    for (std::size_t j = 0; j < n_thr; ++j)
      if (!fired[j]) out[j] = ev;
  };

  {
    const ComState c = com_state(s0);
    if (c.vx < 0.0) {
      terminal_all({EventKind::Failure, t_start, HybridState{s0},
                    FailureKind::Backwards});
      return out;
    }
  }

  auto rhs = [&p](const Vec4& y, Vec4& dy) {
    const double sn = std::sin(y[1]), cs = std::cos(y[1]);
    dy[0] = y[2];
    dy[1] = y[3];
    dy[2] = p.k / p.m * (p.r0 - y[0]) + y[0] * y[3] * y[3] - p.g * sn;
    dy[3] = -(2.0 * y[2] * y[3] + p.g * cs) / y[0];
  };
  auto height = [](const Vec4& y) { return y[0] * std::sin(y[1]); };
  auto vy_of = [](const Vec4& y) {
    return y[2] * std::sin(y[1]) + y[0] * std::cos(y[1]) * y[3];
  };
  auto vx_of = [](const Vec4& y) {
    return -y[2] * std::cos(y[1]) + y[0] * std::sin(y[1]) * y[3];
  };
  auto xacc_neg = [&](const Vec4& y) {
    return detail::com_xacc(StanceState{y[0], y[1], y[2], y[3], 0.0}, p) < 0.0;
  };

  // terminal monitors in the per-angle watch order: takeoff, fall, backwards
  enum Term { kTakeoff = 0, kFall = 1, kBackwards = 2 };
  auto term_residual = [&](int e, const Vec4& y) {
    switch (e) {
      case kTakeoff: return y[0] - p.r0;
      case kFall: return height(y);
      default: return vx_of(y);
    }
  };
  auto term_guard = [&](int e, const Vec4& y) {
    switch (e) {
      case kTakeoff: return y[2] > 0.0;
      case kFall: return vy_of(y) < 0.0;
      default: return xacc_neg(y);
    }
  };
  auto term_event = [&](int e, double t, const Vec4& y) -> PhaseEvent {
    if (e == kTakeoff) return {EventKind::Takeoff, t, to_state(y), std::nullopt};
    return {EventKind::Failure, t, to_state(y),
            e == kFall ? FailureKind::Fall : FailureKind::Backwards};
  };

  Vec4 y = {s0.r, s0.theta, s0.rdot, s0.thetadot};

  // immediate events at the phase start, in the per-angle watch order
  if (s0.theta > kHalfPi) {
    const double h0 = height(y);
    for (std::size_t j = 0; j < n_thr; ++j) {
      if (std::abs(h0 - thresholds[j]) <= iopt.event_residual_tol) {
        out[j] = {EventKind::StanceToDouble, t_start, HybridState{s0},
                  std::nullopt};
        fired[j] = 1;
        ++n_fired;
      }
    }
  }
  for (int e = 0; e < 3; ++e) {
    if (std::abs(term_residual(e, y)) <= iopt.event_residual_tol &&
        term_guard(e, y)) {
      terminal_all(term_event(e, t_start, y));
      return out;
    }
  }

  // thresholds are descending; heights strictly between two scan samples pick
  // out a contiguous index range
  auto crossed_range = [&](double a, double b) -> std::pair<std::size_t, std::size_t> {
    const double lo = std::min(a, b), hi = std::max(a, b);
    // first index with threshold < hi  (descending order)
    std::size_t first =
        std::upper_bound(thresholds.begin(), thresholds.end(), hi,
                         [](double v, double thr) { return v > thr; }) -
        thresholds.begin();
    // first index with threshold <= lo
    std::size_t last =
        std::lower_bound(thresholds.begin() + first, thresholds.end(), lo,
                         [](double thr, double v) { return thr > v; }) -
        thresholds.begin();
    return {first, last};
  };

  double t = t_start;
  double h = std::min({iopt.h_init, iopt.h_max, t_end - t_start});
  Vec4 k1;
  rhs(y, k1);
  DenseSegment dense;
  Vec4 y_new, k_new;
  constexpr int kScan = 2;
  int term_sign[3];
  for (int e = 0; e < 3; ++e) term_sign[e] = sign_of(term_residual(e, y));

  while (t < t_end) {
    h = std::min(h, t_end - t);
    if (h < 1e-14 * std::max(1.0, std::abs(t))) break;
    double err = 0.0;
    dp45_step(rhs, t, y, k1, h, y_new, k_new, err, &dense, iopt);
    if (!std::isfinite(err)) err = 1e6;
    if (err > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      continue;
    }

    double hgt[kScan + 1];
    Vec4 ys[kScan + 1];
    ys[0] = y;
    hgt[0] = height(y);
    int tsig[3][kScan + 1];
    for (int e = 0; e < 3; ++e) tsig[e][0] = term_sign[e];
    for (int s = 1; s <= kScan; ++s) {
      const double tt = t + h * s / kScan;
      ys[s] = (s == kScan) ? y_new : dense.eval(tt);
      hgt[s] = height(ys[s]);
      for (int e = 0; e < 3; ++e) {
        const int sg = sign_of(term_residual(e, ys[s]));
        tsig[e][s] = (sg == 0) ? tsig[e][s - 1] : sg;
      }
    }

    for (int s = 1; s <= kScan; ++s) {
      const double lo_t = t + h * (s - 1) / kScan, hi_t = t + h * s / kScan;

      // touchdown thresholds crossed in this scan interval (event index 0 in
      // the per-angle watch order, so they precede the takeoff monitor)
      const auto [jf, jl] = crossed_range(hgt[s - 1], hgt[s]);
      for (std::size_t j = jf; j < jl; ++j) {
        if (fired[j]) continue;
        const double thr = thresholds[j];
        const auto residual = [&](const Vec4& yy) { return height(yy) - thr; };
        const int sgn_lo = sign_of(hgt[s - 1] - thr);
        if (sgn_lo == 0) continue;
        const auto [t_hit, y_hit] = refine_crossing(
            rhs, residual, t, y, k1, h, dense, lo_t, hi_t, sgn_lo, iopt);
        if (y_hit[1] > kHalfPi) {  // guard: mass tilted forward
          out[j] = {EventKind::StanceToDouble, t_hit, to_state(y_hit),
                    std::nullopt};
          fired[j] = 1;
          ++n_fired;
        }
      }

      for (int e = 0; e < 3; ++e) {
        if (tsig[e][s - 1] == 0 || tsig[e][s] == 0) continue;
        if (tsig[e][s] == tsig[e][s - 1]) continue;
        const auto residual = [&](const Vec4& yy) { return term_residual(e, yy); };
        const auto [t_hit, y_hit] = refine_crossing(
            rhs, residual, t, y, k1, h, dense, lo_t, hi_t, tsig[e][s - 1], iopt);
        if (term_guard(e, y_hit)) {
          terminal_all(term_event(e, t_hit, y_hit));
          return out;
        }
      }
    }

    t += h;
    y = y_new;
    k1 = k_new;
    for (int e = 0; e < 3; ++e) term_sign[e] = tsig[e][kScan];
    h = std::min(h * step_scale_factor(err), iopt.h_max);
    if (n_fired == n_thr) return out;
  }

  terminal_all({EventKind::Failure, t_end, to_state(y),
                FailureKind::ForbiddenTransition});
  return out;
}

}  // namespace slipgait
