#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "slipgait/dynamics.hpp"
#include "slipgait/model.hpp"
#include "slipgait/trajectory.hpp"

namespace slipgait {

// ---------------------------------------------------------------------------
// The section S: single stance with the support leg vertical (theta = pi/2).
// A section state is (r, vy) at fixed total energy E; the forward velocity is
// implied by the energy and is taken non-negative.  At S the chart gives
// vx = r * thetadot and vy = rdot, so embedding uses thetadot = vx / r.
// ---------------------------------------------------------------------------

struct SectionState {
  double r = 0.0;   ///< leg length = CoM height at vertical posture [m]
  double vy = 0.0;  ///< vertical velocity [m/s]
  double E = 0.0;   ///< total mechanical energy [J]
};

enum class GaitKind { Running, Walking, GroundedRunning };

inline const char* gait_name(GaitKind g) {
  switch (g) {
    case GaitKind::Running: return "running";
    case GaitKind::Walking: return "walking";
    case GaitKind::GroundedRunning: return "grounded_running";
  }
  return "?";
}

/// vx^2 implied by the energy constraint (negative when s is outside the
/// reachable ellipsoid).
inline double section_vx_sq(const SectionState& s, const ModelParams& p) {
  const double dr = p.r0 - s.r;
  return 2.0 * (s.E - 0.5 * p.k * dr * dr - p.m * p.g * s.r) / p.m -
         s.vy * s.vy;
}

inline bool section_valid(const SectionState& s, const ModelParams& p) {
  return s.r > 0.0 && s.r <= p.r0 * (1.0 + 1e-12) &&
         section_vx_sq(s, p) >= -1e-12;
}

/// Embeds a section state into the single-stance chart (theta = pi/2).
inline StanceState embed(const SectionState& s, const ModelParams& p) {
  if (!section_valid(s, p))
    throw std::domain_error("embed: section state violates the energy ellipsoid");
  const double vx = std::sqrt(std::max(0.0, section_vx_sq(s, p)));
  return {s.r, kHalfPi, s.vy, vx / s.r, 0.0};
}

/// Reads a section state off a stance state at the vertical posture.
inline SectionState observe(const StanceState& st, const ModelParams& p) {
  return {st.r, st.rdot, energy(st, p)};
}

// ---------------------------------------------------------------------------

struct StepOptions {
  bool record = false;
  double stride = 1e-3;
  double t0 = 0.0;
  double foot_x = 0.0;
  int support_leg = 0;
  Trajectory* sink = nullptr;  ///< append here when recording
  DynamicsOptions dyn{};
};

struct StepOutcome {
  bool ok = false;
  SectionState next{};  ///< valid when ok
  GaitKind realized = GaitKind::Running;
  double duration = 0.0;
  std::optional<FailureKind> failure;
  double end_foot_x = 0.0;  ///< for chaining steps
  int end_support = 0;
  std::vector<PhaseEvent> events;
};

namespace detail {

struct StepCtx {
  const ModelParams* p;
  const StepOptions* opts;
  TrajectoryRecorder* rec = nullptr;
  std::vector<PhaseEvent> events;
  int support = 0;
};

inline StepOutcome fail_step(StepCtx& ctx, const PhaseEvent& at, FailureKind fk) {
  ctx.events.push_back({EventKind::Failure, at.time, at.state, fk});
  StepOutcome out;
  out.ok = false;
  out.failure = fk;
  out.duration = at.time - ctx.opts->t0;
  out.events = std::move(ctx.events);
  return out;
}

inline StepOutcome finish_step(StepCtx& ctx, const PhaseEvent& section_ev,
                               GaitKind realized) {
  const auto& fin = std::get<StanceState>(section_ev.state);
  StepOutcome out;
  out.ok = true;
  out.next = {fin.r, fin.rdot, energy(fin, *ctx.p)};
  out.realized = realized;
  out.duration = section_ev.time - ctx.opts->t0;
  out.end_foot_x = fin.foot_x;
  out.end_support = ctx.support;
  out.events = std::move(ctx.events);
  if (ctx.rec && ctx.opts->sink) {
    ctx.opts->sink->section_marks.push_back(
        {ctx.opts->sink->samples.size(), section_ev.time, ctx.support});
    ctx.rec->push(section_ev.time, section_ev.state, ctx.support);
    ctx.opts->sink->events.insert(ctx.opts->sink->events.end(),
                                  out.events.begin(), out.events.end());
  }
  return out;
}

/// Phases after a walking-like first stance: classification of the realized
/// gait from the touchdown event, double stance, and the final stance up to
/// the section.  ev1 is the raw phase-1 event ({StanceToDouble, Takeoff} or a
/// failure).
inline StepOutcome walk_after_phase1(StepCtx ctx, const PhaseEvent& ev1,
                                     double alpha) {
  const ModelParams& p = *ctx.p;
  if (ev1.kind == EventKind::Failure) return fail_step(ctx, ev1, *ev1.failure);
  if (ev1.kind == EventKind::Takeoff) {
    // the stance leg unloaded before the swing leg could be placed
    return fail_step(ctx, ev1, FailureKind::ForbiddenTransition);
  }
  ctx.events.push_back(ev1);

  const GaitKind realized = com_state(ev1.state).vy < 0.0
                                ? GaitKind::Walking
                                : GaitKind::GroundedRunning;
  auto sw = switch_phase(ev1.kind, ev1.state, alpha, p);
  if (const auto* fk = std::get_if<FailureKind>(&sw))
    return fail_step(ctx, ev1, *fk);
  HybridState cur = std::get<HybridState>(sw);
  ctx.support = 1 - ctx.support;  // the new front leg touched down
  double t = ev1.time;

  {
    const EventKind watched[] = {EventKind::DoubleToStance, EventKind::Takeoff,
                                 EventKind::SectionCrossing};
    const PhaseEvent ev = integrate_until_event(cur, std::span(watched), alpha,
                                                p, ctx.opts->dyn, ctx.rec, t,
                                                ctx.support);
    if (ev.kind == EventKind::Failure) return fail_step(ctx, ev, *ev.failure);
    if (ev.kind != EventKind::DoubleToStance) {
      // front leg unloading mid double stance, or a vertical posture reached
      // before the back leg released: no section crossing can follow
      return fail_step(ctx, ev, FailureKind::ForbiddenTransition);
    }
    ctx.events.push_back(ev);
    t = ev.time;
    auto sw2 = switch_phase(ev.kind, ev.state, alpha, p);
    if (const auto* fk = std::get_if<FailureKind>(&sw2))
      return fail_step(ctx, ev, *fk);
    cur = std::get<HybridState>(sw2);
  }

  const EventKind watched[] = {EventKind::SectionCrossing, EventKind::Takeoff};
  const PhaseEvent ev = integrate_until_event(cur, std::span(watched), alpha, p,
                                              ctx.opts->dyn, ctx.rec, t,
                                              ctx.support);
  if (ev.kind == EventKind::Failure) return fail_step(ctx, ev, *ev.failure);
  if (ev.kind == EventKind::Takeoff)
    return fail_step(ctx, ev, FailureKind::ForbiddenTransition);
  ctx.events.push_back(ev);
  return finish_step(ctx, ev, realized);
}

/// Phases after a running first stance: flight and the landing stance up to
/// the section.  ev1 is the raw phase-1 event ({Takeoff} or a failure).
inline StepOutcome run_after_phase1(StepCtx ctx, const PhaseEvent& ev1,
                                    double alpha) {
  const ModelParams& p = *ctx.p;
  if (ev1.kind == EventKind::Failure) return fail_step(ctx, ev1, *ev1.failure);
  ctx.events.push_back(ev1);
  auto sw = switch_phase(ev1.kind, ev1.state, alpha, p);
  if (const auto* fk = std::get_if<FailureKind>(&sw))
    return fail_step(ctx, ev1, *fk);
  HybridState cur = std::get<HybridState>(sw);
  double t = ev1.time;

  {
    const EventKind watched[] = {EventKind::Touchdown};
    const PhaseEvent ev = integrate_until_event(cur, std::span(watched), alpha,
                                                p, ctx.opts->dyn, ctx.rec, t,
                                                ctx.support);
    if (ev.kind == EventKind::Failure) return fail_step(ctx, ev, *ev.failure);
    ctx.events.push_back(ev);
    t = ev.time;
    auto sw2 = switch_phase(ev.kind, ev.state, alpha, p);
    if (const auto* fk = std::get_if<FailureKind>(&sw2))
      return fail_step(ctx, ev, *fk);
    cur = std::get<HybridState>(sw2);
    ctx.support = 1 - ctx.support;  // landing leg takes over
  }

  const EventKind watched[] = {EventKind::SectionCrossing, EventKind::Takeoff};
  const PhaseEvent ev = integrate_until_event(cur, std::span(watched), alpha, p,
                                              ctx.opts->dyn, ctx.rec, t,
                                              ctx.support);
  if (ev.kind == EventKind::Failure) return fail_step(ctx, ev, *ev.failure);
  if (ev.kind == EventKind::Takeoff)
    return fail_step(ctx, ev, FailureKind::ForbiddenTransition);  // bounced off
  ctx.events.push_back(ev);
  return finish_step(ctx, ev, GaitKind::Running);
}

inline StepCtx make_ctx(const ModelParams& p, const StepOptions& opts,
                        TrajectoryRecorder* rec) {
  StepCtx ctx;
  ctx.p = &p;
  ctx.opts = &opts;
  ctx.rec = rec;
  ctx.events.reserve(4);
  ctx.support = opts.support_leg;
  return ctx;
}

}  // namespace detail

/// One full return to the section S through the requested gait's phase
/// sequence:
///   Running:                 stance -> flight -> stance
///   Walking/GroundedRunning: stance -> double stance -> stance
/// Walking and grounded running share the sequence and are told apart by the
/// sign of vy when the swing leg touches down; a request for one that
/// realizes the other is reported as such, not failed.  Every other deviation
/// from the requested sequence, and every fall / backwards / timeout, comes
/// back as a FailureKind.
inline StepOutcome step(const SectionState& s, GaitKind gait, double alpha,
                        const ModelParams& p, const StepOptions& opts = {}) {
  if (!(alpha > 0.0 && alpha < kHalfPi) || !section_valid(s, p)) {
    StepOutcome out;
    out.failure = FailureKind::ForbiddenTransition;
    return out;
  }

  StanceState st = embed(s, p);
  st.foot_x = opts.foot_x;

  std::optional<TrajectoryRecorder> rec;
  if (opts.record && opts.sink) {
    rec.emplace(*opts.sink, p);
    rec->set_stride(opts.stride);
    rec->start_at(opts.t0);
    if (opts.sink->section_marks.empty()) {
      opts.sink->section_marks.push_back(
          {opts.sink->samples.size(), opts.t0, opts.support_leg});
    }
  }
  detail::StepCtx ctx = detail::make_ctx(p, opts, rec ? &*rec : nullptr);

  if (gait == GaitKind::Running) {
    const EventKind watched[] = {EventKind::Takeoff};
    const PhaseEvent ev1 =
        integrate_until_event(HybridState{st}, std::span(watched), alpha, p,
                              opts.dyn, ctx.rec, opts.t0, ctx.support);
    return detail::run_after_phase1(std::move(ctx), ev1, alpha);
  }
  const EventKind watched[] = {EventKind::StanceToDouble, EventKind::Takeoff};
  const PhaseEvent ev1 =
      integrate_until_event(HybridState{st}, std::span(watched), alpha, p,
                            opts.dyn, ctx.rec, opts.t0, ctx.support);
  return detail::walk_after_phase1(std::move(ctx), ev1, alpha);
}

/// Hopping composite: one walking step with alpha followed by one running
/// step with beta.  Both sub-steps are observed at S and returned.
inline std::pair<StepOutcome, StepOutcome> step_hopping(
    const SectionState& s, double alpha, double beta, const ModelParams& p,
    const StepOptions& opts = {}) {
  const StepOutcome walk = step(s, GaitKind::Walking, alpha, p, opts);
  if (!walk.ok) return {walk, StepOutcome{}};
  StepOptions o2 = opts;
  o2.t0 = opts.t0 + walk.duration;
  o2.foot_x = walk.end_foot_x;
  o2.support_leg = walk.end_support;
  const StepOutcome run = step(walk.next, GaitKind::Running, beta, p, o2);
  return {walk, run};
}

// ---------------------------------------------------------------------------

struct AngleInterval {
  double lo = 0.0, hi = 0.0;  ///< [rad]
  double width() const { return hi - lo; }
};

/// Target predicate for valid_angle_set; null means "any successful landing".
using SectionPredicate = std::function<bool(const SectionState&)>;

/// Sweeps the angle of attack over (0, pi/2) and returns the maximal
/// contiguous intervals where a step of `gait` succeeds with the requested
/// realized gait and, if given, lands inside `target`.  Interval endpoints
/// are refined by bisection to resolution/10.
inline std::vector<AngleInterval> valid_angle_set(
    const SectionState& s, GaitKind gait, const ModelParams& p,
    const SectionPredicate& target = nullptr,
    double resolution = 0.05 * M_PI / 180.0) {
  std::vector<AngleInterval> out;
  if (!(resolution > 0.0) || !section_valid(s, p)) return out;

  auto pass = [&](double a) -> bool {
    const StepOutcome o = step(s, gait, a, p);
    return o.ok && o.realized == gait && (!target || target(o.next));
  };

  const int n = static_cast<int>(kHalfPi / resolution);
  int run_begin = -1;
  double prev_alpha = 0.0;

  auto refine = [&](double a_bad, double a_good) -> double {
    for (int it = 0; it < 24 && std::abs(a_good - a_bad) > resolution / 10.0;
         ++it) {
      const double mid = 0.5 * (a_bad + a_good);
      (pass(mid) ? a_good : a_bad) = mid;
    }
    return a_good;
  };

  for (int j = 1; j <= n + 1; ++j) {
    const double a = j * resolution;
    const bool inside = j <= n && a < kHalfPi && pass(a);
    if (inside && run_begin < 0) run_begin = j;
    if (!inside && run_begin >= 0) {
      AngleInterval iv{run_begin * resolution, prev_alpha};
      // extend outward to the true yes/no boundary
      iv.lo = refine(std::max(1e-9, iv.lo - resolution), iv.lo);
      iv.hi = refine(std::min(kHalfPi - 1e-9, iv.hi + resolution), iv.hi);
      out.push_back(iv);
      run_begin = -1;
    }
    if (inside) prev_alpha = a;
  }
  return out;
}

}  // namespace slipgait
