#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "slipgait/section_map.hpp"
#include "slipgait/trajectory.hpp"

namespace slipgait {

/// Froude number of a section state: thetadot^2 * r0 / g, the ratio of the
/// centripetal force about the stance foot to the weight.
inline double froude_number(const SectionState& s, const ModelParams& p) {
  const StanceState st = embed(s, p);
  return st.thetadot * st.thetadot * p.r0 / p.g;
}

/// Half-open sample-index window [begin, end) on a trajectory.
struct CycleWindow {
  std::size_t begin = 0, end = 0;
};

/// One full gait cycle of one foot: the span between two consecutive section
/// crossings of the same leg (i.e. two steps).
struct GaitCycle {
  CycleWindow win;
  int foot = 0;
  double t_begin = 0.0, t_end = 0.0;
};

/// Cycle starting at section mark `first_mark` (needs marks first_mark and
/// first_mark + 2).
inline std::optional<GaitCycle> gait_cycle(const Trajectory& t,
                                           std::size_t first_mark = 0) {
  if (t.section_marks.size() < first_mark + 3) return std::nullopt;
  const StepMark& a = t.section_marks[first_mark];
  const StepMark& b = t.section_marks[first_mark + 2];
  return GaitCycle{{a.sample_index, b.sample_index}, a.support_leg, a.t, b.t};
}

/// Peak-to-peak vertical CoM amplitude over the window.  Extrema between
/// samples are refined on the cubic Hermite interpolant (y and vy are both
/// recorded), so the value is insensitive to where the sample grid falls.
inline double hip_excursion(const Trajectory& t, const CycleWindow& w) {
  if (w.end > t.samples.size() || w.end - w.begin < 2)
    throw std::domain_error("hip_excursion: degenerate cycle window");
  double lo = t.samples[w.begin].y, hi = lo;
  for (std::size_t i = w.begin; i < w.end; ++i) {
    const TrajectorySample& a = t.samples[i];
    lo = std::min(lo, a.y);
    hi = std::max(hi, a.y);
    if (i + 1 >= w.end) continue;
    const TrajectorySample& b = t.samples[i + 1];
    if (!(a.vy * b.vy < 0.0)) continue;
    // extremum of the Hermite cubic on [a, b]
    const double h = b.t - a.t;
    if (!(h > 0.0)) continue;
    const double c2 = (3.0 * (b.y - a.y) / h - 2.0 * a.vy - b.vy) / h;
    const double c3 = (a.vy + b.vy - 2.0 * (b.y - a.y) / h) / (h * h);
    // y'(u) = vy_a + 2 c2 u + 3 c3 u^2 = 0
    const double disc = c2 * c2 - 3.0 * c3 * a.vy;
    if (disc < 0.0) continue;
    for (const double sgn : {-1.0, 1.0}) {
      const double den = 3.0 * c3;
      const double u = (den != 0.0) ? (-c2 + sgn * std::sqrt(disc)) / den
                                    : -a.vy / (2.0 * c2);
      if (!(u > 0.0 && u < h)) continue;
      const double yu = a.y + u * (a.vy + u * (c2 + u * c3));
      lo = std::min(lo, yu);
      hi = std::max(hi, yu);
    }
  }
  return hi - lo;
}

/// Fraction of the gait cycle during which the cycle's foot is on the ground.
/// Contact transitions between samples are pinned to the recorded phase-switch
/// event times, so the value carries event precision rather than sample
/// granularity.
inline double duty_factor(const Trajectory& t, const GaitCycle& c) {
  if (c.win.end > t.samples.size() || c.win.end - c.win.begin < 2)
    throw std::domain_error("duty_factor: no complete gait cycle");
  double t_begin = c.t_begin, t_end = c.t_end;
  if (!(t_end > t_begin)) {  // hand-built cycles fall back to sample times
    t_begin = t.samples[c.win.begin].t;
    t_end = t.samples[c.win.end - 1].t;
  }

  auto switch_time = [&](double lo, double hi) -> double {
    for (const PhaseEvent& ev : t.events) {
      if (ev.kind == EventKind::SectionCrossing || ev.kind == EventKind::Failure)
        continue;
      if (ev.time > lo && ev.time <= hi) return ev.time;
    }
    return 0.5 * (lo + hi);
  };

  double on = 0.0;
  double cursor = t_begin;
  bool cur = t.samples[c.win.begin].contact[c.foot];
  for (std::size_t i = c.win.begin + 1; i < c.win.end; ++i) {
    const bool flag = t.samples[i].contact[c.foot];
    if (flag == cur) continue;
    const double tf = switch_time(t.samples[i - 1].t, t.samples[i].t);
    if (cur) on += tf - cursor;
    cursor = tf;
    cur = flag;
  }
  if (cur) on += t_end - cursor;
  return on / (t_end - t_begin);
}

/// Per-leg weight-normalized vertical ground reaction force series.
struct GrfSeries {
  std::vector<double> t;
  std::array<std::vector<double>, 2> leg;
};

inline GrfSeries ground_reaction_forces(const Trajectory& traj) {
  GrfSeries out;
  out.t.reserve(traj.samples.size());
  out.leg[0].reserve(traj.samples.size());
  out.leg[1].reserve(traj.samples.size());
  for (const auto& s : traj.samples) {
    out.t.push_back(s.t);
    out.leg[0].push_back(s.grf[0]);
    out.leg[1].push_back(s.grf[1]);
  }
  return out;
}

struct ObservableSummary {
  double froude = 0.0;
  double hip_excursion = 0.0;  ///< [m], peak to peak
  double duty_factor = 0.0;
  double mean_speed = 0.0;  ///< [m/s]
};

inline ObservableSummary summarize_cycle(const Trajectory& t, const GaitCycle& c,
                                         const ModelParams& p) {
  ObservableSummary s;
  s.hip_excursion = hip_excursion(t, c.win);
  s.duty_factor = duty_factor(t, c);
  const TrajectorySample& a = t.samples[c.win.begin];
  const TrajectorySample& b = t.samples[c.win.end - 1];
  // at a section crossing the support leg is vertical, so thetadot = vx / y
  const double w = a.vx / a.y;
  s.froude = w * w * p.r0 / p.g;
  s.mean_speed = (b.t > a.t) ? (b.x - a.x) / (b.t - a.t) : 0.0;
  return s;
}

}  // namespace slipgait
