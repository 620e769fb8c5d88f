#pragma once

#include <cmath>
#include <random>

#include "slipgait/model.hpp"
#include "slipgait/regions.hpp"
#include "slipgait/section_map.hpp"
#include "slipgait/trajectory.hpp"

namespace slipgait::test {

inline ModelParams default_params() { return ModelParams{}; }

/// Uniform random section state inside the reachable domain at energy E.
inline SectionState random_section_state(std::mt19937_64& rng, double E,
                                         const ModelParams& p) {
  const SectionDomain d = SectionDomain::at_energy(E, p);
  std::uniform_real_distribution<double> ur(d.r_lo, d.r_hi);
  std::uniform_real_distribution<double> uv(-d.vy_halfaxis, d.vy_halfaxis);
  for (;;) {
    const SectionState s{ur(rng), uv(rng), E};
    if (section_valid(s, p)) return s;
  }
}

/// Total mechanical energy reconstructed from a trajectory sample alone:
/// each contacting leg's length follows from the sample height and its
/// normalized GRF (grf = k*(r0-L)*(y/L)/(m*g)  =>  L = k*r0*y/(G + k*y)).
inline double sample_energy(const TrajectorySample& s, const ModelParams& p) {
  double e = 0.5 * p.m * (s.vx * s.vx + s.vy * s.vy) + p.m * p.g * s.y;
  for (int leg = 0; leg < 2; ++leg) {
    if (!s.contact[leg]) continue;
    const double G = s.grf[leg] * p.m * p.g;
    const double L = p.k * p.r0 * s.y / (G + p.k * s.y);
    e += 0.5 * p.k * (p.r0 - L) * (p.r0 - L);
  }
  return e;
}

inline double max_relative_energy_drift(const Trajectory& t, const ModelParams& p) {
  if (t.samples.empty()) return 0.0;
  const double e0 = sample_energy(t.samples.front(), p);
  double worst = 0.0;
  for (const auto& s : t.samples)
    worst = std::max(worst, std::abs(sample_energy(s, p) - e0) / e0);
  return worst;
}

inline double deg(double rad) { return rad * 180.0 / M_PI; }
inline double rad(double degv) { return degv * M_PI / 180.0; }

// --- symmetric fixed-point oracle -------------------------------------------
// Root-finds vy' = 0 over the angle of attack at vy = 0 and keeps the root
// only if both return-map coordinates close.  Lives in test code so suites
// can cross-check library results against an independent search.

struct FixedPoint {
  SectionState s;
  double alpha = 0.0;
};

inline std::optional<FixedPoint> find_fixed_point(GaitKind g, double E, double r,
                                                  const ModelParams& p) {
  const SectionState s{r, 0.0, E};
  if (!section_valid(s, p)) return std::nullopt;
  auto vy_after = [&](double a) -> std::optional<double> {
    const StepOutcome o = step(s, g, a, p);
    if (!o.ok || o.realized != g) return std::nullopt;
    return o.next.vy;
  };
  const double res = rad(0.2);
  std::optional<double> prev;
  double prev_a = 0.0;
  for (int j = 1; j < 450; ++j) {
    const double a = j * res;
    const auto cur = vy_after(a);
    if (cur && prev && *prev * *cur < 0.0) {
      double lo = prev_a, hi = a, flo = *prev;
      for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        const auto fm = vy_after(mid);
        if (!fm) break;
        if (*fm * flo <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
          flo = *fm;
        }
      }
      const double a_root = 0.5 * (lo + hi);
      const StepOutcome o = step(s, g, a_root, p);
      if (o.ok && std::abs(o.next.vy) < 1e-8 && std::abs(o.next.r - r) < 1e-8)
        return FixedPoint{s, a_root};
    }
    prev = cur;
    prev_a = a;
  }
  return std::nullopt;
}

inline std::optional<FixedPoint> scan_fixed_point(GaitKind g, double E,
                                                  const ModelParams& p) {
  const SectionDomain d = SectionDomain::at_energy(E, p);
  for (int i = 1; i < 40; ++i) {
    const double r = d.r_lo + (d.r_hi - d.r_lo) * i / 40.0;
    if (auto fp = find_fixed_point(g, E, r, p)) return fp;
  }
  return std::nullopt;
}

/// Like scan_fixed_point but from the top of the r range downward; for
/// walking this lands on the softly loaded double-humped family.
inline std::optional<FixedPoint> scan_fixed_point_top(GaitKind g, double E,
                                                      const ModelParams& p) {
  const SectionDomain d = SectionDomain::at_energy(E, p);
  for (int i = 39; i >= 1; --i) {
    const double r = d.r_lo + (d.r_hi - d.r_lo) * i / 40.0;
    if (auto fp = find_fixed_point(g, E, r, p)) return fp;
  }
  return std::nullopt;
}

/// Runs n_steps of a symmetric gait, recording the dense trajectory.
inline std::optional<Trajectory> run_symmetric(const FixedPoint& fp, GaitKind g,
                                               int n_steps,
                                               const ModelParams& p) {
  Trajectory traj;
  SectionState s = fp.s;
  double t = 0.0, foot_x = 0.0;
  int support = 0;
  for (int i = 0; i < n_steps; ++i) {
    StepOptions so;
    so.record = true;
    so.sink = &traj;
    so.t0 = t;
    so.foot_x = foot_x;
    so.support_leg = support;
    const StepOutcome o = step(s, g, fp.alpha, p, so);
    if (!o.ok) return std::nullopt;
    s = o.next;
    t += o.duration;
    foot_x = o.end_foot_x;
    support = o.end_support;
  }
  return traj;
}

}  // namespace slipgait::test
