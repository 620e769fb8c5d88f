// Minimal library walk-through: hold a symmetric walking gait, print its
// observables, then switch the angle of attack and watch the gait change.

#include <cstdio>

#include "slipgait/observables.hpp"
#include "slipgait/regions.hpp"
#include "slipgait/section_map.hpp"

using namespace slipgait;

int main() {
  const ModelParams p;
  const double E = 840.0;

  RegionOptions opts;
  opts.angle_res = 0.2 * M_PI / 180.0;
  RegionBundle bundle(E, GridSpec::section_default(E, p, 41, 41), p, opts);

  const auto locus = bundle.symmetric_locus(GaitKind::Walking);
  if (locus.empty()) {
    std::puts("no symmetric walking gait at this energy");
    return 1;
  }
  const SymmetricPoint pt = locus.back();
  std::printf("symmetric walking at r = %.4f m, angle of attack %.2f deg\n",
              pt.state.r, pt.alpha * 180.0 / M_PI);

  Trajectory traj;
  SectionState s = pt.state;
  double t = 0.0, foot_x = 0.0;
  int support = 0;
  for (int i = 0; i < 6; ++i) {
    StepOptions so;
    so.record = true;
    so.sink = &traj;
    so.t0 = t;
    so.foot_x = foot_x;
    so.support_leg = support;
    const StepOutcome o = step(s, GaitKind::Walking, pt.alpha, p, so);
    if (!o.ok) {
      std::printf("step %d failed (%s)\n", i, failure_name(*o.failure));
      return 1;
    }
    s = o.next;
    t += o.duration;
    foot_x = o.end_foot_x;
    support = o.end_support;
  }

  if (const auto cycle = gait_cycle(traj)) {
    const ObservableSummary obs = summarize_cycle(traj, *cycle, p);
    std::printf("duty factor %.3f, hip excursion %.1f mm, Froude %.3f, "
                "speed %.2f m/s\n",
                obs.duty_factor, obs.hip_excursion * 1e3, obs.froude,
                obs.mean_speed);
  }

  const auto windows = valid_angle_set(s, GaitKind::Walking, p, nullptr,
                                       0.2 * M_PI / 180.0);
  std::printf("valid walking windows from the final state:\n");
  for (const auto& w : windows) {
    std::printf("  [%.2f, %.2f] deg (width %.2f)\n", w.lo * 180.0 / M_PI,
                w.hi * 180.0 / M_PI, w.width() * 180.0 / M_PI);
  }
  return 0;
}
