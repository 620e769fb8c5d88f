#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "slipgait/model.hpp"

namespace slipgait {

/// Per-leg vertical ground reaction force, normalized by body weight.
/// Legs are identified by a persistent index (0/1) that alternates at every
/// touchdown; `support` names the leg owning the current stance chart (the
/// front leg in double stance).
inline std::array<double, 2> normalized_grf(const HybridState& s,
                                            const ModelParams& p, int support) {
  std::array<double, 2> grf{0.0, 0.0};
  const double w = p.m * p.g;
  if (const auto* st = std::get_if<StanceState>(&s)) {
    grf[support] = p.k * (p.r0 - st->r) * std::sin(st->theta) / w;
  } else if (const auto* d = std::get_if<DoubleStanceState>(&s)) {
    const double rb = back_leg_length(*d);
    grf[support] = p.k * (p.r0 - d->r) * std::sin(d->theta) / w;
    // back-leg angle from sin(theta_b) = y / r_b
    grf[1 - support] = p.k * (p.r0 - rb) * (d->r * std::sin(d->theta) / rb) / w;
  }
  return grf;
}

inline std::array<bool, 2> leg_contacts(Phase phase, int support) {
  switch (phase) {
    case Phase::Flight: return {false, false};
    case Phase::SingleStance: {
      std::array<bool, 2> c{false, false};
      c[support] = true;
      return c;
    }
    case Phase::DoubleStance: return {true, true};
  }
  return {false, false};
}

struct TrajectorySample {
  double t = 0.0;
  double x = 0.0, y = 0.0, vx = 0.0, vy = 0.0;
  Phase phase = Phase::SingleStance;
  std::array<double, 2> grf{0.0, 0.0};    ///< vertical GRF / (m*g)
  std::array<uint8_t, 2> contact{0, 0};
};

struct StepMark {
  std::size_t sample_index = 0;
  double t = 0.0;
  int support_leg = 0;  ///< leg that is vertical at this section crossing
};

/// Densely and uniformly sampled hybrid trajectory with section-crossing
/// markers and the phase-switch events that produced it.
struct Trajectory {
  double stride = 1e-3;  ///< sampling interval [s]
  std::vector<TrajectorySample> samples;
  std::vector<StepMark> section_marks;
  std::vector<PhaseEvent> events;

  bool empty() const { return samples.empty(); }
  double duration() const {
    return samples.empty() ? 0.0 : samples.back().t - samples.front().t;
  }
};

}  // namespace slipgait
