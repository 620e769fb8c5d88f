#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

namespace slipgait {

/// Mechanical parameters of the point-mass / massless-spring-leg model.
/// Defaults are human-scale values; every quantity is SI.
struct ModelParams {
  double m = 80.0;     ///< body mass [kg]
  double k = 20000.0;  ///< leg stiffness [N/m]
  double r0 = 1.0;     ///< natural leg length [m]
  double g = 9.81;     ///< gravitational acceleration [m/s^2]

  void validate() const {
    if (!(m > 0.0) || !(k > 0.0) || !(r0 > 0.0) || !(g > 0.0)) {
      throw std::invalid_argument(
          "ModelParams: m, k, r0 and g must all be strictly positive");
    }
  }
};

enum class Phase { Flight, SingleStance, DoubleStance };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Flight: return "flight";
    case Phase::SingleStance: return "single_stance";
    case Phase::DoubleStance: return "double_stance";
  }
  return "?";
}

/// Ballistic phase, world-frame Cartesian chart.
struct FlightState {
  double x = 0.0;   ///< horizontal CoM position [m]
  double y = 0.0;   ///< vertical CoM position [m]
  double vx = 0.0;  ///< horizontal velocity [m/s]
  double vy = 0.0;  ///< vertical velocity [m/s]
};

/// Single stance, polar chart about the support foot.
///
/// theta is the angle spanned by the leg and the horizontal, measured at the
/// foot and growing in the direction of travel: the mass sits at
/// x = foot_x - r*cos(theta), y = r*sin(theta), so theta < pi/2 means the
/// mass is behind the foot, theta = pi/2 is the vertical posture and
/// theta > pi/2 means the mass has vaulted past the foot.  Forward motion has
/// thetadot > 0.
struct StanceState {
  double r = 0.0;         ///< spring length [m]
  double theta = 0.0;     ///< leg angle [rad]
  double rdot = 0.0;      ///< radial velocity [m/s]
  double thetadot = 0.0;  ///< angular velocity [rad/s]
  double foot_x = 0.0;    ///< world-frame support-foot position [m]
};

/// Double stance, same polar chart with the origin at the NEW (front)
/// touchdown point; x_sep is the horizontal distance to the back foot.
struct DoubleStanceState {
  double r = 0.0;
  double theta = 0.0;
  double rdot = 0.0;
  double thetadot = 0.0;
  double x_sep = 0.0;   ///< distance between the two contact points [m]
  double foot_x = 0.0;  ///< world-frame FRONT-foot position [m]
};

using HybridState = std::variant<FlightState, StanceState, DoubleStanceState>;

inline Phase phase_of(const HybridState& s) {
  switch (s.index()) {
    case 0: return Phase::Flight;
    case 1: return Phase::SingleStance;
    default: return Phase::DoubleStance;
  }
}

enum class FailureKind {
  Fall,                 ///< CoM reached the ground (y <= 0)
  ForbiddenTransition,  ///< phase sequence broke down (incl. timeouts)
  Backwards,            ///< forward velocity turned negative
};

inline const char* failure_name(FailureKind f) {
  switch (f) {
    case FailureKind::Fall: return "fall";
    case FailureKind::ForbiddenTransition: return "forbidden_transition";
    case FailureKind::Backwards: return "backwards";
  }
  return "?";
}

enum class EventKind {
  Touchdown,        // flight -> single stance
  Takeoff,          // single stance -> flight
  StanceToDouble,   // single stance -> double stance
  DoubleToStance,   // double stance -> single stance
  SectionCrossing,  // vertical posture in single stance
  Failure,
};

inline const char* event_name(EventKind e) {
  switch (e) {
    case EventKind::Touchdown: return "touchdown";
    case EventKind::Takeoff: return "takeoff";
    case EventKind::StanceToDouble: return "stance_to_double";
    case EventKind::DoubleToStance: return "double_to_stance";
    case EventKind::SectionCrossing: return "section_crossing";
    case EventKind::Failure: return "failure";
  }
  return "?";
}

struct PhaseEvent {
  EventKind kind = EventKind::Failure;
  double time = 0.0;  ///< absolute trajectory time [s]
  HybridState state;  ///< state at the event, in the chart of the OLD phase
  std::optional<FailureKind> failure;
};

// --- world-frame kinematics ------------------------------------------------

struct ComState {
  double x, y, vx, vy;
};

inline ComState com_state(const FlightState& s) { return {s.x, s.y, s.vx, s.vy}; }

inline ComState com_state(const StanceState& s) {
  const double c = std::cos(s.theta), sn = std::sin(s.theta);
  return {s.foot_x - s.r * c, s.r * sn,
          -s.rdot * c + s.r * sn * s.thetadot,
          s.rdot * sn + s.r * c * s.thetadot};
}

inline ComState com_state(const DoubleStanceState& s) {
  const double c = std::cos(s.theta), sn = std::sin(s.theta);
  return {s.foot_x - s.r * c, s.r * sn,
          -s.rdot * c + s.r * sn * s.thetadot,
          s.rdot * sn + s.r * c * s.thetadot};
}

inline ComState com_state(const HybridState& s) {
  return std::visit([](const auto& st) { return com_state(st); }, s);
}

/// Length of the back leg in double stance (law of cosines between the mass,
/// the front foot and the back foot).
inline double back_leg_length(const DoubleStanceState& s) {
  if (!(s.r > 0.0)) throw std::domain_error("back_leg_length: r must be positive");
  return std::sqrt(s.r * s.r + s.x_sep * s.x_sep -
                   2.0 * s.r * s.x_sep * std::cos(s.theta));
}

// --- total mechanical energy -----------------------------------------------

inline double energy(const FlightState& s, const ModelParams& p) {
  return 0.5 * p.m * (s.vx * s.vx + s.vy * s.vy) + p.m * p.g * s.y;
}

inline double energy(const StanceState& s, const ModelParams& p) {
  const double v2 = s.rdot * s.rdot + s.r * s.r * s.thetadot * s.thetadot;
  const double dr = p.r0 - s.r;
  return 0.5 * p.k * dr * dr + 0.5 * p.m * v2 + p.m * p.g * s.r * std::sin(s.theta);
}

inline double energy(const DoubleStanceState& s, const ModelParams& p) {
  const double v2 = s.rdot * s.rdot + s.r * s.r * s.thetadot * s.thetadot;
  const double dr = p.r0 - s.r;
  const double drb = p.r0 - back_leg_length(s);
  return 0.5 * p.k * (dr * dr + drb * drb) + 0.5 * p.m * v2 +
         p.m * p.g * s.r * std::sin(s.theta);
}

inline double energy(const HybridState& s, const ModelParams& p) {
  return std::visit([&](const auto& st) { return energy(st, p); }, s);
}

}  // namespace slipgait
