#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "slipgait/observables.hpp"
#include "slipgait/regions.hpp"
#include "slipgait/section_map.hpp"

namespace slipgait {

enum class StrategyKind { ConstantFroude, ConstantHipExcursion, FitHipExcursion };

struct Strategy {
  StrategyKind kind = StrategyKind::ConstantFroude;
  double target_rel_change = 0.0;  ///< FitHipExcursion: desired (exc_to-exc_from)/exc_from

  static Strategy constant_froude() { return {StrategyKind::ConstantFroude, 0.0}; }
  static Strategy constant_hip() { return {StrategyKind::ConstantHipExcursion, 0.0}; }
  static Strategy fit_hip(double rel) { return {StrategyKind::FitHipExcursion, rel}; }
};

inline const char* strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::ConstantFroude: return "constant_froude";
    case StrategyKind::ConstantHipExcursion: return "constant_hip_excursion";
    case StrategyKind::FitHipExcursion: return "fit_hip_excursion";
  }
  return "?";
}

enum class PlanRole { Start, Robust, Transition, Viable, Target };

inline const char* role_name(PlanRole r) {
  switch (r) {
    case PlanRole::Start: return "start";
    case PlanRole::Robust: return "robust";
    case PlanRole::Transition: return "transition";
    case PlanRole::Viable: return "viable";
    case PlanRole::Target: return "target";
  }
  return "?";
}

/// Which precomputed region a landing state is claimed to belong to.
enum class RegionRef {
  None,
  RobustFrom,
  RobustTo,
  TransferFromTo,   ///< robust_to_robust(from -> to)
  StageViable,      ///< V^W \ rho^W staging cells (reach robust running)
  RobustToViable,   ///< rho^W cells that can reach the staging set
};

struct PlanStep {
  GaitKind gait = GaitKind::Walking;  ///< gait of the step taken
  double alpha = 0.0;                 ///< angle of attack [rad]
  PlanRole role = PlanRole::Robust;   ///< role of the LANDING state
  RegionRef region = RegionRef::None;
  SectionState predicted{};
};

struct StepPlan {
  double energy = 0.0;
  GaitKind from = GaitKind::Walking, to = GaitKind::Running;
  Strategy strategy{};
  double delta_alpha = 0.0;
  SectionState start{};
  double start_alpha = 0.0;  ///< holds the symmetric start gait (lead-in)
  double end_alpha = 0.0;    ///< holds the symmetric end gait (lead-out)
  int context_steps = 3;     ///< symmetric steps executed on each side
  std::vector<PlanStep> steps;
  double objective = 0.0;  ///< achieved strategy score
  std::string tie_break = "fewest-steps,widest-min-window";
};

enum class PlanStage {
  Regions,
  StartLocus,
  EndLocus,
  Approach,
  TransitionStep,
  Settle,
  Execute,
};

inline const char* stage_name(PlanStage s) {
  switch (s) {
    case PlanStage::Regions: return "regions";
    case PlanStage::StartLocus: return "start_locus";
    case PlanStage::EndLocus: return "end_locus";
    case PlanStage::Approach: return "approach";
    case PlanStage::TransitionStep: return "transition_step";
    case PlanStage::Settle: return "settle";
    case PlanStage::Execute: return "execute";
  }
  return "?";
}

struct PlanFailure {
  PlanStage stage = PlanStage::Regions;
  std::string message;
};

using PlanResult = std::variant<StepPlan, PlanFailure>;

struct PlanningOptions {
  int max_steps = 8;
  int settle_cap = 2;    ///< symmetric settling steps after the gait change
  int approach_cap = 2;  ///< steps from the symmetric start into the region
  int context_steps = 3;
  int max_pairs = 40;  ///< candidate (start, end) locus pairs to examine
};

// ---------------------------------------------------------------------------

namespace detail {

/// Hip excursion and Froude number of a symmetric gait held at `pt`.
struct SymObs {
  double froude = 0.0;
  double excursion = 0.0;
};

inline std::optional<SymObs> symmetric_observables(const SymmetricPoint& pt,
                                                   GaitKind g,
                                                   const ModelParams& p) {
  Trajectory traj;
  StepOptions so;
  so.record = true;
  so.sink = &traj;
  const StepOutcome o = step(pt.state, g, pt.alpha, p, so);
  if (!o.ok || traj.samples.size() < 2) return std::nullopt;
  SymObs obs;
  obs.froude = froude_number(pt.state, p);
  obs.excursion =
      hip_excursion(traj, CycleWindow{0, traj.samples.size()});
  return obs;
}

inline double strategy_score(const Strategy& st, const SymObs& a,
                             const SymObs& b) {
  switch (st.kind) {
    case StrategyKind::ConstantFroude: return std::abs(b.froude - a.froude);
    case StrategyKind::ConstantHipExcursion:
      return std::abs(b.excursion - a.excursion);
    case StrategyKind::FitHipExcursion:
      return std::abs((b.excursion - a.excursion) / a.excursion -
                      st.target_rel_change);
  }
  return 0.0;
}

/// Maximal runs of consecutive sampled angles whose steps realize `gait` and
/// land where `land_ok` holds; per-sample landings are kept for rooting.
struct AngleRun {
  double lo = 0.0, hi = 0.0;
  std::vector<std::pair<double, SectionState>> samples;  ///< (alpha, landing)
  double width() const { return hi - lo; }
};

template <class LandOk>
inline std::vector<AngleRun> angle_runs(const SectionState& s, GaitKind gait,
                                        const ModelParams& p, double res,
                                        const LandOk& land_ok) {
  std::vector<AngleRun> runs;
  const int n = static_cast<int>(kHalfPi / res);
  AngleRun cur;
  bool open = false;
  for (int j = 1; j <= n; ++j) {
    const double a = j * res;
    bool good = false;
    StepOutcome o;
    if (a < kHalfPi) {
      o = step(s, gait, a, p);
      good = o.ok && o.realized == gait && land_ok(o.next);
    }
    if (good) {
      if (!open) {
        cur = AngleRun{a, a, {}};
        open = true;
      }
      cur.hi = a;
      cur.samples.emplace_back(a, o.next);
    } else if (open) {
      runs.push_back(std::move(cur));
      open = false;
    }
  }
  if (open) runs.push_back(std::move(cur));
  return runs;
}

/// Angles inside a run that keep a half-window margin on both sides.
inline std::vector<double> centered_candidates(const AngleRun& run, double da,
                                               int count) {
  std::vector<double> out;
  const double lo = run.lo + 0.5 * da, hi = run.hi - 0.5 * da;
  if (hi < lo) return out;
  if (count <= 1 || hi == lo) {
    out.push_back(0.5 * (lo + hi));
    return out;
  }
  out.push_back(0.5 * (lo + hi));  // midpoint first
  for (int i = 0; i < count - 1; ++i) {
    const double t = static_cast<double>(i + 1) / count;
    out.push_back(lo + t * (hi - lo));
  }
  return out;
}

/// Locates the symmetric fixed point through a given r (vy = 0), if any.
inline std::optional<SymmetricPoint> find_symmetric_at(double r, double E,
                                                       GaitKind g,
                                                       const ModelParams& p,
                                                       double res) {
  const SectionState s{r, 0.0, E};
  if (!section_valid(s, p)) return std::nullopt;
  auto eval = [&](double a) -> std::optional<std::pair<double, double>> {
    const StepOutcome o = step(s, g, a, p);
    if (!o.ok || o.realized != g) return std::nullopt;
    return std::make_pair(o.next.vy, o.next.r - r);
  };
  const int n = static_cast<int>(kHalfPi / res);
  std::optional<std::pair<double, double>> prev;
  double prev_a = 0.0;
  for (int j = 1; j < n; ++j) {
    const double a = j * res;
    const auto cur = eval(a);
    if (cur && prev && prev->first * cur->first < 0.0) {
      double lo = prev_a, hi = a, flo = prev->first;
      for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        const auto em = eval(mid);
        if (!em) break;
        if (em->first * flo <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
          flo = em->first;
        }
      }
      const double a_root = 0.5 * (lo + hi);
      const auto er = eval(a_root);
      if (er && std::abs(er->first) <= 1e-6 && std::abs(er->second) <= 1e-6)
        return SymmetricPoint{s, a_root};
    }
    prev = cur;
    prev_a = a;
  }
  return std::nullopt;
}

/// All vy' = 0 roots across the run's samples, with the width of the run each
/// root sits in.
struct VyRoot {
  double alpha = 0.0;
  SectionState landing{};
  double run_width = 0.0;
};

inline std::vector<VyRoot> roots_vy_in_runs(const SectionState& s, GaitKind g,
                                            const ModelParams& p,
                                            const std::vector<AngleRun>& runs) {
  std::vector<VyRoot> out;
  for (const AngleRun& run : runs) {
    for (std::size_t i = 1; i < run.samples.size(); ++i) {
      const auto& [a0, s0] = run.samples[i - 1];
      const auto& [a1, s1] = run.samples[i];
      if (s0.vy * s1.vy >= 0.0) continue;
      double lo = a0, hi = a1, flo = s0.vy;
      for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        const StepOutcome o = step(s, g, mid, p);
        if (!o.ok) break;
        if (o.next.vy * flo <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
          flo = o.next.vy;
        }
      }
      const double a = 0.5 * (lo + hi);
      const StepOutcome o = step(s, g, a, p);
      if (o.ok && std::abs(o.next.vy) <= 1e-7)
        out.push_back({a, o.next, run.width()});
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Plans a gait transition between symmetric robust gaits at energy E.
///
/// Two mechanisms are attempted: stepping from the source gait's robust region
/// directly into the target gait's robust region, and (walking to running
/// only) staging through the non-robust viable region of walking.  Candidate
/// start and end states are symmetric robust gaits scored by the strategy;
/// the best feasible plan wins, with ties broken by fewer steps and then by
/// the widest minimum angle window.
inline PlanResult plan_transition(GaitKind from, GaitKind to, double E,
                                  double delta_alpha, const Strategy& strategy,
                                  const ModelParams& p, RegionBundle& bundle,
                                  const PlanningOptions& opts = {}) {
  const double res = bundle.options().angle_res;
  const RegionGrid& rho_from = bundle.robust(from, delta_alpha);
  const RegionGrid& rho_to = bundle.robust(to, delta_alpha);
  if (rho_from.count_members() == 0 || rho_to.count_members() == 0) {
    return PlanFailure{PlanStage::Regions,
                       "robust region empty for one of the gaits"};
  }
  const TransitionRegions tr = bundle.transition_regions(delta_alpha);
  const RegionGrid& r2r =
      (from == GaitKind::Walking) ? tr.w_to_r : tr.r_to_w;
  const bool mech1_possible = from == GaitKind::Walking &&
                              to == GaitKind::Running &&
                              tr.robust_to_viable.count_members() > 0;
  if (r2r.count_members() == 0 && !mech1_possible) {
    return PlanFailure{PlanStage::Regions, "transition regions empty"};
  }

  // symmetric robust start / end candidates with their observables
  struct Candidate {
    SymmetricPoint pt;
    detail::SymObs obs;
  };
  auto collect = [&](GaitKind g, const RegionGrid& rho) {
    std::vector<Candidate> out;
    for (const SymmetricPoint& pt : bundle.symmetric_locus(g)) {
      if (!rho.contains(pt.state)) continue;
      if (auto obs = detail::symmetric_observables(pt, g, p))
        out.push_back({pt, *obs});
    }
    return out;
  };
  const std::vector<Candidate> starts = collect(from, rho_from);
  if (starts.empty())
    return PlanFailure{PlanStage::StartLocus, "no symmetric robust start state"};
  const std::vector<Candidate> ends = collect(to, rho_to);
  if (ends.empty())
    return PlanFailure{PlanStage::EndLocus, "no symmetric robust end state"};

  struct Pair {
    std::size_t is, ie;
    double score;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < starts.size(); ++i)
    for (std::size_t j = 0; j < ends.size(); ++j)
      pairs.push_back(
          {i, j, detail::strategy_score(strategy, starts[i].obs, ends[j].obs)});
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return a.score < b.score;
  });
  if (pairs.size() > static_cast<std::size_t>(opts.max_pairs))
    pairs.resize(opts.max_pairs);

  auto in = [&](const RegionGrid& g) {
    return [&g](const SectionState& s) { return g.contains(s); };
  };
  const auto dist = [&](const SectionState& a, const SectionState& b) {
    const SectionDomain d = SectionDomain::at_energy(E, p);
    const double ur = (a.r - b.r) / d.r_halfaxis;
    const double uv = (a.vy - b.vy) / d.vy_halfaxis;
    return std::sqrt(ur * ur + uv * uv);
  };

  std::optional<StepPlan> best;
  double best_obj = 0.0;
  double best_min_window = 0.0;
  PlanStage deepest = PlanStage::Approach;

  for (const Pair& pr : pairs) {
    const Candidate& sc = starts[pr.is];
    const Candidate& ec = ends[pr.ie];

    for (int mech = 0; mech < 2; ++mech) {
      if (mech == 1 && !mech1_possible) continue;
      const RegionGrid& stage_region = (mech == 0) ? r2r : tr.robust_to_viable;
      if (stage_region.count_members() == 0) continue;

      std::vector<PlanStep> steps;
      std::vector<double> window_widths;
      SectionState x = sc.pt.state;

      auto take = [&](GaitKind g, double a, PlanRole role, RegionRef ref,
                      const SectionState& landing, double window) {
        steps.push_back({g, a, role, ref, landing});
        window_widths.push_back(window);
        x = landing;
      };

      // settling: up to settle_cap target-gait steps ending on the symmetric
      // locus.  Every settle depth is explored and the end nearest the
      // strategy-chosen end state wins.
      struct Settled {
        std::vector<PlanStep> st;
        std::vector<double> ww;
        SymmetricPoint end;
      };
      auto settle = [&](SectionState xs, std::vector<PlanStep> st,
                        std::vector<double> ww) -> std::optional<Settled> {
        std::optional<Settled> best_settle;
        double best_d = 1e30;
        for (int extra = 0; extra <= opts.settle_cap - 1; ++extra) {
          if (extra > 0 || static_cast<int>(st.size()) + 1 < 3) {
            auto rruns = detail::angle_runs(xs, to, p, res, in(rho_to));
            const detail::AngleRun* ipick = nullptr;
            double ia = 0.0, ibest = 1e30;
            SectionState il{};
            for (const auto& r : rruns) {
              if (r.width() < delta_alpha) continue;
              for (double a : detail::centered_candidates(r, delta_alpha, 5)) {
                const StepOutcome o = step(xs, to, a, p);
                if (!o.ok || o.realized != to || !rho_to.contains(o.next)) continue;
                const double d = dist(o.next, ec.pt.state);
                if (d < ibest) {
                  ibest = d;
                  ipick = &r;
                  ia = a;
                  il = o.next;
                }
              }
            }
            if (!ipick) break;
            st.push_back({to, ia, PlanRole::Robust, RegionRef::RobustTo, il});
            ww.push_back(ipick->width());
            xs = il;
          }
          if (static_cast<int>(st.size()) + 1 > opts.max_steps) break;
          auto runs = detail::angle_runs(xs, to, p, res, in(rho_to));
          std::vector<detail::VyRoot> roots =
              detail::roots_vy_in_runs(xs, to, p, runs);
          std::sort(roots.begin(), roots.end(),
                    [&](const detail::VyRoot& a, const detail::VyRoot& b) {
                      return std::abs(a.landing.r - ec.pt.state.r) <
                             std::abs(b.landing.r - ec.pt.state.r);
                    });
          for (const detail::VyRoot& root : roots) {
            if (root.run_width < delta_alpha) continue;
            const double d = std::abs(root.landing.r - ec.pt.state.r);
            if (d >= best_d) break;  // roots are distance-sorted
            const auto sym =
                detail::find_symmetric_at(root.landing.r, E, to, p, res);
            if (!sym || !rho_to.contains(sym->state)) continue;
            Settled s{st, ww, *sym};
            s.st.push_back({to, root.alpha, PlanRole::Target, RegionRef::RobustTo,
                            root.landing});
            s.ww.push_back(root.run_width);
            best_settle = std::move(s);
            best_d = d;
            break;
          }
        }
        return best_settle;
      };

      // --- approach into the staging region (0..approach_cap steps)
      bool ok = true;
      if (!stage_region.contains(x)) {
        bool reached = false;
        auto runs = detail::angle_runs(x, from, p, res, in(stage_region));
        for (int depth = 0; depth < opts.approach_cap && !reached; ++depth) {
          // pick the widest qualifying run, angle at its centre
          const detail::AngleRun* pick = nullptr;
          for (const auto& r : runs)
            if (r.width() >= delta_alpha && (!pick || r.width() > pick->width()))
              pick = &r;
          if (pick) {
            const double a = 0.5 * (pick->lo + pick->hi);
            const StepOutcome o = step(x, from, a, p);
            if (o.ok && o.realized == from && stage_region.contains(o.next)) {
              take(from, a, PlanRole::Transition,
                   mech == 0 ? RegionRef::TransferFromTo : RegionRef::RobustToViable,
                   o.next, pick->width());
              reached = true;
              break;
            }
          }
          // intermediate robust step chosen to get closer to the staging set
          auto rruns = detail::angle_runs(x, from, p, res, in(rho_from));
          const detail::AngleRun* ipick = nullptr;
          double ibest = 1e30;
          double ialpha = 0.0;
          SectionState iland{};
          for (const auto& r : rruns) {
            if (r.width() < delta_alpha) continue;
            for (double a : detail::centered_candidates(r, delta_alpha, 5)) {
              const StepOutcome o = step(x, from, a, p);
              if (!o.ok || o.realized != from || !rho_from.contains(o.next))
                continue;
              // crude potential: distance to the end state
              const double d = dist(o.next, ec.pt.state);
              if (d < ibest) {
                ibest = d;
                ipick = &r;
                ialpha = a;
                iland = o.next;
              }
            }
          }
          if (!ipick) break;
          take(from, ialpha, PlanRole::Robust, RegionRef::RobustFrom, iland,
               ipick->width());
          runs = detail::angle_runs(x, from, p, res, in(stage_region));
        }
        if (!reached && !stage_region.contains(x)) ok = false;
      }
      if (!ok) {
        deepest = std::max(deepest, PlanStage::Approach);
        continue;
      }

      // --- the gait-changing step(s) followed by settling; several
      // candidate landings are attempted and the best settled outcome kept
      std::optional<SymmetricPoint> end_pt;
      double obj = 0.0;
      {
        struct Attempt {
          std::vector<PlanStep> st;
          std::vector<double> ww;
          SymmetricPoint end;
          double obj;
        };
        std::optional<Attempt> best_attempt;
        bool transition_reachable = false;

        auto try_attempt = [&](std::vector<PlanStep> st, std::vector<double> ww,
                               const SectionState& landing) {
          auto settled = settle(landing, std::move(st), std::move(ww));
          if (!settled) return;
          if (static_cast<int>(settled->st.size()) < 3 ||
              static_cast<int>(settled->st.size()) > opts.max_steps)
            return;
          const auto obs = detail::symmetric_observables(settled->end, to, p);
          if (!obs) return;
          const double o = detail::strategy_score(strategy, sc.obs, *obs);
          if (!best_attempt || o < best_attempt->obj)
            best_attempt = Attempt{std::move(settled->st), std::move(settled->ww),
                                   settled->end, o};
        };

        if (mech == 0) {
          struct TCand {
            double a;
            SectionState land;
            double width, d;
          };
          std::vector<TCand> tcands;
          for (const auto& r : detail::angle_runs(x, from, p, res, in(rho_to))) {
            if (r.width() < delta_alpha) continue;
            for (double a : detail::centered_candidates(r, delta_alpha, 5)) {
              const StepOutcome o = step(x, from, a, p);
              if (!o.ok || o.realized != from || !rho_to.contains(o.next))
                continue;
              tcands.push_back({a, o.next, r.width(), dist(o.next, ec.pt.state)});
            }
          }
          std::sort(tcands.begin(), tcands.end(),
                    [](const TCand& a, const TCand& b) { return a.d < b.d; });
          if (tcands.size() > 3) tcands.resize(3);
          transition_reachable = !tcands.empty();
          for (const TCand& c : tcands) {
            auto st = steps;
            auto ww = window_widths;
            st.push_back({from, c.a, PlanRole::Robust, RegionRef::RobustTo, c.land});
            ww.push_back(c.width);
            try_attempt(std::move(st), std::move(ww), c.land);
          }
        } else {
          // walking into the non-robust viable staging set, then to robust
          // running
          bool done = false;
          for (const auto& r :
               detail::angle_runs(x, from, p, res, in(tr.viable_stage))) {
            if (r.width() < delta_alpha) continue;
            for (double a : detail::centered_candidates(r, delta_alpha, 3)) {
              const StepOutcome o = step(x, from, a, p);
              if (!o.ok || o.realized != from ||
                  !tr.viable_stage.contains(o.next))
                continue;
              for (const auto& r2 : detail::angle_runs(o.next, GaitKind::Walking,
                                                       p, res, in(rho_to))) {
                if (r2.width() < delta_alpha) continue;
                for (double a2 : detail::centered_candidates(r2, delta_alpha, 3)) {
                  const StepOutcome o2 = step(o.next, GaitKind::Walking, a2, p);
                  if (!o2.ok || o2.realized != GaitKind::Walking ||
                      !rho_to.contains(o2.next))
                    continue;
                  transition_reachable = true;
                  auto st = steps;
                  auto ww = window_widths;
                  st.push_back({from, a, PlanRole::Viable, RegionRef::StageViable,
                                o.next});
                  ww.push_back(r.width());
                  st.push_back({GaitKind::Walking, a2, PlanRole::Robust,
                                RegionRef::RobustTo, o2.next});
                  ww.push_back(r2.width());
                  try_attempt(std::move(st), std::move(ww), o2.next);
                }
              }
              if (best_attempt) {  // keep the staged search bounded
                done = true;
                break;
              }
            }
            if (done) break;
          }
        }

        if (!best_attempt) {
          deepest = std::max(deepest, transition_reachable
                                          ? PlanStage::Settle
                                          : PlanStage::TransitionStep);
          continue;
        }
        steps = std::move(best_attempt->st);
        window_widths = std::move(best_attempt->ww);
        end_pt = best_attempt->end;
        obj = best_attempt->obj;
      }

      const double min_window =
          *std::min_element(window_widths.begin(), window_widths.end());

      const bool better =
          !best || obj < best_obj - 1e-12 ||
          (std::abs(obj - best_obj) <= 1e-12 &&
           (steps.size() < best->steps.size() ||
            (steps.size() == best->steps.size() &&
             min_window > best_min_window)));
      if (better) {
        StepPlan plan;
        plan.energy = E;
        plan.from = from;
        plan.to = to;
        plan.strategy = strategy;
        plan.delta_alpha = delta_alpha;
        plan.start = sc.pt.state;
        plan.start_alpha = sc.pt.alpha;
        plan.end_alpha = end_pt->alpha;
        plan.context_steps = opts.context_steps;
        plan.steps = steps;
        plan.objective = obj;
        best = std::move(plan);
        best_obj = obj;
        best_min_window = min_window;
      }
    }
    // the pair list is sorted by predicted score; once a plan exists, later
    // pairs cannot beat a strictly smaller realized objective by much, but we
    // keep scanning a few more for safety
    if (best && &pr - pairs.data() > 8) break;
  }

  if (best) return *best;
  return PlanFailure{deepest, std::string("no feasible plan (failed at ") +
                                  stage_name(deepest) + ")"};
}

// ---------------------------------------------------------------------------

struct ExecuteOptions {
  bool record = true;
  double stride = 1e-3;
  RegionBundle* verify = nullptr;  ///< recompute role membership when given
  double delta_alpha = 0.0;        ///< needed for verification grids
};

struct ExecutedStep {
  PlanStep planned;
  StepOutcome outcome;
  bool role_verified = true;
};

struct ExecutionResult {
  bool ok = false;
  std::size_t failed_step = 0;  ///< index into `steps` when !ok
  std::optional<FailureKind> failure;
  Trajectory trajectory;
  std::vector<ExecutedStep> steps;  ///< lead-in + plan + lead-out
  std::vector<std::optional<ObservableSummary>> cycles;  ///< per section mark
  double max_energy_drift = 0.0;  ///< relative to the start energy
};

/// Runs a plan: context_steps symmetric steps, the planned steps, then
/// context_steps symmetric steps of the target gait.  Aborts on the first
/// failing step.  When a verification bundle is supplied, every planned
/// landing is checked against the region its role claims.
inline ExecutionResult execute_plan(const StepPlan& plan, const ModelParams& p,
                                    const ExecuteOptions& opts = {}) {
  ExecutionResult res;
  TransitionRegions tr;
  bool have_tr = false;
  const double da = opts.delta_alpha > 0.0 ? opts.delta_alpha : plan.delta_alpha;
  if (opts.verify) {
    tr = opts.verify->transition_regions(da);
    have_tr = true;
  }

  auto region_of = [&](RegionRef ref) -> const RegionGrid* {
    if (!opts.verify) return nullptr;
    switch (ref) {
      case RegionRef::RobustFrom: return &opts.verify->robust(plan.from, da);
      case RegionRef::RobustTo: return &opts.verify->robust(plan.to, da);
      case RegionRef::TransferFromTo:
        return have_tr
                   ? (plan.from == GaitKind::Walking ? &tr.w_to_r : &tr.r_to_w)
                   : nullptr;
      case RegionRef::StageViable: return have_tr ? &tr.viable_stage : nullptr;
      case RegionRef::RobustToViable:
        return have_tr ? &tr.robust_to_viable : nullptr;
      case RegionRef::None: return nullptr;
    }
    return nullptr;
  };

  // full step sequence: lead-in, plan, lead-out
  std::vector<PlanStep> seq;
  for (int i = 0; i < plan.context_steps; ++i)
    seq.push_back({plan.from, plan.start_alpha, PlanRole::Start,
                   plan.from == plan.to ? RegionRef::RobustTo : RegionRef::RobustFrom,
                   plan.start});
  seq.insert(seq.end(), plan.steps.begin(), plan.steps.end());
  const SectionState end_state =
      plan.steps.empty() ? plan.start : plan.steps.back().predicted;
  for (int i = 0; i < plan.context_steps; ++i)
    seq.push_back({plan.to, plan.end_alpha, PlanRole::Target, RegionRef::RobustTo,
                   end_state});

  SectionState x = plan.start;
  const double E0 = x.E > 0.0 ? x.E : plan.energy;
  double t = 0.0, foot_x = 0.0;
  int support = 0;
  res.ok = true;

  for (std::size_t i = 0; i < seq.size(); ++i) {
    StepOptions so;
    so.record = opts.record;
    so.stride = opts.stride;
    so.t0 = t;
    so.foot_x = foot_x;
    so.support_leg = support;
    so.sink = opts.record ? &res.trajectory : nullptr;
    const StepOutcome o = step(x, seq[i].gait, seq[i].alpha, p, so);

    ExecutedStep rec{seq[i], o, true};
    if (o.ok && opts.verify) {
      if (const RegionGrid* rg = region_of(seq[i].region))
        rec.role_verified = rg->contains(o.next);
    }
    res.steps.push_back(std::move(rec));

    if (!o.ok) {
      res.ok = false;
      res.failed_step = i;
      res.failure = o.failure;
      break;
    }
    res.max_energy_drift =
        std::max(res.max_energy_drift, std::abs(o.next.E - E0) / E0);
    x = o.next;
    t += o.duration;
    foot_x = o.end_foot_x;
    support = o.end_support;
  }

  // per-cycle observables at every section mark with a full cycle ahead
  if (opts.record) {
    const std::size_t marks = res.trajectory.section_marks.size();
    for (std::size_t mi = 0; mi + 2 < marks; ++mi) {
      if (auto c = gait_cycle(res.trajectory, mi))
        res.cycles.push_back(summarize_cycle(res.trajectory, *c, p));
      else
        res.cycles.push_back(std::nullopt);
    }
  }
  return res;
}

// ---------------------------------------------------------------------------

/// Searches the walking->running transition region for a state and a pair of
/// angles (alpha, beta) such that one walking step lands in the
/// running->walking transition region and one running step comes back to the
/// start exactly (a 2-cycle of the composed map), then emits the alternating
/// plan for n_cycles.
inline PlanResult synthesize_hopping(double E, double delta_alpha, int n_cycles,
                                     const ModelParams& p, RegionBundle& bundle,
                                     int max_candidates = 400) {
  const double res = bundle.options().angle_res;
  const TransitionRegions tr = bundle.transition_regions(delta_alpha);
  if (tr.w_to_r.count_members() == 0 || tr.r_to_w.count_members() == 0) {
    return PlanFailure{PlanStage::Regions,
                       "robust-to-robust transition regions empty"};
  }

  // candidate cells, widest stored window first
  struct Cand {
    double r, vy;
    float window;
  };
  std::vector<Cand> cands;
  const GridSpec& g = bundle.grid();
  for (int ir = 0; ir < g.nr; ++ir)
    for (int ivy = 0; ivy < g.nvy; ++ivy) {
      const std::size_t ci = g.index(ir, ivy);
      if (tr.w_to_r.member[ci])
        cands.push_back({g.r_at(ir), g.vy_at(ivy), tr.w_to_r.interval_len[ci]});
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.window != b.window) return a.window > b.window;
    if (a.r != b.r) return a.r < b.r;
    return a.vy < b.vy;
  });
  if (cands.size() > static_cast<std::size_t>(max_candidates))
    cands.resize(max_candidates);

  auto in_r2w = [&](const SectionState& s) { return tr.r_to_w.contains(s); };
  auto in_w2r = [&](const SectionState& s) { return tr.w_to_r.contains(s); };

  for (const Cand& c : cands) {
    const SectionState x{c.r, c.vy, E};
    if (!section_valid(x, p)) continue;

    const auto wruns = detail::angle_runs(x, GaitKind::Walking, p, res, in_r2w);
    for (const auto& wr : wruns) {
      if (wr.width() < delta_alpha) continue;
      for (double a0 : detail::centered_candidates(wr, delta_alpha, 3)) {
        const StepOutcome w0 = step(x, GaitKind::Walking, a0, p);
        if (!w0.ok || w0.realized != GaitKind::Walking) continue;
        const auto rruns =
            detail::angle_runs(w0.next, GaitKind::Running, p, res, in_w2r);
        for (const auto& rr : rruns) {
          if (rr.width() < delta_alpha) continue;
          double a = a0, b = 0.5 * (rr.lo + rr.hi);

          // Newton on the 2-cycle residual F(a, b) = H_ab(x) - x
          auto F = [&](double aa, double bb,
                       SectionState* mid) -> std::optional<std::array<double, 2>> {
            const StepOutcome w = step(x, GaitKind::Walking, aa, p);
            if (!w.ok || w.realized != GaitKind::Walking) return std::nullopt;
            const StepOutcome r2 = step(w.next, GaitKind::Running, bb, p);
            if (!r2.ok) return std::nullopt;
            if (mid) *mid = w.next;
            return std::array<double, 2>{r2.next.r - x.r, r2.next.vy - x.vy};
          };

          bool converged = false;
          SectionState mid{};
          for (int it = 0; it < 30; ++it) {
            const auto f0 = F(a, b, &mid);
            if (!f0) break;
            if (std::hypot((*f0)[0], (*f0)[1]) < 1e-8) {
              converged = true;
              break;
            }
            const double eps = 1e-7;
            const auto fa = F(a + eps, b, nullptr);
            const auto fb = F(a, b + eps, nullptr);
            if (!fa || !fb) break;
            const double j11 = ((*fa)[0] - (*f0)[0]) / eps;
            const double j21 = ((*fa)[1] - (*f0)[1]) / eps;
            const double j12 = ((*fb)[0] - (*f0)[0]) / eps;
            const double j22 = ((*fb)[1] - (*f0)[1]) / eps;
            const double det = j11 * j22 - j12 * j21;
            if (std::abs(det) < 1e-14) break;
            const double da_ = (-(*f0)[0] * j22 + (*f0)[1] * j12) / det;
            const double db_ = (-j11 * (*f0)[1] + j21 * (*f0)[0]) / det;
            a += da_;
            b += db_;
            if (!(a > 0.0 && a < kHalfPi && b > 0.0 && b < kHalfPi)) break;
          }
          if (!converged) continue;

          // both angles must sit inside full-width valid windows and the
          // intermediate state must be in the running transition region
          if (!in_r2w(mid)) continue;
          const auto wcheck = detail::angle_runs(x, GaitKind::Walking, p, res, in_r2w);
          const auto rcheck =
              detail::angle_runs(mid, GaitKind::Running, p, res, in_w2r);
          auto inside = [&](const std::vector<detail::AngleRun>& runs, double ang) {
            for (const auto& r : runs)
              if (r.width() >= delta_alpha && ang >= r.lo && ang <= r.hi)
                return true;
            return false;
          };
          if (!inside(wcheck, a) || !inside(rcheck, b)) continue;

          StepPlan plan;
          plan.energy = E;
          plan.from = GaitKind::Walking;
          plan.to = GaitKind::Running;
          plan.delta_alpha = delta_alpha;
          plan.start = x;
          plan.start_alpha = a;
          plan.end_alpha = b;
          plan.context_steps = 0;
          plan.strategy = Strategy::constant_hip();
          for (int cyc = 0; cyc < n_cycles; ++cyc) {
            plan.steps.push_back({GaitKind::Walking, a, PlanRole::Transition,
                                  RegionRef::None, mid});
            plan.steps.push_back({GaitKind::Running, b, PlanRole::Transition,
                                  RegionRef::None, x});
          }
          plan.tie_break = "two-cycle-newton";
          return plan;
        }
      }
    }
  }
  return PlanFailure{PlanStage::TransitionStep,
                     "no alternating walk/run 2-cycle found"};
}

}  // namespace slipgait
