#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "slipgait/observables.hpp"
#include "slipgait/parallel.hpp"
#include "slipgait/section_map.hpp"

namespace slipgait {

// ---------------------------------------------------------------------------
// Section-domain geometry.  At fixed E the reachable (r, vy) states satisfy
//   0.5*k*(r0-r)^2 + m*g*r + 0.5*m*vy^2 <= E   and   r <= r0,
// an ellipse centered at r* = r0 - m*g/k clipped at the natural leg length.
// ---------------------------------------------------------------------------

struct SectionDomain {
  double r_center = 0.0;   ///< ellipse center r*
  double r_halfaxis = 0.0; ///< sqrt(2*phi*/k)
  double vy_halfaxis = 0.0;
  double r_lo = 0.0, r_hi = 0.0;

  static SectionDomain at_energy(double E, const ModelParams& p) {
    const double rc = p.r0 - p.m * p.g / p.k;
    const double phi = E - p.m * p.g * p.r0 +
                       p.m * p.m * p.g * p.g / (2.0 * p.k);
    if (!(phi > 0.0))
      throw std::domain_error("SectionDomain: energy below the section minimum");
    SectionDomain d;
    d.r_center = rc;
    d.r_halfaxis = std::sqrt(2.0 * phi / p.k);
    d.vy_halfaxis = std::sqrt(2.0 * phi / p.m);
    d.r_lo = rc - d.r_halfaxis;
    d.r_hi = std::min(p.r0, rc + d.r_halfaxis);
    return d;
  }
};

/// Exact area of the reachable section domain at energy E.
inline double section_area(double E, const ModelParams& p) {
  const SectionDomain d = SectionDomain::at_energy(E, p);
  const double a = d.r_halfaxis, b = d.vy_halfaxis;
  const double full = M_PI * a * b;
  const double off = p.r0 - d.r_center;  // clip distance from the center
  if (off >= a) return full;
  const double q = off / a;
  return full - a * b * (std::acos(q) - q * std::sqrt(1.0 - q * q));
}

// ---------------------------------------------------------------------------

/// Uniform cell grid over the section plane; values live at cell centers.
struct GridSpec {
  double r_lo = 0.0, r_hi = 0.0;
  int nr = 0;
  double vy_lo = 0.0, vy_hi = 0.0;
  int nvy = 0;

  static GridSpec section_default(double E, const ModelParams& p, int nr = 201,
                                  int nvy = 201) {
    const SectionDomain d = SectionDomain::at_energy(E, p);
    return {d.r_lo, d.r_hi, nr, -d.vy_halfaxis, d.vy_halfaxis, nvy};
  }

  double dr() const { return (r_hi - r_lo) / nr; }
  double dvy() const { return (vy_hi - vy_lo) / nvy; }
  double r_at(int ir) const { return r_lo + (ir + 0.5) * dr(); }
  double vy_at(int ivy) const { return vy_lo + (ivy + 0.5) * dvy(); }
  std::size_t size() const {
    return static_cast<std::size_t>(nr) * static_cast<std::size_t>(nvy);
  }
  std::size_t index(int ir, int ivy) const {
    return static_cast<std::size_t>(ir) * nvy + ivy;
  }
  /// containing cell, or -1 when off the grid
  int cell_r(double r) const {
    const int i = static_cast<int>(std::floor((r - r_lo) / dr()));
    return (i >= 0 && i < nr) ? i : -1;
  }
  int cell_vy(double vy) const {
    const int i = static_cast<int>(std::floor((vy - vy_lo) / dvy()));
    return (i >= 0 && i < nvy) ? i : -1;
  }
  bool operator==(const GridSpec&) const = default;
};

/// Boolean/graded region over a section grid at one energy, one gait and one
/// angle-window width.
struct RegionGrid {
  double energy = 0.0;
  GaitKind gait = GaitKind::Walking;
  double delta_alpha = 0.0;  ///< [rad]
  GridSpec grid;
  std::vector<uint8_t> member;
  std::vector<float> interval_len;  ///< widest valid window per cell [rad]

  bool at(int ir, int ivy) const { return member[grid.index(ir, ivy)] != 0; }

  /// cell-lookup membership of a continuous section state
  bool contains(double r, double vy) const {
    const int ir = grid.cell_r(r), ivy = grid.cell_vy(vy);
    return ir >= 0 && ivy >= 0 && at(ir, ivy);
  }
  bool contains(const SectionState& s) const { return contains(s.r, s.vy); }

  /// conservative variant: the whole 2x2 neighborhood around the point
  bool contains_conservative(double r, double vy) const {
    const double fi = (r - grid.r_lo) / grid.dr() - 0.5;
    const double fj = (vy - grid.vy_lo) / grid.dvy() - 0.5;
    const int i0 = static_cast<int>(std::floor(fi)), i1 = i0 + 1;
    const int j0 = static_cast<int>(std::floor(fj)), j1 = j0 + 1;
    for (int i : {i0, i1})
      for (int j : {j0, j1}) {
        if (i < 0 || i >= grid.nr || j < 0 || j >= grid.nvy) return false;
        if (!at(i, j)) return false;
      }
    return true;
  }

  std::size_t count_members() const {
    std::size_t n = 0;
    for (uint8_t m : member) n += m ? 1 : 0;
    return n;
  }
};

/// Member-cell area normalized by the exact reachable-domain area at E.
inline double region_area(const RegionGrid& g, const ModelParams& p) {
  const double cell = g.grid.dr() * g.grid.dvy();
  return static_cast<double>(g.count_members()) * cell / section_area(g.energy, p);
}

// ---------------------------------------------------------------------------
// Cached one-step sweep: for every in-domain cell and every sampled angle of
// attack, the outcome of one step.  Everything else (viability, robustness,
// transition regions) is derived from this table, so the expensive dynamics
// run exactly once per (energy, phase-sequence) pair.
// ---------------------------------------------------------------------------

enum class SweepCommand { Running, WalkLike };

inline SweepCommand sweep_command(GaitKind g) {
  return g == GaitKind::Running ? SweepCommand::Running : SweepCommand::WalkLike;
}

struct AngleOutcome {
  float r = 0.0f, vy = 0.0f;  ///< landing section state
  uint8_t realized = 0;       ///< GaitKind
  uint8_t ok = 0;
};

struct CellSweep {
  int32_t j0 = 0;                 ///< first stored angle index
  std::vector<AngleOutcome> out;  ///< angles j0 .. j0+out.size()-1
};

class StepSweep {
 public:
  GridSpec grid;
  double energy = 0.0;
  double angle_res = 0.0;  ///< [rad]
  SweepCommand cmd = SweepCommand::WalkLike;
  std::vector<uint8_t> in_domain;
  std::vector<CellSweep> cells;

  int n_angles() const { return static_cast<int>(kHalfPi / angle_res); }
  double alpha_at(int j) const { return j * angle_res; }

  /// One pass over every in-domain cell.  The first stance phase of a step
  /// does not depend on the angle of attack (running) or depends on it only
  /// through the touchdown height threshold (walking), so it is integrated
  /// once per cell; the per-angle outcomes continue from the shared phase
  /// with exactly the code paths step() uses.
  static StepSweep compute(double E, SweepCommand cmd, const GridSpec& grid,
                           double angle_res, const ModelParams& p,
                           const StepOptions& step_opts = {},
                           unsigned threads = 1) {
    StepSweep s;
    s.grid = grid;
    s.energy = E;
    s.angle_res = angle_res;
    s.cmd = cmd;
    s.in_domain.assign(grid.size(), 0);
    s.cells.resize(grid.size());

    const int n = s.n_angles();
    std::vector<double> thresholds;  // descending touchdown heights
    if (cmd == SweepCommand::WalkLike) {
      thresholds.resize(n - 1);
      for (int j = 1; j < n; ++j)
        thresholds[j - 1] = p.r0 * std::cos(s.alpha_at(j));
    }

    parallel_for(grid.size(), threads, [&](std::size_t ci) {
      const int ir = static_cast<int>(ci) / grid.nvy;
      const int ivy = static_cast<int>(ci) % grid.nvy;
      const SectionState st{grid.r_at(ir), grid.vy_at(ivy), E};
      if (!section_valid(st, p)) return;
      s.in_domain[ci] = 1;

      StanceState embedded = embed(st, p);
      embedded.foot_x = step_opts.foot_x;

      CellSweep& cell = s.cells[ci];
      int first = -1, last = -1;
      std::vector<AngleOutcome> tmp(n, AngleOutcome{});
      auto note = [&](int j, const StepOutcome& o) {
        if (!o.ok) return;
        tmp[j] = {static_cast<float>(o.next.r), static_cast<float>(o.next.vy),
                  static_cast<uint8_t>(o.realized), 1};
        if (first < 0) first = j;
        last = j;
      };

      if (cmd == SweepCommand::Running) {
        const EventKind watched[] = {EventKind::Takeoff};
        const PhaseEvent ev1 = integrate_until_event(
            HybridState{embedded}, std::span(watched), 0.5, p, step_opts.dyn,
            nullptr, step_opts.t0, step_opts.support_leg);
        for (int j = 1; j < n; ++j) {
          auto ctx = detail::make_ctx(p, step_opts, nullptr);
          note(j, detail::run_after_phase1(std::move(ctx), ev1, s.alpha_at(j)));
        }
      } else {
        const std::vector<PhaseEvent> table = stance_touchdown_table(
            embedded, thresholds, p, step_opts.dyn, step_opts.t0);
        for (int j = 1; j < n; ++j) {
          auto ctx = detail::make_ctx(p, step_opts, nullptr);
          note(j, detail::walk_after_phase1(std::move(ctx), table[j - 1],
                                            s.alpha_at(j)));
        }
      }

      if (first >= 0) {
        cell.j0 = first;
        cell.out.assign(tmp.begin() + first, tmp.begin() + last + 1);
      }
    });
    return s;
  }
};

// ---------------------------------------------------------------------------

struct SymmetricPoint {
  SectionState state;
  double alpha = 0.0;  ///< angle of attack that closes the step
};

struct RegionOptions {
  double angle_res = 0.05 * M_PI / 180.0;
  unsigned threads = 1;
  bool conservative_membership = false;
  bool target_same_gait = true;  ///< viability target: states of the same gait
  int max_prune_sweeps = 200;
  /// Integrator tolerance for the grid sweeps.  Landing errors at 1e-7 are
  /// four orders of magnitude below a cell, so membership is unaffected while
  /// the sweeps run ~2x faster than at the dynamics default.
  IntegrateOptions sweep_integ{.rtol = 1e-7, .atol = 1e-9};

  StepOptions sweep_step_options() const {
    StepOptions so;
    so.dyn.integ = sweep_integ;
    return so;
  }
};

struct TransitionRegions {
  RegionGrid w_to_r;             ///< robust walking -> robust running, one step
  RegionGrid r_to_w;             ///< robust running -> robust walking, one step
  RegionGrid robust_to_viable;   ///< walking only: stage through V^W \ rho^W
  RegionGrid viable_stage;       ///< the staging set itself (non-robust viable)
};

/// Region computations at one energy, sharing the per-cell step sweeps.
class RegionBundle {
 public:
  RegionBundle(double E, const GridSpec& grid, const ModelParams& p,
               RegionOptions opts = {})
      : energy_(E), grid_(grid), p_(p), opts_(opts) {}

  const GridSpec& grid() const { return grid_; }
  double energy() const { return energy_; }
  const ModelParams& params() const { return p_; }
  const RegionOptions& options() const { return opts_; }

  const StepSweep& sweep(GaitKind g) {
    const bool run = sweep_command(g) == SweepCommand::Running;
    auto& slot = run ? run_sweep_ : walk_sweep_;
    if (!slot) {
      slot = std::make_unique<StepSweep>(StepSweep::compute(
          energy_, run ? SweepCommand::Running : SweepCommand::WalkLike, grid_,
          opts_.angle_res, p_, opts_.sweep_step_options(), opts_.threads));
    }
    return *slot;
  }

  /// Cells from which at least one angle realizes the gait.
  const RegionGrid& one_step_valid(GaitKind g) {
    auto key = std::make_pair(g, -1.0);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const StepSweep& sw = sweep(g);
    RegionGrid out = blank(g, 0.0);
    for (std::size_t ci = 0; ci < grid_.size(); ++ci) {
      if (!sw.in_domain[ci]) continue;
      for (const AngleOutcome& ao : sw.cells[ci].out) {
        if (ao.ok && ao.realized == static_cast<uint8_t>(g)) {
          out.member[ci] = 1;
          break;
        }
      }
    }
    return cache_.emplace(key, std::move(out)).first->second;
  }

  /// Viability region V^g(da): a cell belongs iff some contiguous angle
  /// window of width >= da exists in which EVERY sampled angle takes a
  /// successful step of gait g landing in a state of the same gait (a state
  /// from which at least one further g-step exists).  interval_len stores the
  /// widest such window per cell.
  const RegionGrid& viability(GaitKind g, double delta_alpha) {
    auto key = std::make_pair(g, delta_alpha);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    const RegionGrid* target = opts_.target_same_gait ? &one_step_valid(g) : nullptr;
    RegionGrid out = blank(g, delta_alpha);
    fill_window_region(
        g, delta_alpha,
        [&](float r, float vy) {
          return !target || land_in(*target, r, vy);
        },
        nullptr, out);
    return cache_.emplace(key, std::move(out)).first->second;
  }

  /// Robust region rho^g(da): greatest fixed point inside V^g(da) under
  /// "some da-wide window maps every sampled angle back into the set",
  /// computed by iterative pruning.
  const RegionGrid& robust(GaitKind g, double delta_alpha) {
    auto key = std::make_pair(g, -delta_alpha - 1.0);  // distinct cache slot
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    RegionGrid cur = viability(g, delta_alpha);
    for (int pass = 0;; ++pass) {
      if (pass >= opts_.max_prune_sweeps)
        throw std::runtime_error(
            "robust: pruning did not converge within the sweep cap");
      RegionGrid next = blank(g, delta_alpha);
      fill_window_region(
          g, delta_alpha,
          [&](float r, float vy) { return land_in(cur, r, vy); },
          &cur.member, next);
      if (next.member == cur.member) {
        cur.interval_len = std::move(next.interval_len);
        break;
      }
      cur = std::move(next);
    }
    return cache_.emplace(key, std::move(cur)).first->second;
  }

  /// Symmetric locus: states with vy = 0 mapped back to themselves by some
  /// angle of attack (residuals below 1e-6 in both coordinates).
  std::vector<SymmetricPoint> symmetric_locus(GaitKind g) {
    auto it = locus_cache_.find(g);
    if (it != locus_cache_.end()) return it->second;
    std::vector<SymmetricPoint> pts;
    const int n = static_cast<int>(kHalfPi / opts_.angle_res);

    for (int ir = 0; ir < grid_.nr; ++ir) {
      const SectionState s{grid_.r_at(ir), 0.0, energy_};
      if (!section_valid(s, p_)) continue;

      auto eval = [&](double a) -> std::optional<std::pair<double, double>> {
        const StepOutcome o = step(s, g, a, p_);
        if (!o.ok || o.realized != g) return std::nullopt;
        return std::make_pair(o.next.vy, o.next.r - s.r);
      };

      std::optional<std::pair<double, double>> prev;
      double prev_a = 0.0;
      for (int j = 1; j < n; ++j) {
        const double a = j * opts_.angle_res;
        const auto cur = eval(a);
        if (cur && prev && prev->first * cur->first < 0.0) {
          // bracketed vy' sign change: bisect
          double lo = prev_a, hi = a, flo = prev->first;
          for (int itn = 0; itn < 60 && hi - lo > 1e-13; ++itn) {
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
          if (er && std::abs(er->first) <= 1e-6 && std::abs(er->second) <= 1e-6) {
            pts.push_back({s, a_root});
          }
        }
        prev = cur;
        prev_a = a;
      }
    }
    locus_cache_[g] = pts;
    return pts;
  }

  /// Robust-to-robust transition region: cells of rho^A holding a da-wide
  /// window of A-steps that all land inside rho^B.
  RegionGrid robust_to_robust(GaitKind from, GaitKind to, double delta_alpha) {
    const RegionGrid& rho_from = robust(from, delta_alpha);
    const RegionGrid& rho_to = robust(to, delta_alpha);
    RegionGrid out = blank(from, delta_alpha);
    fill_window_region(
        from, delta_alpha,
        [&](float r, float vy) { return land_in(rho_to, r, vy); },
        &rho_from.member, out);
    return out;
  }

  TransitionRegions transition_regions(double delta_alpha) {
    TransitionRegions tr;
    tr.w_to_r = robust_to_robust(GaitKind::Walking, GaitKind::Running, delta_alpha);
    tr.r_to_w = robust_to_robust(GaitKind::Running, GaitKind::Walking, delta_alpha);

    // staging set: non-robust viable walking cells that reach robust running
    // with a full window
    const RegionGrid& vw = viability(GaitKind::Walking, delta_alpha);
    const RegionGrid& rw = robust(GaitKind::Walking, delta_alpha);
    const RegionGrid& rr = robust(GaitKind::Running, delta_alpha);
    std::vector<uint8_t> nonrobust_viable(grid_.size(), 0);
    for (std::size_t ci = 0; ci < grid_.size(); ++ci)
      nonrobust_viable[ci] = vw.member[ci] && !rw.member[ci];

    tr.viable_stage = blank(GaitKind::Walking, delta_alpha);
    fill_window_region(
        GaitKind::Walking, delta_alpha,
        [&](float r, float vy) { return land_in(rr, r, vy); },
        &nonrobust_viable, tr.viable_stage);

    tr.robust_to_viable = blank(GaitKind::Walking, delta_alpha);
    fill_window_region(
        GaitKind::Walking, delta_alpha,
        [&](float r, float vy) { return land_in(tr.viable_stage, r, vy); },
        &rw.member, tr.robust_to_viable);
    return tr;
  }

  /// Cells outside rho^to_gait from which one step of a DIFFERENT gait (with
  /// a full window) reaches rho^to_gait.
  RegionGrid viable_transition_to_robust(GaitKind to_gait, double delta_alpha) {
    const RegionGrid& rho = robust(to_gait, delta_alpha);
    RegionGrid out = blank(to_gait, delta_alpha);
    std::vector<uint8_t> outside(grid_.size(), 0);
    for (std::size_t ci = 0; ci < grid_.size(); ++ci)
      outside[ci] = sweep(to_gait).in_domain[ci] && !rho.member[ci];
    for (GaitKind via : {GaitKind::Running, GaitKind::Walking,
                         GaitKind::GroundedRunning}) {
      if (via == to_gait) continue;
      RegionGrid part = blank(via, delta_alpha);
      fill_window_region(
          via, delta_alpha,
          [&](float r, float vy) { return land_in(rho, r, vy); },
          &outside, part);
      for (std::size_t ci = 0; ci < grid_.size(); ++ci)
        if (part.member[ci]) {
          out.member[ci] = 1;
          out.interval_len[ci] =
              std::max(out.interval_len[ci], part.interval_len[ci]);
        }
    }
    return out;
  }

 private:
  RegionGrid blank(GaitKind g, double delta_alpha) const {
    RegionGrid out;
    out.energy = energy_;
    out.gait = g;
    out.delta_alpha = delta_alpha;
    out.grid = grid_;
    out.member.assign(grid_.size(), 0);
    out.interval_len.assign(grid_.size(), 0.0f);
    return out;
  }

  bool land_in(const RegionGrid& region, float r, float vy) const {
    return opts_.conservative_membership
               ? region.contains_conservative(r, vy)
               : region.contains(r, vy);
  }

  /// Core window scan: for each candidate cell, the longest run of
  /// consecutive sampled angles that realize the gait and whose landings all
  /// satisfy `land_ok`; member iff (run - 1) * res >= da.
  template <class LandOk>
  void fill_window_region(GaitKind g, double delta_alpha, const LandOk& land_ok,
                          const std::vector<uint8_t>* restrict_to,
                          RegionGrid& out) {
    const StepSweep& sw = sweep(g);
    const int need =
        static_cast<int>(std::ceil(delta_alpha / opts_.angle_res - 1e-9)) + 1;
    for (std::size_t ci = 0; ci < grid_.size(); ++ci) {
      if (!sw.in_domain[ci]) continue;
      if (restrict_to && !(*restrict_to)[ci]) continue;
      const CellSweep& cell = sw.cells[ci];
      int run = 0, best = 0;
      for (const AngleOutcome& ao : cell.out) {
        const bool good = ao.ok && ao.realized == static_cast<uint8_t>(g) &&
                          land_ok(ao.r, ao.vy);
        run = good ? run + 1 : 0;
        best = std::max(best, run);
      }
      out.interval_len[ci] =
          best > 0 ? static_cast<float>((best - 1) * opts_.angle_res) : 0.0f;
      out.member[ci] = best >= need ? 1 : 0;
    }
  }

  double energy_;
  GridSpec grid_;
  ModelParams p_;
  RegionOptions opts_;
  std::unique_ptr<StepSweep> run_sweep_, walk_sweep_;
  std::map<std::pair<GaitKind, double>, RegionGrid> cache_;
  std::map<GaitKind, std::vector<SymmetricPoint>> locus_cache_;
};

// ---------------------------------------------------------------------------
// Free-function forms for one-off use.
// ---------------------------------------------------------------------------

inline RegionGrid viability_region(double E, GaitKind g, double delta_alpha,
                                   const GridSpec& grid, const ModelParams& p,
                                   RegionOptions opts = {}) {
  RegionBundle b(E, grid, p, opts);
  return b.viability(g, delta_alpha);
}

inline RegionGrid robust_region(double E, GaitKind g, double delta_alpha,
                                const GridSpec& grid, const ModelParams& p,
                                RegionOptions opts = {}) {
  RegionBundle b(E, grid, p, opts);
  return b.robust(g, delta_alpha);
}

inline std::vector<SymmetricPoint> symmetric_locus(double E, GaitKind g,
                                                   const GridSpec& grid,
                                                   const ModelParams& p,
                                                   RegionOptions opts = {}) {
  RegionBundle b(E, grid, p, opts);
  return b.symmetric_locus(g);
}

/// Minimum/maximum Froude number over the member cells of a region.
inline std::pair<double, double> froude_range(const RegionGrid& g,
                                              const ModelParams& p) {
  bool any = false;
  double lo = 0.0, hi = 0.0;
  for (int ir = 0; ir < g.grid.nr; ++ir) {
    for (int ivy = 0; ivy < g.grid.nvy; ++ivy) {
      if (!g.at(ir, ivy)) continue;
      const SectionState s{g.grid.r_at(ir), g.grid.vy_at(ivy), g.energy};
      if (!section_valid(s, p)) continue;
      const double fr = froude_number(s, p);
      if (!any) {
        lo = hi = fr;
        any = true;
      } else {
        lo = std::min(lo, fr);
        hi = std::max(hi, fr);
      }
    }
  }
  if (!any) throw std::domain_error("froude_range: empty region");
  return {lo, hi};
}

inline std::pair<double, double> froude_range(
    const std::vector<SymmetricPoint>& locus, const ModelParams& p) {
  if (locus.empty()) throw std::domain_error("froude_range: empty locus");
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& pt : locus) {
    const double fr = froude_number(pt.state, p);
    if (!any) {
      lo = hi = fr;
      any = true;
    } else {
      lo = std::min(lo, fr);
      hi = std::max(hi, fr);
    }
  }
  return {lo, hi};
}

/// Maximal runs of consecutive grid r-values covered by locus points
/// (connectivity of the symmetric locus along the vy = 0 line).
inline std::vector<std::pair<double, double>> locus_segments(
    const std::vector<SymmetricPoint>& locus, const GridSpec& grid,
    int gap_cells = 2) {
  std::vector<uint8_t> hit(grid.nr, 0);
  for (const auto& pt : locus) {
    const int ir = grid.cell_r(pt.state.r);
    if (ir >= 0) hit[ir] = 1;
  }
  std::vector<std::pair<double, double>> segs;
  int begin = -1, gap = 0;
  for (int ir = 0; ir <= grid.nr; ++ir) {
    const bool on = ir < grid.nr && hit[ir];
    if (on) {
      if (begin < 0) begin = ir;
      gap = 0;
    } else if (begin >= 0 && (++gap > gap_cells || ir >= grid.nr)) {
      segs.emplace_back(grid.r_at(begin), grid.r_at(ir - gap));
      begin = -1;
      gap = 0;
    }
  }
  return segs;
}

}  // namespace slipgait
