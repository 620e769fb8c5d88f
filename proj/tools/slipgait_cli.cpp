// Batch front-end: region sweeps, gait-transition planning, hopping
// synthesis and hip-series analysis.
//
//   slipgait regions    --params run.cfg --out out/
//   slipgait sweep-summary ...            (summary csv only)
//   slipgait transition --energy 840 --from walking --to running \
//                       --strategy froude --out out/
//   slipgait hopping    --energy 840 --cycles 10 --out out/
//   slipgait analyze    --input hip.csv --kind hip --out out/
//
// Exit codes: 0 success, 2 configuration error, 3 infeasible request,
// 4 numeric failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "slipgait/io.hpp"
#include "slipgait/observables.hpp"
#include "slipgait/regions.hpp"
#include "slipgait/signal_analysis.hpp"
#include "slipgait/transitions.hpp"

namespace fs = std::filesystem;
using namespace slipgait;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumeric = 4;

struct CliArgs {
  std::string params_file;
  std::optional<double> energy;
  std::string delta_alpha;
  std::string grid;
  std::string out;
  std::optional<unsigned> threads;
  std::optional<uint64_t> seed;
  std::optional<double> angle_res_deg;
};

RunConfig resolve_config(const CliArgs& a) {
  RunConfig cfg;
  if (!a.params_file.empty()) cfg = parse_config(a.params_file);
  if (a.energy) {
    cfg.energy_start = cfg.energy_stop = *a.energy;
    cfg.energy_step = 1.0;
  }
  if (!a.delta_alpha.empty()) {
    cfg.delta_alpha_deg.clear();
    for (const auto part : split_csv_line(a.delta_alpha))
      cfg.delta_alpha_deg.push_back(parse_double(part));
  }
  if (!a.grid.empty()) {
    const auto x = a.grid.find('x');
    if (x == std::string::npos)
      throw std::runtime_error("--grid expects NxM, e.g. 201x201");
    cfg.grid_nr = static_cast<int>(parse_double(a.grid.substr(0, x)));
    cfg.grid_nvy = static_cast<int>(parse_double(a.grid.substr(x + 1)));
  }
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (a.threads) cfg.threads = *a.threads;
  if (a.seed) cfg.seed = *a.seed;
  if (a.angle_res_deg) cfg.angle_resolution_deg = *a.angle_res_deg;
  cfg.params.validate();
  if (!(cfg.energy_step > 0.0) || cfg.grid_nr < 3 || cfg.grid_nvy < 3 ||
      !(cfg.angle_resolution_deg > 0.0)) {
    throw std::runtime_error("invalid sweep/grid configuration");
  }
  for (const double da : cfg.delta_alpha_deg)
    if (!(da > 0.0)) throw std::runtime_error("delta_alpha must be positive");
  return cfg;
}

RegionOptions region_options(const RunConfig& cfg) {
  RegionOptions opts;
  opts.angle_res = cfg.angle_resolution_deg * M_PI / 180.0;
  opts.threads = cfg.threads;
  return opts;
}

std::string gait_tag(GaitKind g) {
  switch (g) {
    case GaitKind::Running: return "running";
    case GaitKind::Walking: return "walking";
    case GaitKind::GroundedRunning: return "grounded";
  }
  return "?";
}

// --- regions / sweep-summary -------------------------------------------------

int run_regions(const RunConfig& cfg, bool grids_too) {
  const fs::path out(cfg.out_dir);
  fs::create_directories(out / "regions");
  ResultStore cache(out / "cache");

  std::ostringstream summary;
  summary << "energy_J,gait,delta_alpha_deg,viability_area,robust_area,"
             "transition_to_robust_area,froude_min,froude_max\n";

  for (const double E : cfg.energies()) {
    GridSpec grid;
    try {
      grid = GridSpec::section_default(E, cfg.params, cfg.grid_nr, cfg.grid_nvy);
    } catch (const std::domain_error&) {
      std::cerr << "energy " << E << " J below the section minimum, skipped\n";
      continue;
    }
    const RegionOptions opts = region_options(cfg);
    RegionBundle bundle(E, grid, cfg.params, opts);

    for (const GaitKind g :
         {GaitKind::Running, GaitKind::Walking, GaitKind::GroundedRunning}) {
      for (const double da_deg : cfg.delta_alpha_deg) {
        const double da = da_deg * M_PI / 180.0;
        const std::string base =
            params_hash(cfg.params, grid, E, g, da, opts.angle_res);

        auto load_or = [&](const std::string& kind,
                           auto&& compute) -> RegionGrid {
          const std::string key = base + "-" + kind;
          if (auto hit = cache.load(key)) return *hit;
          RegionGrid fresh = compute();
          cache.store(key, fresh, cfg.params, opts.angle_res);
          return fresh;
        };

        const RegionGrid v =
            load_or("viability", [&] { return bundle.viability(g, da); });
        const RegionGrid rho =
            load_or("robust", [&] { return bundle.robust(g, da); });
        const RegionGrid ttr = load_or("transition", [&] {
          return bundle.viable_transition_to_robust(g, da);
        });

        if (grids_too) {
          std::ostringstream stem;
          stem << "E" << fmt_double(E) << "_" << gait_tag(g) << "_da"
               << fmt_double(da_deg);
          const std::pair<const char*, const RegionGrid*> outputs[] = {
              {"viability", &v}, {"robust", &rho}, {"transition", &ttr}};
          for (const auto& [kind, gridp] : outputs) {
            const fs::path csv =
                out / "regions" / (stem.str() + "_" + kind + ".csv");
            write_region_csv(*gridp, csv);
            std::ofstream jf(csv.string() + ".json");
            jf << region_envelope(*gridp, cfg.params, opts.angle_res,
                                  csv.filename().string())
                      .dump(2)
               << '\n';
          }
        }

        summary << fmt_double(E) << ',' << gait_name(g) << ','
                << fmt_double(da_deg) << ','
                << fmt_double(region_area(v, cfg.params)) << ','
                << fmt_double(region_area(rho, cfg.params)) << ','
                << fmt_double(region_area(ttr, cfg.params)) << ',';
        if (rho.count_members() > 0) {
          const auto [lo, hi] = froude_range(rho, cfg.params);
          summary << fmt_double(lo) << ',' << fmt_double(hi) << '\n';
        } else {
          summary << "nan,nan\n";
        }
      }
    }
    std::cerr << "energy " << E << " J done\n";
  }

  std::ofstream sf(out / "summary.csv");
  sf << summary.str();
  std::cout << "wrote " << (out / "summary.csv").string() << '\n';
  return 0;
}

// --- transition / hopping ------------------------------------------------------

void write_execution(const ExecutionResult& ex, const StepPlan& plan,
                     const RunConfig& cfg, const fs::path& out) {
  write_trajectory_csv(ex.trajectory, out / "trajectory.csv");

  {
    std::ofstream f(out / "grf.csv");
    f << "time,grf_leg1_norm,grf_leg2_norm,contact1,contact2\n";
    for (const auto& s : ex.trajectory.samples) {
      f << fmt_double(s.t) << ',' << fmt_double(s.grf[0]) << ','
        << fmt_double(s.grf[1]) << ',' << int(s.contact[0]) << ','
        << int(s.contact[1]) << '\n';
    }
  }
  {
    std::ofstream f(out / "observables.csv");
    f << "cycle_start_mark,duty_factor,hip_excursion_m,froude,mean_speed_mps\n";
    for (std::size_t i = 0; i < ex.cycles.size(); ++i) {
      if (!ex.cycles[i]) continue;
      const auto& c = *ex.cycles[i];
      f << i << ',' << fmt_double(c.duty_factor) << ','
        << fmt_double(c.hip_excursion) << ',' << fmt_double(c.froude) << ','
        << fmt_double(c.mean_speed) << '\n';
    }
  }
  {
    json j = plan_to_json(plan);
    j["seed"] = cfg.seed;
    std::ofstream f(out / "plan.json");
    f << j.dump(2) << '\n';
  }
}

int run_transition(const RunConfig& cfg, const std::string& from_s,
                   const std::string& to_s, const std::string& strategy_s,
                   double fit_target, const std::string& replay,
                   double delta_alpha_deg, int settle_cap) {
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);

  StepPlan plan;
  if (!replay.empty()) {
    std::ifstream f(replay);
    if (!f) throw std::runtime_error("cannot read plan " + replay);
    plan = plan_from_json(json::parse(f));
  } else {
    const GaitKind from = gait_from_name(from_s), to = gait_from_name(to_s);
    Strategy strat;
    if (strategy_s == "froude") strat = Strategy::constant_froude();
    else if (strategy_s == "hip") strat = Strategy::constant_hip();
    else if (strategy_s == "fit") strat = Strategy::fit_hip(fit_target);
    else throw std::runtime_error("unknown strategy '" + strategy_s + "'");

    const double E = cfg.energy_start;
    RegionBundle bundle(E,
                        GridSpec::section_default(E, cfg.params, cfg.grid_nr,
                                                  cfg.grid_nvy),
                        cfg.params, region_options(cfg));
    PlanningOptions popts;
    popts.settle_cap = settle_cap;
    const PlanResult res =
        plan_transition(from, to, E, delta_alpha_deg * M_PI / 180.0, strat,
                        cfg.params, bundle, popts);
    if (const auto* fail = std::get_if<PlanFailure>(&res)) {
      std::cerr << "infeasible at stage " << stage_name(fail->stage) << ": "
                << fail->message << '\n';
      return kExitInfeasible;
    }
    plan = std::get<StepPlan>(res);
  }

  const ExecutionResult ex = execute_plan(plan, cfg.params);
  if (!ex.ok) {
    std::cerr << "execution failed at step " << ex.failed_step << " ("
              << failure_name(*ex.failure) << ")\n";
    return kExitNumeric;
  }
  write_execution(ex, plan, cfg, out);
  std::cout << "plan: " << plan.steps.size() << " steps, objective "
            << fmt_double(plan.objective) << ", energy drift "
            << fmt_double(ex.max_energy_drift) << '\n';
  return 0;
}

int run_hopping(const RunConfig& cfg, int cycles, double delta_alpha_deg) {
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  const double E = cfg.energy_start;
  RegionBundle bundle(
      E, GridSpec::section_default(E, cfg.params, cfg.grid_nr, cfg.grid_nvy),
      cfg.params, region_options(cfg));
  const PlanResult res = synthesize_hopping(E, delta_alpha_deg * M_PI / 180.0,
                                            cycles, cfg.params, bundle);
  if (const auto* fail = std::get_if<PlanFailure>(&res)) {
    std::cerr << "infeasible at stage " << stage_name(fail->stage) << ": "
              << fail->message << '\n';
    return kExitInfeasible;
  }
  const StepPlan& plan = std::get<StepPlan>(res);
  const ExecutionResult ex = execute_plan(plan, cfg.params);
  if (!ex.ok) {
    std::cerr << "execution failed at step " << ex.failed_step << '\n';
    return kExitNumeric;
  }
  write_execution(ex, plan, cfg, out);
  std::cout << "hopping: " << cycles << " cycles sustained, energy drift "
            << fmt_double(ex.max_energy_drift) << '\n';
  return 0;
}

int run_analyze(const RunConfig& cfg, const std::string& input,
                const std::string& kind) {
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  const TimeSeries ts = read_series_csv(input);

  json j;
  if (kind == "hip") {
    j = phase_analysis_to_json(analyze_hip_series(ts));
  } else if (kind == "angles") {
    const auto hits = estimate_touchdown_angles(ts);
    json items = json::array();
    for (const auto& h : hits) {
      items.push_back({{"index", h.index},
                       {"time_s", h.index / ts.sample_rate},
                       {"angle", h.angle}});
    }
    j = json{{"sample_rate_hz", ts.sample_rate},
             {"units", ts.units},
             {"touchdowns", items}};
  } else {
    throw std::runtime_error("--kind must be hip or angles");
  }
  const fs::path path = out / "analysis.json";
  std::ofstream f(path);
  f << j.dump(2) << '\n';
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bipedal spring-mass gait simulator and analysis tool"};
  app.require_subcommand(1);

  CliArgs args;
  app.add_option("--params", args.params_file, "configuration file");
  app.add_option("--energy", args.energy, "single energy level [J]");
  app.add_option("--delta-alpha", args.delta_alpha,
                 "angle-window widths, comma separated [deg]");
  app.add_option("--grid", args.grid, "section grid, NxM cells");
  app.add_option("--out", args.out, "output directory");
  app.add_option("--threads", args.threads, "worker threads (0 = all cores)");
  app.add_option("--seed", args.seed, "random seed recorded in outputs");
  app.add_option("--angle-res", args.angle_res_deg,
                 "angle sweep resolution [deg]");

  auto* regions = app.add_subcommand("regions", "viability/robust region sweep");
  auto* sweep_summary =
      app.add_subcommand("sweep-summary", "region areas summary only");

  auto* transition = app.add_subcommand("transition", "plan a gait transition");
  std::string from = "walking", to = "running", strategy = "froude", replay;
  double fit_target = 0.596, da_deg = 1.0;
  int cycles = 10, settle_cap = 2;
  transition->add_option("--from", from, "source gait");
  transition->add_option("--to", to, "target gait");
  transition->add_option("--strategy", strategy, "froude | hip | fit");
  transition->add_option("--fit-target", fit_target,
                         "relative hip-excursion change for --strategy fit");
  transition->add_option("--delta-alpha-deg", da_deg, "angle window width");
  transition->add_option("--settle-cap", settle_cap, "settling steps budget");
  transition->add_option("--replay", replay, "re-execute a saved plan.json");

  auto* hopping = app.add_subcommand("hopping", "synthesize the hopping gait");
  hopping->add_option("--cycles", cycles, "walk/run cycles");
  hopping->add_option("--delta-alpha-deg", da_deg, "angle window width");

  auto* analyze = app.add_subcommand("analyze", "hip/limb series analysis");
  std::string input, kind = "hip";
  analyze->add_option("--input", input, "two-column csv")->required();
  analyze->add_option("--kind", kind, "hip | angles");

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = resolve_config(args);
    if (regions->parsed()) return run_regions(cfg, true);
    if (sweep_summary->parsed()) return run_regions(cfg, false);
    if (transition->parsed()) {
      if (!args.energy && args.params_file.empty() && replay.empty()) {
        std::cerr << "transition needs --energy (or --params/--replay)\n";
        return kExitConfig;
      }
      return run_transition(cfg, from, to, strategy, fit_target, replay, da_deg,
                            settle_cap);
    }
    if (hopping->parsed()) {
      if (!args.energy && args.params_file.empty()) {
        std::cerr << "hopping needs --energy (or --params)\n";
        return kExitConfig;
      }
      return run_hopping(cfg, cycles, da_deg);
    }
    if (analyze->parsed()) return run_analyze(cfg, input, kind);
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return 0;
}
