#include "slipgait/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "test_util.hpp"

using namespace slipgait;
namespace fs = std::filesystem;

namespace {

const ModelParams kP;

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / "slipgait_io_test";
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

TEST(Formatting, DoubleRoundTrip) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, int(i % 13) - 6);
    EXPECT_EQ(parse_double(fmt_double(v)), v);
  }
}

TEST(RegionIo, CsvAndEnvelopeRoundTrip) {
  const double E = 830.0;
  RegionOptions opts;
  opts.angle_res = test::rad(0.5);
  RegionBundle b(E, GridSpec::section_default(E, kP, 15, 15), kP, opts);
  const RegionGrid& v = b.viability(GaitKind::Walking, test::rad(1.0));

  const fs::path dir = temp_dir();
  write_region_csv(v, dir / "grid.csv");
  const json env = region_envelope(v, kP, opts.angle_res, "grid.csv");
  const RegionGrid back = read_region_csv(dir / "grid.csv", env);

  EXPECT_EQ(back.member, v.member);
  EXPECT_EQ(back.interval_len, v.interval_len);
  EXPECT_EQ(back.grid, v.grid);
  EXPECT_EQ(back.gait, v.gait);
  EXPECT_DOUBLE_EQ(back.energy, v.energy);

  // byte-identical re-serialization
  write_region_csv(back, dir / "grid2.csv");
  EXPECT_EQ(slurp(dir / "grid.csv"), slurp(dir / "grid2.csv"));
}

TEST(RegionIo, ResultStoreHitIsBitIdentical) {
  const double E = 820.0;
  RegionOptions opts;
  opts.angle_res = test::rad(0.5);
  RegionBundle b(E, GridSpec::section_default(E, kP, 13, 13), kP, opts);
  const RegionGrid& rho = b.robust(GaitKind::Running, test::rad(1.0));

  const fs::path dir = temp_dir() / "cache";
  fs::remove_all(dir);
  ResultStore store(dir);
  const std::string h =
      params_hash(kP, rho.grid, E, rho.gait, rho.delta_alpha, opts.angle_res);
  EXPECT_FALSE(store.load(h).has_value());
  store.store(h, rho, kP, opts.angle_res);
  const auto hit = store.load(h);
  ASSERT_TRUE(hit.has_value());
  EXPECT_EQ(hit->member, rho.member);
  EXPECT_EQ(hit->interval_len, rho.interval_len);
}

TEST(TrajectoryIo, CsvRoundTrip) {
  const auto fp = test::scan_fixed_point(GaitKind::Walking, 820.0, kP);
  ASSERT_TRUE(fp.has_value());
  const auto traj = test::run_symmetric(*fp, GaitKind::Walking, 2, kP);
  ASSERT_TRUE(traj.has_value());

  const fs::path p = temp_dir() / "traj.csv";
  write_trajectory_csv(*traj, p);
  const Trajectory back = read_trajectory_csv(p);
  ASSERT_EQ(back.samples.size(), traj->samples.size());
  for (std::size_t i = 0; i < back.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].t, traj->samples[i].t);
    EXPECT_EQ(back.samples[i].y, traj->samples[i].y);
    EXPECT_EQ(back.samples[i].grf[0], traj->samples[i].grf[0]);
    EXPECT_EQ(back.samples[i].phase, traj->samples[i].phase);
    EXPECT_EQ(back.samples[i].contact[1], traj->samples[i].contact[1]);
  }
}

TEST(PlanIo, JsonRoundTrip) {
  StepPlan plan;
  plan.energy = 840.0;
  plan.from = GaitKind::Walking;
  plan.to = GaitKind::Running;
  plan.strategy = Strategy::fit_hip(0.596);
  plan.delta_alpha = test::rad(1.0);
  plan.start = {0.991, 0.0, 840.0};
  plan.start_alpha = test::rad(20.4);
  plan.end_alpha = test::rad(9.7);
  plan.context_steps = 3;
  plan.objective = 0.012;
  plan.steps.push_back({GaitKind::Walking, test::rad(18.0), PlanRole::Transition,
                        RegionRef::TransferFromTo, {0.97, -0.2, 840.0}});
  plan.steps.push_back({GaitKind::Walking, test::rad(15.0), PlanRole::Robust,
                        RegionRef::RobustTo, {0.93, 0.1, 840.0}});
  plan.steps.push_back({GaitKind::Running, test::rad(9.7), PlanRole::Target,
                        RegionRef::RobustTo, {0.9, 0.0, 840.0}});

  const json j = plan_to_json(plan);
  const StepPlan back = plan_from_json(j);
  EXPECT_DOUBLE_EQ(back.energy, plan.energy);
  EXPECT_EQ(back.from, plan.from);
  EXPECT_EQ(back.to, plan.to);
  EXPECT_EQ(back.strategy.kind, plan.strategy.kind);
  EXPECT_DOUBLE_EQ(back.strategy.target_rel_change, plan.strategy.target_rel_change);
  ASSERT_EQ(back.steps.size(), plan.steps.size());
  for (std::size_t i = 0; i < back.steps.size(); ++i) {
    EXPECT_EQ(back.steps[i].gait, plan.steps[i].gait);
    EXPECT_EQ(back.steps[i].role, plan.steps[i].role);
    EXPECT_EQ(back.steps[i].region, plan.steps[i].region);
    EXPECT_NEAR(back.steps[i].alpha, plan.steps[i].alpha, 1e-15);
    EXPECT_DOUBLE_EQ(back.steps[i].predicted.r, plan.steps[i].predicted.r);
  }
}

TEST(SeriesIo, HeaderAndRoundTrip) {
  TimeSeries ts;
  ts.sample_rate = 250.0;
  ts.units = "m";
  for (int i = 0; i < 100; ++i) ts.values.push_back(std::sin(0.1 * i));

  const fs::path p = temp_dir() / "series.csv";
  write_series_csv(ts, p);
  const TimeSeries back = read_series_csv(p);
  EXPECT_DOUBLE_EQ(back.sample_rate, ts.sample_rate);
  EXPECT_EQ(back.units, "m");
  ASSERT_EQ(back.values.size(), ts.values.size());
  for (std::size_t i = 0; i < back.values.size(); ++i)
    EXPECT_EQ(back.values[i], ts.values[i]);
}

TEST(SeriesIo, RejectsNonUniformSampling) {
  const fs::path p = temp_dir() / "bad_series.csv";
  std::ofstream f(p);
  f << "# units: m\ntime,value\n0,1\n0.01,2\n0.5,3\n";
  f.close();
  EXPECT_THROW(read_series_csv(p), std::runtime_error);
}

TEST(ConfigIo, ParseOverridesAndValidation) {
  const fs::path p = temp_dir() / "run.cfg";
  std::ofstream f(p);
  f << "# comment\n[params]\nm = 72\nk = 18000\n\n[sweep]\nenergy_start = 700\n"
       "energy_stop = 760\nenergy_step = 20\ndelta_alpha_deg = 0.5,1\n"
       "[grid]\ngrid_nr = 41\ngrid_nvy = 31\nangle_resolution_deg = 0.2\n"
       "out_dir = results\nthreads = 2\nseed = 7\n";
  f.close();
  const RunConfig cfg = parse_config(p);
  EXPECT_DOUBLE_EQ(cfg.params.m, 72.0);
  EXPECT_DOUBLE_EQ(cfg.params.k, 18000.0);
  EXPECT_DOUBLE_EQ(cfg.params.r0, 1.0);  // default kept
  EXPECT_EQ(cfg.energies().size(), 4u);
  EXPECT_EQ(cfg.delta_alpha_deg.size(), 2u);
  EXPECT_EQ(cfg.grid_nr, 41);
  EXPECT_EQ(cfg.grid_nvy, 31);
  EXPECT_EQ(cfg.out_dir, "results");
  EXPECT_EQ(cfg.threads, 2u);
  EXPECT_EQ(cfg.seed, 7u);

  std::ofstream g(p, std::ios::app);
  g << "not_a_key = 3\n";
  g.close();
  EXPECT_THROW(parse_config(p), std::runtime_error);
}

}  // namespace
