#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "slipgait/regions.hpp"
#include "slipgait/signal_analysis.hpp"
#include "slipgait/trajectory.hpp"
#include "slipgait/transitions.hpp"

namespace slipgait {

using nlohmann::json;

// --- formatting --------------------------------------------------------------

/// Shortest round-trip decimal form, so emitted files are deterministic and
/// re-import losslessly.
inline std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view sv) {
  double v = 0.0;
  const auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v);
  if (res.ec != std::errc{})
    throw std::runtime_error("parse_double: bad number '" + std::string(sv) + "'");
  return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const std::size_t c = line.find(',', pos);
    if (c == std::string_view::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, c - pos));
    pos = c + 1;
  }
  return out;
}

inline GaitKind gait_from_name(std::string_view n) {
  if (n == "running") return GaitKind::Running;
  if (n == "walking") return GaitKind::Walking;
  if (n == "grounded_running") return GaitKind::GroundedRunning;
  throw std::runtime_error("unknown gait '" + std::string(n) + "'");
}

// --- parameter / config hashing ----------------------------------------------

inline uint64_t fnv1a(std::string_view s, uint64_t h = 1469598103934665603ull) {
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string params_hash(const ModelParams& p, const GridSpec& g,
                               double E, GaitKind gait, double delta_alpha,
                               double angle_res) {
  std::ostringstream os;
  os << fmt_double(p.m) << '|' << fmt_double(p.k) << '|' << fmt_double(p.r0)
     << '|' << fmt_double(p.g) << '|' << fmt_double(g.r_lo) << '|'
     << fmt_double(g.r_hi) << '|' << g.nr << '|' << fmt_double(g.vy_lo) << '|'
     << fmt_double(g.vy_hi) << '|' << g.nvy << '|' << fmt_double(E) << '|'
     << gait_name(gait) << '|' << fmt_double(delta_alpha) << '|'
     << fmt_double(angle_res);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(os.str())));
  return buf;
}

// --- region grid -------------------------------------------------------------

/// CSV columns: r, vy, member, interval_len_rad (row-major, r outer).
inline void write_region_csv(const RegionGrid& g, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "r,vy,member,interval_len_rad\n";
  for (int ir = 0; ir < g.grid.nr; ++ir)
    for (int ivy = 0; ivy < g.grid.nvy; ++ivy) {
      const std::size_t ci = g.grid.index(ir, ivy);
      f << fmt_double(g.grid.r_at(ir)) << ',' << fmt_double(g.grid.vy_at(ivy))
        << ',' << int(g.member[ci]) << ','
        << fmt_double(static_cast<double>(g.interval_len[ci])) << '\n';
    }
}

inline json region_envelope(const RegionGrid& g, const ModelParams& p,
                            double angle_res, const std::string& csv_name) {
  return json{{"energy_J", g.energy},
              {"gait", gait_name(g.gait)},
              {"delta_alpha_deg", g.delta_alpha * 180.0 / M_PI},
              {"grid",
               {{"r_lo", g.grid.r_lo},
                {"r_hi", g.grid.r_hi},
                {"nr", g.grid.nr},
                {"vy_lo", g.grid.vy_lo},
                {"vy_hi", g.grid.vy_hi},
                {"nvy", g.grid.nvy}}},
              {"angle_resolution_deg", angle_res * 180.0 / M_PI},
              {"params",
               {{"m", p.m}, {"k", p.k}, {"r0", p.r0}, {"g", p.g}}},
              {"params_hash",
               params_hash(p, g.grid, g.energy, g.gait, g.delta_alpha, angle_res)},
              {"csv", csv_name}};
}

inline RegionGrid read_region_csv(const std::filesystem::path& csv,
                                  const json& envelope) {
  RegionGrid g;
  g.energy = envelope.at("energy_J").get<double>();
  g.gait = gait_from_name(envelope.at("gait").get<std::string>());
  g.delta_alpha = envelope.at("delta_alpha_deg").get<double>() * M_PI / 180.0;
  const json& gs = envelope.at("grid");
  g.grid = {gs.at("r_lo"), gs.at("r_hi"), gs.at("nr"),
            gs.at("vy_lo"), gs.at("vy_hi"), gs.at("nvy")};
  g.member.assign(g.grid.size(), 0);
  g.interval_len.assign(g.grid.size(), 0.0f);

  std::ifstream f(csv);
  if (!f) throw std::runtime_error("cannot read " + csv.string());
  std::string line;
  std::getline(f, line);  // header
  std::size_t ci = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cols = split_csv_line(line);
    if (cols.size() != 4 || ci >= g.grid.size())
      throw std::runtime_error("malformed region csv " + csv.string());
    g.member[ci] = static_cast<uint8_t>(parse_double(cols[2]) != 0.0);
    g.interval_len[ci] = static_cast<float>(parse_double(cols[3]));
    ++ci;
  }
  if (ci != g.grid.size())
    throw std::runtime_error("region csv truncated: " + csv.string());
  return g;
}

// --- trajectory ----------------------------------------------------------------

inline void write_trajectory_csv(const Trajectory& t,
                                 const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "time,x,y,vx,vy,phase,grf_leg1_norm,grf_leg2_norm,contact1,contact2\n";
  for (const auto& s : t.samples) {
    f << fmt_double(s.t) << ',' << fmt_double(s.x) << ',' << fmt_double(s.y)
      << ',' << fmt_double(s.vx) << ',' << fmt_double(s.vy) << ','
      << phase_name(s.phase) << ',' << fmt_double(s.grf[0]) << ','
      << fmt_double(s.grf[1]) << ',' << int(s.contact[0]) << ','
      << int(s.contact[1]) << '\n';
  }
}

inline Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  Trajectory t;
  std::string line;
  std::getline(f, line);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 10) throw std::runtime_error("malformed trajectory csv");
    TrajectorySample s;
    s.t = parse_double(c[0]);
    s.x = parse_double(c[1]);
    s.y = parse_double(c[2]);
    s.vx = parse_double(c[3]);
    s.vy = parse_double(c[4]);
    s.phase = c[5] == "flight" ? Phase::Flight
              : c[5] == "single_stance" ? Phase::SingleStance
                                        : Phase::DoubleStance;
    s.grf[0] = parse_double(c[6]);
    s.grf[1] = parse_double(c[7]);
    s.contact[0] = static_cast<uint8_t>(parse_double(c[8]) != 0.0);
    s.contact[1] = static_cast<uint8_t>(parse_double(c[9]) != 0.0);
    t.samples.push_back(s);
  }
  return t;
}

// --- step plans ----------------------------------------------------------------

inline json plan_to_json(const StepPlan& plan) {
  json steps = json::array();
  for (const auto& s : plan.steps) {
    steps.push_back({{"gait", gait_name(s.gait)},
                     {"alpha_deg", s.alpha * 180.0 / M_PI},
                     {"role", role_name(s.role)},
                     {"region", static_cast<int>(s.region)},
                     {"predicted", {{"r", s.predicted.r},
                                    {"vy", s.predicted.vy},
                                    {"E", s.predicted.E}}}});
  }
  return json{{"energy_J", plan.energy},
              {"from", gait_name(plan.from)},
              {"to", gait_name(plan.to)},
              {"strategy", strategy_name(plan.strategy.kind)},
              {"fit_target_rel_change", plan.strategy.target_rel_change},
              {"delta_alpha_deg", plan.delta_alpha * 180.0 / M_PI},
              {"start", {{"r", plan.start.r}, {"vy", plan.start.vy}, {"E", plan.start.E}}},
              {"start_alpha_deg", plan.start_alpha * 180.0 / M_PI},
              {"end_alpha_deg", plan.end_alpha * 180.0 / M_PI},
              {"context_steps", plan.context_steps},
              {"objective", plan.objective},
              {"tie_break", plan.tie_break},
              {"steps", steps}};
}

inline StepPlan plan_from_json(const json& j) {
  StepPlan plan;
  plan.energy = j.at("energy_J");
  plan.from = gait_from_name(j.at("from").get<std::string>());
  plan.to = gait_from_name(j.at("to").get<std::string>());
  const std::string sk = j.at("strategy");
  plan.strategy.kind = sk == "constant_froude" ? StrategyKind::ConstantFroude
                       : sk == "constant_hip_excursion"
                           ? StrategyKind::ConstantHipExcursion
                           : StrategyKind::FitHipExcursion;
  plan.strategy.target_rel_change = j.value("fit_target_rel_change", 0.0);
  plan.delta_alpha = j.at("delta_alpha_deg").get<double>() * M_PI / 180.0;
  plan.start = {j.at("start").at("r"), j.at("start").at("vy"), j.at("start").at("E")};
  plan.start_alpha = j.at("start_alpha_deg").get<double>() * M_PI / 180.0;
  plan.end_alpha = j.at("end_alpha_deg").get<double>() * M_PI / 180.0;
  plan.context_steps = j.value("context_steps", 3);
  plan.objective = j.value("objective", 0.0);
  plan.tie_break = j.value("tie_break", "");
  for (const json& s : j.at("steps")) {
    PlanStep ps;
    ps.gait = gait_from_name(s.at("gait").get<std::string>());
    ps.alpha = s.at("alpha_deg").get<double>() * M_PI / 180.0;
    const std::string rn = s.at("role");
    ps.role = rn == "start" ? PlanRole::Start
              : rn == "robust" ? PlanRole::Robust
              : rn == "transition" ? PlanRole::Transition
              : rn == "viable" ? PlanRole::Viable
                               : PlanRole::Target;
    ps.region = static_cast<RegionRef>(s.value("region", 0));
    ps.predicted = {s.at("predicted").at("r"), s.at("predicted").at("vy"),
                    s.at("predicted").at("E")};
    plan.steps.push_back(ps);
  }
  return plan;
}

// --- phase analysis -------------------------------------------------------------

inline json phase_analysis_to_json(const PhaseAnalysis& a) {
  json j{{"sample_rate_hz", a.sample_rate},
         {"status", a.transition_found ? "ok" : "no transition detected"},
         {"phase_rad", a.phase},
         {"frequency_rad_s", a.frequency}};
  if (a.transition_found) {
    j["transition_index"] = a.transition_index;
    j["transition_time_s"] = a.transition_index / a.sample_rate;
  }
  if (a.delta_phi) {
    j["delta_phi_rad"] = *a.delta_phi;
    j["delta_phi_deg"] = *a.delta_phi * 180.0 / M_PI;
  }
  if (!a.note.empty()) j["note"] = a.note;
  return j;
}

// --- time series ------------------------------------------------------------------

/// Two-column CSV (time, value).  Header comment lines declare metadata:
///   # units: m
///   # sample_rate_hz: 200
/// The sample rate is validated against (or inferred from) the time column.
inline TimeSeries read_series_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  TimeSeries ts;
  std::string line;
  std::vector<double> times;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        std::string key = line.substr(1, colon - 1);
        std::string val = line.substr(colon + 1);
        const auto trim = [](std::string& s) {
          s.erase(0, s.find_first_not_of(" \t"));
          s.erase(s.find_last_not_of(" \t\r") + 1);
        };
        trim(key);
        trim(val);
        if (key == "units") ts.units = val;
        if (key == "sample_rate_hz") ts.sample_rate = parse_double(val);
      }
      continue;
    }
    if (line.rfind("time", 0) == 0) continue;  // column header
    const auto c = split_csv_line(line);
    if (c.size() < 2) continue;
    times.push_back(parse_double(c[0]));
    ts.values.push_back(parse_double(c[1]));
  }
  if (ts.values.size() >= 2) {
    const double dt = (times.back() - times.front()) / (times.size() - 1);
    if (ts.sample_rate <= 0.0) ts.sample_rate = 1.0 / dt;
    for (std::size_t i = 1; i < times.size(); ++i) {
      if (std::abs(times[i] - times[i - 1] - dt) > 1e-6 * std::max(1.0, dt))
        throw std::runtime_error("series is not uniformly sampled");
    }
  }
  return ts;
}

inline void write_series_csv(const TimeSeries& ts,
                             const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "# units: " << ts.units << "\n# sample_rate_hz: "
    << fmt_double(ts.sample_rate) << "\ntime,value\n";
  for (std::size_t i = 0; i < ts.values.size(); ++i)
    f << fmt_double(i / ts.sample_rate) << ',' << fmt_double(ts.values[i]) << '\n';
}

// --- run configuration ---------------------------------------------------------

/// Flat key = value configuration with [section] headers; unknown keys are
/// rejected so typos do not silently fall back to defaults.
struct RunConfig {
  ModelParams params{};
  double energy_start = 780.0, energy_stop = 900.0, energy_step = 10.0;
  std::vector<double> delta_alpha_deg = {0.5, 1.0, 2.0};
  int grid_nr = 201, grid_nvy = 201;
  double angle_resolution_deg = 0.05;
  std::string out_dir = "out";
  unsigned threads = 0;
  uint64_t seed = 0;

  std::vector<double> energies() const {
    std::vector<double> es;
    for (double e = energy_start; e <= energy_stop + 1e-9; e += energy_step)
      es.push_back(e);
    return es;
  }
};

inline RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config " + path.string());
  RunConfig cfg;
  std::string line;
  while (std::getline(f, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (line.empty() || line[0] == '[' || eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "m") cfg.params.m = parse_double(val);
    else if (key == "k") cfg.params.k = parse_double(val);
    else if (key == "r0") cfg.params.r0 = parse_double(val);
    else if (key == "g") cfg.params.g = parse_double(val);
    else if (key == "energy_start") cfg.energy_start = parse_double(val);
    else if (key == "energy_stop") cfg.energy_stop = parse_double(val);
    else if (key == "energy_step") cfg.energy_step = parse_double(val);
    else if (key == "delta_alpha_deg") {
      cfg.delta_alpha_deg.clear();
      for (const auto part : split_csv_line(val))
        cfg.delta_alpha_deg.push_back(parse_double(part));
    } else if (key == "grid_nr") cfg.grid_nr = static_cast<int>(parse_double(val));
    else if (key == "grid_nvy") cfg.grid_nvy = static_cast<int>(parse_double(val));
    else if (key == "angle_resolution_deg") cfg.angle_resolution_deg = parse_double(val);
    else if (key == "out_dir") cfg.out_dir = val;
    else if (key == "threads") cfg.threads = static_cast<unsigned>(parse_double(val));
    else if (key == "seed") cfg.seed = static_cast<uint64_t>(parse_double(val));
    else throw std::runtime_error("unknown config key '" + key + "'");
  }
  if (!(cfg.energy_step > 0.0))
    throw std::runtime_error("config: energy_step must be positive");
  for (const double da : cfg.delta_alpha_deg)
    if (!(da > 0.0)) throw std::runtime_error("config: delta_alpha must be positive");
  cfg.params.validate();
  return cfg;
}

// --- result store -----------------------------------------------------------------

/// Content-addressed cache of region grids: a hit returns a grid bit-identical
/// to recomputation under the same configuration.
class ResultStore {
 public:
  explicit ResultStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::optional<RegionGrid> load(const std::string& hash) const {
    const auto base = dir_ / hash;
    const auto jpath = base.string() + ".json";
    const auto cpath = base.string() + ".csv";
    if (!std::filesystem::exists(jpath) || !std::filesystem::exists(cpath))
      return std::nullopt;
    std::ifstream f(jpath);
    json env = json::parse(f);
    return read_region_csv(cpath, env);
  }

  void store(const std::string& hash, const RegionGrid& g, const ModelParams& p,
             double angle_res) const {
    const auto base = dir_ / hash;
    write_region_csv(g, base.string() + ".csv");
    std::ofstream f(base.string() + ".json");
    f << region_envelope(g, p, angle_res, hash + ".csv").dump(2) << '\n';
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace slipgait
