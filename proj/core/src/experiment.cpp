#include "routemix/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "routemix/analysis.hpp"
#include "routemix/error.hpp"
#include "routemix/fitting.hpp"
#include "routemix/log.hpp"
#include "routemix/routing.hpp"
#include "routemix/table_io.hpp"

namespace routemix::experiment {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t bits(double x) { return std::bit_cast<std::uint64_t>(x); }

/// Serializes calls into a provider shared by worker threads.
class LockedProvider final : public NavigationProvider {
 public:
  explicit LockedProvider(NavigationProvider& inner) : inner_(inner) {}
  std::string name() const override { return inner_.name(); }
  std::vector<std::string> route(const RoadNetwork& net, network::EdgeIndex o, network::EdgeIndex d) override {
    std::lock_guard lock(mu_);
    return inner_.route(net, o, d);
  }

 private:
  NavigationProvider& inner_;
  std::mutex mu_;
};

/// Runs job(k) for k in [0, n) on a small pool.
template <class Job>
void parallel_for(std::size_t n, unsigned threads, Job job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t k = 0; k < n; ++k) job(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < n; k = next++) job(k);
    });
}

std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

void stats_of(const std::vector<double>& v, double& mean, double& std) {
  std::vector<double> finite;
  for (double x : v)
    if (std::isfinite(x)) finite.push_back(x);
  mean = finite.empty() ? kNaN : analysis::mean(finite);
  std = finite.empty() ? kNaN : analysis::sample_std(finite);
}

}  // namespace

void SweepConfig::validate() const {
  std::vector<std::string> issues;
  if (n_vehicles == 0) issues.push_back("sweep: n_vehicles must be > 0");
  if (repetitions < 1) issues.push_back("sweep: repetitions must be >= 1");
  if (i_values.empty()) issues.push_back("sweep: i_values is empty");
  for (int i : i_values)
    if (i < 0 || i > 10) issues.push_back("sweep: i value " + std::to_string(i) + " outside 0..10");
  if (std::set<int>(i_values.begin(), i_values.end()).size() != i_values.size())
    issues.push_back("sweep: i_values has duplicates");
  for (double x : effective_w_values())
    if (!(x >= 1.0)) issues.push_back("sweep: w must be >= 1");
  try {
    sim.validate();
  } catch (const ValidationError& e) {
    issues.insert(issues.end(), e.issues().begin(), e.issues().end());
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

std::size_t SweepResult::failures() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.ok; }));
}

std::uint64_t cell_seed(std::uint64_t master, int i, int rep) {
  return derive_seed(master, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(rep)});
}

SweepRow run_cell(const SweepConfig& cfg, double w, int i, int rep, const RoadNetwork& net,
                  const demand::ODMatrix& od, const demand::TileEdgeIndex& tiles, NavigationProvider& provider,
                  const emissions::EmissionCoefficients& coef) {
  SweepRow row;
  row.provider = cfg.provider;
  row.w = w;
  row.i = i;
  row.rep = rep;
  row.alpha = row.lambda = kNaN;
  const std::uint64_t base =
      cfg.common_random_numbers ? derive_seed(cfg.seed, {hash_string("rep"), static_cast<std::uint64_t>(rep)})
                                : cell_seed(cfg.seed, i, rep);
  row.seed = base;
  try {
    const std::uint64_t fixed = derive_seed(cfg.seed, {hash_string("fixed-demand")});
    Rng demand_rng(derive_seed(cfg.fix_demand ? fixed : base, {hash_string("demand")}));
    const auto trips = demand::sample_demand(od, net, tiles.grid(), cfg.n_vehicles, demand_rng);
    const auto routed = routing::route_demand(trips, i, provider, w, derive_seed(base, {hash_string("routing")}), net);

    Rng depart_rng(derive_seed(cfg.fix_demand && !cfg.redraw_departures ? fixed : base, {hash_string("departures")}));
    const auto sched = sim::assign_departures(routed, cfg.sim.horizon, depart_rng);
    const double last = sched.times.empty() ? 0.0 : *std::max_element(sched.times.begin(), sched.times.end());
    const auto extra = sim::build_extra_vehicles(cfg.extra, cfg.n_vehicles, last, net, tiles, w,
                                                 derive_seed(base, {hash_string("extra")}), cfg.sim.dt);

    auto sim_cfg = cfg.sim;
    sim_cfg.seed = derive_seed(base, {hash_string("sim")});
    sim_cfg.record_trajectories = false;
    emissions::EmissionAccumulator acc(net, coef, sim_cfg.dt);
    const auto result = sim::simulate(net, routed, sched, sim_cfg, extra, [&](const sim::TrajectoryPoint& p) { acc.add(p); });
    const auto weighted = acc.finish();

    row.total_co2_mg = emissions::total_emissions(weighted);
    const auto masses = emissions::edge_masses(weighted, cfg.include_zero_edges);
    row.gini = analysis::gini(masses);
    try {
      const auto fit = analysis::fit_truncated_powerlaw(masses, analysis::default_xmin(masses));
      row.alpha = fit.alpha;
      row.lambda = fit.lambda;
    } catch (const Error& e) {
      warn("cell w=" + io::format_double(w) + " i=" + std::to_string(i) + " rep=" + std::to_string(rep) +
           ": no truncated power-law fit: " + e.what());
    }
    row.mean_travel_time = result.stats.mean_travel_time;
    row.teleports = result.stats.teleports;
    row.arrived = result.stats.arrived;
    row.ok = true;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

SweepResult run_sweep(const SweepConfig& cfg, const RoadNetwork& net, const demand::ODMatrix& od,
                      const demand::TileGrid& grid, NavigationProvider& provider,
                      const emissions::EmissionCoefficients& coef, const RunOptions& opts) {
  cfg.validate();
  coef.validate();
  const demand::TileEdgeIndex tiles(net, grid);
  LockedProvider locked(provider);

  struct Cell {
    double w;
    int i, rep;
  };
  std::vector<Cell> cells;
  for (double w : cfg.effective_w_values())
    for (int i : cfg.i_values)
      for (int rep = 0; rep < cfg.repetitions; ++rep) cells.push_back({w, i, rep});

  std::ofstream journal;
  if (opts.journal) {
    if (opts.journal->has_parent_path()) std::filesystem::create_directories(opts.journal->parent_path());
    journal.open(*opts.journal, std::ios::trunc);
    if (!journal) throw Error("cannot open journal " + opts.journal->string());
    write_sweep_header(journal);
    journal.flush();
  }

  SweepResult out;
  out.rows.resize(cells.size());
  std::mutex writer;
  parallel_for(cells.size(), opts.threads, [&](std::size_t k) {
    const auto& c = cells[k];
    auto row = run_cell(cfg, c.w, c.i, c.rep, net, od, tiles, locked, coef);
    std::lock_guard lock(writer);
    if (!row.ok)
      warn("cell w=" + io::format_double(c.w) + " i=" + std::to_string(c.i) + " rep=" + std::to_string(c.rep) +
           " failed: " + row.error);
    if (journal.is_open()) {
      write_sweep_row(journal, row);
      journal.flush();
    }
    if (opts.on_row) opts.on_row(row);
    out.rows[k] = std::move(row);
  });
  return out;
}

std::vector<SummaryRow> summarize(const SweepResult& result) {
  std::vector<SummaryRow> out;
  std::vector<std::pair<double, int>> keys;
  for (const auto& r : result.rows) keys.emplace_back(r.w, r.i);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  for (const auto& [w, i] : keys) {
    SummaryRow s;
    s.w = w;
    s.i = i;
    std::vector<double> co2, gini, alpha, tt, tel;
    for (const auto& r : result.rows) {
      if (r.w != w || r.i != i) continue;
      s.provider = r.provider;
      if (!r.ok) continue;
      ++s.runs;
      co2.push_back(r.total_co2_mg);
      gini.push_back(r.gini);
      alpha.push_back(r.alpha);
      tt.push_back(r.mean_travel_time);
      tel.push_back(static_cast<double>(r.teleports));
    }
    stats_of(co2, s.total_co2_mean, s.total_co2_std);
    stats_of(gini, s.gini_mean, s.gini_std);
    stats_of(alpha, s.alpha_mean, s.alpha_std);
    stats_of(tt, s.travel_time_mean, s.travel_time_std);
    stats_of(tel, s.teleports_mean, s.teleports_std);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Calibration

void CalibrationGrid::validate() const {
  std::vector<std::string> issues;
  if (n_values.empty() || w_values.empty() || extras.empty()) issues.push_back("calibration: empty grid");
  for (auto n : n_values)
    if (n == 0) issues.push_back("calibration: N must be > 0");
  if (runs < 1) issues.push_back("calibration: runs must be >= 1");
  try {
    sim.validate();
  } catch (const ValidationError& e) {
    issues.insert(issues.end(), e.issues().begin(), e.issues().end());
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

void rank_calibration(std::vector<CalibrationRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const CalibrationRow& a, const CalibrationRow& b) {
    if (a.failed != b.failed) return !a.failed;
    if (a.failed) return false;
    if (a.js != b.js) return a.js < b.js;
    if (a.abs_dtt != b.abs_dtt) return a.abs_dtt < b.abs_dtt;
    return a.teleports < b.teleports;
  });
}

std::vector<CalibrationRow> run_calibration(const CalibrationGrid& grid, const RoadNetwork& net,
                                            const demand::ODMatrix& od, const demand::TileGrid& tile_grid,
                                            std::span<const double> real_times, const RunOptions& opts) {
  grid.validate();
  if (real_times.empty()) throw ValidationError({"calibration: no real travel times"});
  const demand::TileEdgeIndex tiles(net, tile_grid);

  std::vector<CalibrationRow> rows;
  for (auto n : grid.n_values)
    for (double w : grid.w_values)
      for (const auto& x : grid.extras) {
        CalibrationRow r;
        r.n = n;
        r.w = w;
        r.extra = x;
        rows.push_back(r);
      }

  struct Outcome {
    bool ok = false;
    double js = 0.0, dtt = 0.0, teleports = 0.0;
    std::string error;
  };
  const std::size_t runs = static_cast<std::size_t>(grid.runs);
  std::vector<Outcome> outcomes(rows.size() * runs);
  std::mutex writer;

  parallel_for(outcomes.size(), opts.threads, [&](std::size_t k) {
    const auto& cell = rows[k / runs];
    const auto run = static_cast<std::uint64_t>(k % runs);
    Outcome o;
    try {
      const std::uint64_t base = derive_seed(grid.seed, {hash_string("calibration"), cell.n, bits(cell.w),
                                                         static_cast<std::uint64_t>(cell.extra.start_pct),
                                                         static_cast<std::uint64_t>(cell.extra.end_pct), run});
      Rng demand_rng(derive_seed(base, {hash_string("demand")}));
      const auto trips = demand::sample_demand(od, net, tile_grid, cell.n, demand_rng);
      routing::FastestProvider unused(net);
      const auto routed = routing::route_demand(trips, 0, unused, cell.w, derive_seed(base, {hash_string("routing")}), net);
      Rng depart_rng(derive_seed(base, {hash_string("departures")}));
      const auto sched = sim::assign_departures(routed, grid.sim.horizon, depart_rng);
      const double last = *std::max_element(sched.times.begin(), sched.times.end());
      const auto extra = sim::build_extra_vehicles(cell.extra, cell.n, last, net, tiles, cell.w,
                                                   derive_seed(base, {hash_string("extra")}), grid.sim.dt);
      auto sim_cfg = grid.sim;
      sim_cfg.seed = derive_seed(base, {hash_string("sim")});
      sim_cfg.record_trajectories = false;
      const auto result = sim::simulate(net, routed, sched, sim_cfg, extra);
      const auto times = sim::arrived_travel_times(result.log);
      const auto cmp = analysis::travel_time_comparison(times, real_times);
      o.ok = true;
      o.js = cmp.js;
      o.dtt = cmp.abs_mean_diff;
      o.teleports = static_cast<double>(result.stats.teleports);
    } catch (const std::exception& e) {
      o.error = e.what();
      std::lock_guard lock(writer);
      warn("calibration N=" + std::to_string(cell.n) + " w=" + io::format_double(cell.w) + " c=" +
           cell.extra.label() + " run " + std::to_string(run) + " failed: " + o.error);
    }
    outcomes[k] = std::move(o);
  });

  for (std::size_t c = 0; c < rows.size(); ++c) {
    auto& r = rows[c];
    double js = 0.0, dtt = 0.0, tel = 0.0;
    for (std::size_t run = 0; run < runs; ++run) {
      const auto& o = outcomes[c * runs + run];
      if (!o.ok) {
        ++r.runs_failed;
        r.error = o.error;
        continue;
      }
      ++r.runs_ok;
      js += o.js;
      dtt += o.dtt;
      tel += o.teleports;
    }
    r.failed = r.runs_ok == 0;
    if (!r.failed) {
      r.js = js / r.runs_ok;
      r.abs_dtt = dtt / r.runs_ok;
      r.teleports = tel / r.runs_ok;
    } else {
      r.js = r.abs_dtt = r.teleports = kNaN;
    }
  }
  rank_calibration(rows);
  return rows;
}

// ---------------------------------------------------------------------------
// Config

namespace {

using json = nlohmann::json;

void reject_unknown(const json& section, std::string_view name, std::initializer_list<std::string_view> known) {
  if (!section.is_object()) throw ParseError(std::string(name), "expected a table");
  for (const auto& [key, _] : section.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ParseError(std::string(name), "unknown key '" + key + "'");
}

template <class T>
T get(const json& section, std::string_view section_name, const char* key) {
  try {
    return section.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string(section_name) + "." + key, e.what());
  }
}

std::uint64_t get_seed(const json& section, std::string_view name) {
  const auto& v = section.at("seed");
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  throw ParseError(std::string(name) + ".seed", "expected a nonnegative integer");
}

}  // namespace

sim::SimConfig sim_config_from_json(const json& s, sim::SimConfig c) {
  reject_unknown(s, "sim", {"dt", "horizon", "max_time", "accel", "decel", "tau", "sigma", "vehicle_length", "min_gap",
                            "teleport_threshold", "green", "red", "seed"});
  auto opt = [&](const char* key, double& slot) {
    if (s.contains(key)) slot = get<double>(s, "sim", key);
  };
  opt("dt", c.dt);
  opt("horizon", c.horizon);
  opt("max_time", c.max_time);
  opt("accel", c.accel);
  opt("decel", c.decel);
  opt("tau", c.tau);
  opt("sigma", c.sigma);
  opt("vehicle_length", c.vehicle_length);
  opt("min_gap", c.min_gap);
  opt("teleport_threshold", c.teleport_threshold);
  opt("green", c.green);
  opt("red", c.red);
  if (s.contains("seed")) c.seed = get_seed(s, "sim");
  c.validate();
  return c;
}

SweepConfig sweep_config_from_json(const json& doc) {
  SweepConfig c;
  if (doc.contains("sim")) c.sim = sim_config_from_json(doc.at("sim"));
  if (!doc.contains("sweep")) return c;
  const auto& s = doc.at("sweep");
  reject_unknown(s, "sweep", {"provider", "n_vehicles", "w", "i_values", "repetitions", "seed", "extra", "coefficients",
                              "fix_demand", "redraw_departures", "common_random_numbers", "include_zero_edges",
                              "w_values"});
  if (s.contains("provider")) c.provider = get<std::string>(s, "sweep", "provider");
  if (s.contains("n_vehicles")) c.n_vehicles = get<std::size_t>(s, "sweep", "n_vehicles");
  if (s.contains("w")) c.w = get<double>(s, "sweep", "w");
  if (s.contains("i_values")) c.i_values = get<std::vector<int>>(s, "sweep", "i_values");
  if (s.contains("repetitions")) c.repetitions = get<int>(s, "sweep", "repetitions");
  if (s.contains("seed")) c.seed = get_seed(s, "sweep");
  if (s.contains("extra")) c.extra = sim::ExtraVehiclesConfig::parse(get<std::string>(s, "sweep", "extra"));
  if (s.contains("coefficients")) c.coefficients = get<std::string>(s, "sweep", "coefficients");
  if (s.contains("fix_demand")) c.fix_demand = get<bool>(s, "sweep", "fix_demand");
  if (s.contains("redraw_departures")) c.redraw_departures = get<bool>(s, "sweep", "redraw_departures");
  if (s.contains("common_random_numbers")) c.common_random_numbers = get<bool>(s, "sweep", "common_random_numbers");
  if (s.contains("include_zero_edges")) c.include_zero_edges = get<bool>(s, "sweep", "include_zero_edges");
  if (s.contains("w_values")) c.w_values = get<std::vector<double>>(s, "sweep", "w_values");
  c.validate();
  return c;
}

CalibrationGrid calibration_grid_from_json(const json& doc) {
  CalibrationGrid g;
  if (doc.contains("sim")) g.sim = sim_config_from_json(doc.at("sim"));
  if (!doc.contains("calibration")) return g;
  const auto& s = doc.at("calibration");
  reject_unknown(s, "calibration", {"n_values", "w_values", "extras", "runs", "seed"});
  if (s.contains("n_values")) g.n_values = get<std::vector<std::size_t>>(s, "calibration", "n_values");
  if (s.contains("w_values")) g.w_values = get<std::vector<double>>(s, "calibration", "w_values");
  if (s.contains("extras")) {
    g.extras.clear();
    for (const auto& label : get<std::vector<std::string>>(s, "calibration", "extras"))
      g.extras.push_back(sim::ExtraVehiclesConfig::parse(label));
  }
  if (s.contains("runs")) g.runs = get<int>(s, "calibration", "runs");
  if (s.contains("seed")) g.seed = get_seed(s, "calibration");
  g.validate();
  return g;
}

nlohmann::ordered_json to_json(const sim::SimConfig& c) {
  return {{"dt", c.dt},       {"horizon", c.horizon},       {"max_time", c.max_time},
          {"accel", c.accel}, {"decel", c.decel},           {"tau", c.tau},
          {"sigma", c.sigma}, {"vehicle_length", c.vehicle_length}, {"min_gap", c.min_gap},
          {"teleport_threshold", c.teleport_threshold},     {"green", c.green},
          {"red", c.red}};
}

nlohmann::ordered_json to_json(const SweepConfig& c) {
  nlohmann::ordered_json s;
  s["provider"] = c.provider;
  s["n_vehicles"] = c.n_vehicles;
  s["w"] = c.w;
  s["i_values"] = c.i_values;
  s["repetitions"] = c.repetitions;
  s["seed"] = c.seed;
  s["extra"] = c.extra.label();
  s["coefficients"] = c.coefficients.string();
  s["fix_demand"] = c.fix_demand;
  s["redraw_departures"] = c.redraw_departures;
  s["common_random_numbers"] = c.common_random_numbers;
  s["include_zero_edges"] = c.include_zero_edges;
  s["w_values"] = c.w_values;
  return {{"sweep", s}, {"sim", to_json(c.sim)}};
}

nlohmann::ordered_json to_json(const CalibrationGrid& g) {
  nlohmann::ordered_json s;
  s["n_values"] = g.n_values;
  s["w_values"] = g.w_values;
  std::vector<std::string> extras;
  for (const auto& x : g.extras) extras.push_back(x.label());
  s["extras"] = extras;
  s["runs"] = g.runs;
  s["seed"] = g.seed;
  return {{"calibration", s}, {"sim", to_json(g.sim)}};
}

// ---------------------------------------------------------------------------
// Tables

namespace {
const std::vector<std::string> kSweepHeader{"provider", "w", "i", "rep", "seed", "status", "total_co2_mg", "gini",
                                            "alpha", "lambda", "mean_travel_time_s", "teleports", "arrived", "error"};
}

void write_sweep_header(std::ostream& os) { io::write_csv_row(os, kSweepHeader); }

void write_sweep_row(std::ostream& os, const SweepRow& r) {
  using io::format_double;
  io::write_csv_row(os, {csv_safe(r.provider), format_double(r.w), std::to_string(r.i), std::to_string(r.rep),
                         std::to_string(r.seed), r.ok ? "ok" : "failed", format_double(r.total_co2_mg),
                         format_double(r.gini), format_double(r.alpha), format_double(r.lambda),
                         format_double(r.mean_travel_time), std::to_string(r.teleports), std::to_string(r.arrived),
                         csv_safe(r.error)});
}

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result) {
  auto rows = result.rows;
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.w, a.i, a.rep) < std::tie(b.w, b.i, b.rep);
  });
  std::ostringstream os;
  write_sweep_header(os);
  for (const auto& r : rows) write_sweep_row(os, r);
  io::write_text(path, os.str());
}

SweepResult read_sweep_csv(const std::filesystem::path& path) {
  const auto table = io::read_csv(path, kSweepHeader);
  SweepResult out;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const auto& c = table.rows[k];
    const std::string where = path.string() + ":" + std::to_string(table.lines[k]);
    SweepRow r;
    r.provider = c[0];
    r.w = io::parse_double(c[1], where);
    r.i = static_cast<int>(io::parse_int(c[2], where));
    r.rep = static_cast<int>(io::parse_int(c[3], where));
    try {
      r.seed = std::stoull(c[4]);
    } catch (const std::exception&) {
      throw ParseError(where, "bad seed '" + c[4] + "'");
    }
    if (c[5] != "ok" && c[5] != "failed") throw ParseError(where, "status must be ok or failed");
    r.ok = c[5] == "ok";
    r.total_co2_mg = io::parse_double(c[6], where);
    r.gini = io::parse_double(c[7], where);
    r.alpha = io::parse_double(c[8], where);
    r.lambda = io::parse_double(c[9], where);
    r.mean_travel_time = io::parse_double(c[10], where);
    r.teleports = static_cast<std::size_t>(io::parse_int(c[11], where));
    r.arrived = static_cast<std::size_t>(io::parse_int(c[12], where));
    r.error = c[13];
    out.rows.push_back(std::move(r));
  }
  return out;
}

void write_summary_csv(const std::filesystem::path& path, std::span<const SummaryRow> rows) {
  using io::format_double;
  std::ostringstream os;
  io::write_csv_row(os, {"provider", "w", "i", "runs", "total_co2_mean", "total_co2_std", "gini_mean", "gini_std",
                         "alpha_mean", "alpha_std", "travel_time_mean", "travel_time_std", "teleports_mean",
                         "teleports_std"});
  for (const auto& s : rows)
    io::write_csv_row(os, {csv_safe(s.provider), format_double(s.w), std::to_string(s.i), std::to_string(s.runs),
                           format_double(s.total_co2_mean), format_double(s.total_co2_std),
                           format_double(s.gini_mean), format_double(s.gini_std), format_double(s.alpha_mean),
                           format_double(s.alpha_std), format_double(s.travel_time_mean),
                           format_double(s.travel_time_std), format_double(s.teleports_mean),
                           format_double(s.teleports_std)});
  io::write_text(path, os.str());
}

void write_calibration_csv(const std::filesystem::path& path, std::span<const CalibrationRow> rows) {
  using io::format_double;
  std::ostringstream os;
  io::write_csv_row(os, {"rank", "n", "w", "extra", "runs_ok", "runs_failed", "js", "abs_dtt_s", "teleports",
                         "status", "error"});
  std::size_t rank = 0;
  for (const auto& r : rows)
    io::write_csv_row(os, {r.failed ? "" : std::to_string(++rank), std::to_string(r.n), format_double(r.w),
                           r.extra.label(), std::to_string(r.runs_ok), std::to_string(r.runs_failed),
                           format_double(r.js), format_double(r.abs_dtt), format_double(r.teleports),
                           r.failed ? "failed" : "ok", csv_safe(r.error)});
  io::write_text(path, os.str());
}

std::string sweep_manifest(const SweepConfig& cfg, const SweepResult& result,
                           const emissions::EmissionCoefficients& coef) {
  nlohmann::ordered_json j;
  j["config"] = to_json(cfg);
  j["coefficients"] = {{"label", coef.label}, {"c0", coef.c0}, {"c1", coef.c1}, {"c2", coef.c2},
                       {"c3", coef.c3},       {"c4", coef.c4}, {"c5", coef.c5}};
  auto& cells = j["cells"] = nlohmann::ordered_json::array();
  for (const auto& r : result.rows)
    cells.push_back({{"w", r.w}, {"i", r.i}, {"rep", r.rep}, {"seed", r.seed}, {"status", r.ok ? "ok" : "failed"}});
  j["rows"] = result.rows.size();
  j["failures"] = result.failures();
  return j.dump(1) + "\n";
}

}  // namespace routemix::experiment
