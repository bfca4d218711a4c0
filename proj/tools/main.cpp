#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli_support.hpp"
#include "routemix/analysis.hpp"
#include "routemix/demand.hpp"
#include "routemix/emissions.hpp"
#include "routemix/error.hpp"
#include "routemix/experiment.hpp"
#include "routemix/fitting.hpp"
#include "routemix/network.hpp"
#include "routemix/providers.hpp"
#include "routemix/routing.hpp"
#include "routemix/sim.hpp"
#include "routemix/table_io.hpp"

namespace fs = std::filesystem;
using namespace routemix;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  fs::path config;
  fs::path out = ".";
};

nlohmann::json config_doc(const Globals& g) {
  return g.config.empty() ? nlohmann::json::object() : io::load_config(g.config);
}

sim::SimConfig sim_config(const Globals& g) {
  auto doc = config_doc(g);
  auto c = doc.contains("sim") ? experiment::sim_config_from_json(doc.at("sim")) : sim::SimConfig{};
  return c;
}

std::vector<double> masses_from(const fs::path& emissions_csv, const fs::path& net_path, bool include_zero) {
  const auto net = network::load_network(net_path);
  return emissions::edge_masses(emissions::read_weighted_csv(emissions_csv, net), include_zero);
}

int run_sweep(const Globals& g, const fs::path& net_path, const fs::path& od_path, double tile_side,
              const std::string& provider_spec, const std::string& fallback, const fs::path& coef_path,
              std::optional<bool> fix_demand, unsigned threads) {
  auto doc = config_doc(g);
  auto cfg = experiment::sweep_config_from_json(doc);
  if (!doc.contains("sweep") || !doc.at("sweep").contains("seed")) cfg.seed = g.seed;
  if (fix_demand) cfg.fix_demand = *fix_demand;
  if (!coef_path.empty()) cfg.coefficients = coef_path;
  const auto net = network::load_network(net_path);
  const auto od = demand::read_od(od_path);
  const auto grid = demand::build_grid(net, tile_side);
  auto provider = cli::make_provider(provider_spec, net, fallback);
  if (cfg.provider == "fastest" && provider_spec != "fastest") cfg.provider = provider->name();
  const auto coef = cli::coefficients_or_default(cfg.coefficients);

  experiment::RunOptions opts;
  opts.journal = g.out / "sweep.journal.csv";
  opts.threads = threads;
  opts.on_row = [](const experiment::SweepRow& r) {
    std::cerr << "w=" << r.w << " i=" << r.i << " rep=" << r.rep << (r.ok ? " ok" : " FAILED") << "\n";
  };
  const auto result = experiment::run_sweep(cfg, net, od, grid, *provider, coef, opts);
  experiment::write_sweep_csv(g.out / "sweep.csv", result);
  const auto summary = experiment::summarize(result);
  experiment::write_summary_csv(g.out / "summary.csv", summary);
  io::write_text(g.out / "manifest.json", experiment::sweep_manifest(cfg, result, coef));
  std::cout << "wrote " << result.rows.size() << " rows to " << (g.out / "sweep.csv").string() << " ("
            << result.failures() << " failed)\n";
  return result.failures() ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"routemix: mixed-routing traffic, emissions and analysis toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--config", g.config, "JSON or TOML config file");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.fallthrough();

  int status = 0;

  // net -----------------------------------------------------------------------
  auto* net_cmd = app.add_subcommand("net", "Road network tools");
  net_cmd->require_subcommand(1);
  {
    auto* c = net_cmd->add_subcommand("validate", "Check a network file");
    static fs::path file;
    c->add_option("file", file)->required();
    c->callback([&] {
      const auto net = network::load_network(file);
      const auto scc = network::largest_scc(net);
      std::cout << "nodes " << net.node_count() << "\nedges " << net.edge_count() << "\nlargest_scc_nodes "
                << scc.node_count() << "\nlargest_scc_edges " << scc.edge_count() << "\n";
    });
  }
  {
    auto* c = net_cmd->add_subcommand("synth", "Write a synthetic Manhattan grid");
    static network::GridOptions o;
    static int lights = 0;
    static std::string name = "network.json";
    c->add_option("--rows", o.rows)->capture_default_str();
    c->add_option("--cols", o.cols)->capture_default_str();
    c->add_option("--block", o.block_length, "Block length in m")->capture_default_str();
    c->add_option("--speed", o.speed_limit, "Speed limit in m/s")->capture_default_str();
    c->add_option("--light-period", lights, "Every k-th node gets a light; 0 disables")->capture_default_str();
    c->add_option("--arterial-every", o.arterial_every)->capture_default_str();
    c->add_option("--arterial-speed", o.arterial_speed)->capture_default_str();
    c->add_option("--arterial-lanes", o.arterial_lanes)->capture_default_str();
    c->add_option("--name", name, "Output file name under --out")->capture_default_str();
    c->callback([&] {
      if (lights > 0) o.light_period = lights;
      const auto net = network::synth_grid(o);
      network::save_network(net, g.out / name);
      std::cout << (g.out / name).string() << "\n";
    });
  }

  // demand --------------------------------------------------------------------
  auto* demand_cmd = app.add_subcommand("demand", "Trip records, OD matrices and demand sampling");
  demand_cmd->require_subcommand(1);
  static fs::path net_path;
  static double tile_side = 1000.0;
  {
    auto* c = demand_cmd->add_subcommand("synth-records", "Generate synthetic trip records");
    static demand::GravityConfig gc;
    c->add_option("--net", net_path)->required();
    c->add_option("--tile-side", tile_side)->capture_default_str();
    c->add_option("--records", gc.n_records)->capture_default_str();
    c->add_option("--decay-length", gc.decay_length)->capture_default_str();
    c->add_option("--centre-scale", gc.centre_scale)->capture_default_str();
    c->add_option("--mean-speed", gc.mean_speed)->capture_default_str();
    c->add_option("--horizon", gc.horizon)->capture_default_str();
    c->callback([&] {
      const auto grid = demand::build_grid(network::load_network(net_path), tile_side);
      Rng rng(derive_seed(g.seed, {hash_string("records")}));
      demand::write_trip_records(g.out / "records.csv", demand::synth_records(grid, gc, rng));
      std::cout << (g.out / "records.csv").string() << "\n";
    });
  }
  {
    auto* c = demand_cmd->add_subcommand("build-od", "Count trip records per tile pair");
    static fs::path records;
    c->add_option("--net", net_path)->required();
    c->add_option("--records", records)->required();
    c->add_option("--tile-side", tile_side)->capture_default_str();
    c->callback([&] {
      const auto grid = demand::build_grid(network::load_network(net_path), tile_side);
      const auto est = demand::estimate_od(demand::read_trip_records(records), grid);
      demand::write_od(g.out / "od.csv", est.od);
      std::cout << (g.out / "od.csv").string() << " (" << est.skipped << " records outside the grid)\n";
    });
  }
  {
    auto* c = demand_cmd->add_subcommand("sample", "Sample N edge-to-edge trips from an OD matrix");
    static fs::path od_path;
    static std::size_t n = 1000;
    c->add_option("--net", net_path)->required();
    c->add_option("--od", od_path)->required();
    c->add_option("--tile-side", tile_side)->capture_default_str();
    c->add_option("-n,--vehicles", n)->capture_default_str();
    c->callback([&] {
      const auto net = network::load_network(net_path);
      Rng rng(derive_seed(g.seed, {hash_string("demand")}));
      const auto d = demand::sample_demand(demand::read_od(od_path), net, demand::build_grid(net, tile_side), n, rng);
      demand::write_demand(g.out / "demand.csv", d, net);
      std::cout << (g.out / "demand.csv").string() << "\n";
    });
  }

  // route ---------------------------------------------------------------------
  auto* route_cmd = app.add_subcommand("route", "Path generation");
  route_cmd->require_subcommand(1);
  static std::string provider_spec = "fastest";
  static std::string fallback = "error";
  static double w = 1.0;
  {
    auto* c = route_cmd->add_subcommand("single", "Route one origin-destination edge pair");
    static std::string from, to;
    static bool use_provider = false;
    c->add_option("--net", net_path)->required();
    c->add_option("--from", from)->required();
    c->add_option("--to", to)->required();
    c->add_option("--w", w, "Perturbation; 1 = exact fastest path")->capture_default_str();
    c->add_option("--provider", provider_spec)->capture_default_str();
    c->add_flag("--use-provider", use_provider, "Ask the provider instead of the local router");
    c->add_option("--fallback", fallback)->check(CLI::IsMember({"error", "fastest"}))->capture_default_str();
    c->callback([&] {
      const auto net = network::load_network(net_path);
      const auto o = net.edge_index(from), d = net.edge_index(to);
      routing::RoutedPath p;
      if (use_provider) {
        auto provider = cli::make_provider(provider_spec, net, fallback);
        p = routing::external_route(*provider, net, o, d);
      } else {
        Rng rng(derive_seed(g.seed, {hash_string("single")}));
        p = w == 1.0 ? routing::fastest_path(net, o, d) : routing::perturbed_fastest_path(net, o, d, w, rng);
      }
      nlohmann::json j = nlohmann::json::array();
      for (auto e : p.edges) j.push_back(net.edge(e).id);
      std::cout << j.dump() << "\ncost_s " << routing::path_cost(net, p.edges) << "\n";
    });
  }
  {
    auto* c = route_cmd->add_subcommand("demand", "Route a demand with mixing fraction i");
    static fs::path demand_path;
    static int i = 5;
    c->add_option("--net", net_path)->required();
    c->add_option("--demand", demand_path)->required();
    c->add_option("-i,--mix", i, "Provider share in tenths")->check(CLI::Range(0, 10))->capture_default_str();
    c->add_option("--w", w)->capture_default_str();
    c->add_option("--provider", provider_spec)->capture_default_str();
    c->add_option("--fallback", fallback)->check(CLI::IsMember({"error", "fastest"}))->capture_default_str();
    c->callback([&] {
      const auto net = network::load_network(net_path);
      auto provider = cli::make_provider(provider_spec, net, fallback);
      const auto routed = routing::route_demand(demand::read_demand(demand_path, net), i, *provider, w,
                                                derive_seed(g.seed, {hash_string("routing")}), net);
      routing::save_routed_demand(g.out / "routes.json", routed, net);
      std::cout << (g.out / "routes.json").string() << "\n";
    });
  }
  {
    auto* c = route_cmd->add_subcommand("perturbation-curve", "Mean SSPD to the fastest path versus w");
    static std::size_t pairs = 500;
    static std::string ws = "1,2,5,10,20";
    c->add_option("--net", net_path)->required();
    c->add_option("--pairs", pairs)->capture_default_str();
    c->add_option("--w-values", ws)->capture_default_str();
    c->callback([&] {
      const auto net = network::load_network(net_path);
      Rng rng(derive_seed(g.seed, {hash_string("perturbation")}));
      const auto rows = routing::perturbation_curve(net, pairs, cli::parse_number_list(ws), rng);
      std::ostringstream os;
      io::write_csv_row(os, {"w", "mean_sspd_m", "pairs"});
      for (const auto& r : rows)
        io::write_csv_row(os, {io::format_double(r.w), io::format_double(r.mean_sspd), std::to_string(r.pairs)});
      io::write_text(g.out / "perturbation.csv", os.str());
      std::cout << os.str();
    });
  }

  // simulate ------------------------------------------------------------------
  {
    auto* c = app.add_subcommand("simulate", "Run the traffic simulation");
    static fs::path routes_path, schedule_path;
    static std::string extra_label = "none";
    static bool no_trajectories = false;
    c->add_option("--net", net_path)->required();
    c->add_option("--routes", routes_path)->required();
    c->add_option("--schedule", schedule_path, "Departure CSV; drawn uniformly over the horizon if absent");
    c->add_option("--extra", extra_label, "Background vehicles, e.g. 15_start+45_end")->capture_default_str();
    c->add_option("--w", w, "Perturbation for extra vehicles")->capture_default_str();
    c->add_option("--tile-side", tile_side)->capture_default_str();
    c->add_flag("--no-trajectories", no_trajectories);
    c->callback([&] {
      const auto net = network::load_network(net_path);
      const auto routed = routing::load_routed_demand(routes_path, net);
      auto cfg = sim_config(g);
      cfg.seed = derive_seed(g.seed, {hash_string("sim")});
      cfg.record_trajectories = !no_trajectories;
      sim::DepartureSchedule sched;
      if (!schedule_path.empty()) {
        sched = sim::read_schedule_csv(schedule_path, routed);
      } else {
        Rng rng(derive_seed(g.seed, {hash_string("departures")}));
        sched = sim::assign_departures(routed, cfg.horizon, rng);
      }
      sim::ExtraVehicles extra;
      const auto xc = sim::ExtraVehiclesConfig::parse(extra_label);
      if (xc.start_pct || xc.end_pct) {
        const demand::TileEdgeIndex tiles(net, demand::build_grid(net, tile_side));
        const double last = sched.times.empty() ? 0.0 : *std::max_element(sched.times.begin(), sched.times.end());
        extra = sim::build_extra_vehicles(xc, routed.size(), last, net, tiles, w,
                                          derive_seed(g.seed, {hash_string("extra")}), cfg.dt);
      }
      const auto result = sim::simulate(net, routed, sched, cfg, extra);
      sim::write_schedule_csv(g.out / "schedule.csv", routed, sched);
      if (cfg.record_trajectories) sim::write_trajectory_csv(g.out / "trajectories.csv", result.log, net);
      io::write_text(g.out / "stats.json", sim::stats_to_json(result.stats));
      std::vector<std::string> ids;
      std::vector<double> times;
      const auto tt = sim::travel_times(result.log);
      for (std::size_t v = 0; v < tt.size(); ++v)
        if (tt[v] && !result.log.is_extra[v]) {
          ids.push_back(result.log.vehicle_ids[v]);
          times.push_back(*tt[v]);
        }
      cli::write_travel_times(g.out / "travel_times.csv", ids, times);
      std::cout << sim::stats_to_json(result.stats);
    });
  }

  // emissions -----------------------------------------------------------------
  auto* em_cmd = app.add_subcommand("emissions", "Per-edge CO2");
  em_cmd->require_subcommand(1);
  static fs::path coef_path;
  {
    auto* c = em_cmd->add_subcommand("aggregate", "Sum trajectory emissions per edge");
    static fs::path traj;
    static double dt = 1.0;
    c->add_option("--net", net_path)->required();
    c->add_option("--trajectories", traj)->required();
    c->add_option("--coefficients", coef_path, "JSON or TOML; default passenger car if absent");
    c->add_option("--dt", dt)->capture_default_str();
    c->callback([&] {
      const auto net = network::load_network(net_path);
      const auto g2 = emissions::aggregate(sim::read_trajectory_csv(traj, net), cli::coefficients_or_default(coef_path),
                                           net, dt);
      emissions::write_weighted_csv(g.out / "emissions.csv", g2);
      std::cout << "total_co2_mg " << io::format_double(emissions::total_emissions(g2)) << "\n";
    });
  }
  {
    auto* c = em_cmd->add_subcommand("diff", "Per-meter difference a - b");
    static fs::path a, b;
    c->add_option("--net", net_path)->required();
    c->add_option("--a", a)->required();
    c->add_option("--b", b)->required();
    c->callback([&] {
      const auto net = network::load_network(net_path);
      const auto ga = emissions::read_weighted_csv(a, net), gb = emissions::read_weighted_csv(b, net);
      const auto d = emissions::emission_diff(ga, gb);
      std::ostringstream os;
      io::write_csv_row(os, {"edge_id", "diff_mg_per_m"});
      for (std::size_t e = 0; e < d.size(); ++e) io::write_csv_row(os, {ga.edge_ids()[e], io::format_double(d[e])});
      io::write_text(g.out / "diff.csv", os.str());
      std::cout << (g.out / "diff.csv").string() << "\n";
    });
  }
  {
    auto* c = em_cmd->add_subcommand("export-geojson", "Edge LineStrings with per-meter CO2 or a diff");
    static fs::path a, b;
    c->add_option("--net", net_path)->required();
    c->add_option("--emissions", a)->required();
    c->add_option("--minus", b, "Export emissions - minus as diff_mg_per_m");
    c->callback([&] {
      const auto net = network::load_network(net_path);
      const auto ga = emissions::read_weighted_csv(a, net);
      std::string text;
      if (b.empty()) {
        text = emissions::to_geojson(net, emissions::per_meter(ga), "co2_mg_per_m");
      } else {
        text = emissions::to_geojson(net, emissions::emission_diff(ga, emissions::read_weighted_csv(b, net)),
                                     "diff_mg_per_m");
      }
      io::write_text(g.out / "emissions.geojson", text);
      std::cout << (g.out / "emissions.geojson").string() << "\n";
    });
  }

  // analyze -------------------------------------------------------------------
  auto* an_cmd = app.add_subcommand("analyze", "Statistics of emission and travel-time distributions");
  an_cmd->require_subcommand(1);
  static fs::path em_path;
  static bool include_zero = false;
  {
    auto* c = an_cmd->add_subcommand("gini", "Gini index of per-edge emissions");
    c->add_option("--net", net_path)->required();
    c->add_option("--emissions", em_path)->required();
    c->add_flag("--include-zero", include_zero, "Keep zero-emission edges");
    c->callback([&] { std::cout << io::format_double(analysis::gini(masses_from(em_path, net_path, include_zero))) << "\n"; });
  }
  {
    auto* c = an_cmd->add_subcommand("fit", "Fit five tail models and pick the best");
    static std::optional<double> xmin;
    static bool scan = false;
    c->add_option("--net", net_path)->required();
    c->add_option("--emissions", em_path)->required();
    c->add_option("--xmin", xmin, "Default: smallest positive value");
    c->add_flag("--scan-xmin", scan, "Choose x_min by KS distance");
    c->add_flag("--include-zero", include_zero);
    c->callback([&] {
      const auto m = masses_from(em_path, net_path, include_zero);
      const double x = xmin ? *xmin : scan ? analysis::scan_xmin(m).x_min : analysis::default_xmin(m);
      const auto sel = analysis::select_best(analysis::fit_all_models(m, x), m);
      const auto report = analysis::fit_report_json(sel);
      io::write_text(g.out / "fit.json", report);
      std::cout << report;
    });
  }
  {
    auto* c = an_cmd->add_subcommand("js", "Compare two travel-time samples");
    static fs::path a, b;
    static std::size_t bins = 60;
    c->add_option("--sim", a, "travel_time_s CSV or trip records")->required();
    c->add_option("--real", b, "travel_time_s CSV or trip records")->required();
    c->add_option("--bins", bins)->capture_default_str();
    c->callback([&] {
      const auto r = analysis::travel_time_comparison(cli::read_travel_times(a), cli::read_travel_times(b), bins);
      std::cout << "js " << io::format_double(r.js) << "\nabs_mean_diff_s " << io::format_double(r.abs_mean_diff)
                << "\n";
    });
  }
  {
    auto* c = an_cmd->add_subcommand("ccdf", "CCDF and KDE of per-edge emissions for plotting");
    c->add_option("--net", net_path)->required();
    c->add_option("--emissions", em_path)->required();
    c->add_flag("--include-zero", include_zero);
    c->callback([&] {
      const auto m = masses_from(em_path, net_path, include_zero);
      std::ostringstream os;
      io::write_csv_row(os, {"x", "p"});
      for (const auto& p : analysis::ccdf(m)) io::write_csv_row(os, {io::format_double(p.x), io::format_double(p.p)});
      io::write_text(g.out / "ccdf.csv", os.str());
      const auto k = analysis::kde(m);
      std::ostringstream ks;
      io::write_csv_row(ks, {"x", "density"});
      for (std::size_t i = 0; i < k.x.size(); ++i)
        io::write_csv_row(ks, {io::format_double(k.x[i]), io::format_double(k.density[i])});
      io::write_text(g.out / "kde.csv", ks.str());
      std::cout << (g.out / "ccdf.csv").string() << "\n" << (g.out / "kde.csv").string() << "\n";
    });
  }

  // experiment ----------------------------------------------------------------
  auto* ex_cmd = app.add_subcommand("experiment", "Mixing sweeps and calibration");
  ex_cmd->require_subcommand(1);
  static fs::path od_path;
  static unsigned threads = 0;
  {
    auto* c = ex_cmd->add_subcommand("sweep", "Run the i x repetition mixing sweep");
    static bool fix = false;
    c->add_option("--net", net_path)->required();
    c->add_option("--od", od_path)->required();
    c->add_option("--tile-side", tile_side)->capture_default_str();
    c->add_option("--provider", provider_spec)->capture_default_str();
    c->add_option("--fallback", fallback)->check(CLI::IsMember({"error", "fastest"}))->capture_default_str();
    c->add_option("--coefficients", coef_path);
    c->add_flag("--fix-demand", fix, "One demand for all repetitions");
    c->add_option("--threads", threads, "0 = all cores")->capture_default_str();
    c->callback([&] {
      status = run_sweep(g, net_path, od_path, tile_side, provider_spec, fallback, coef_path,
                         fix ? std::optional<bool>(true) : std::nullopt, threads);
    });
  }
  {
    auto* c = ex_cmd->add_subcommand("calibrate", "Grid search against real travel times");
    static fs::path real;
    c->add_option("--net", net_path)->required();
    c->add_option("--od", od_path)->required();
    c->add_option("--real", real, "travel_time_s CSV or trip records")->required();
    c->add_option("--tile-side", tile_side)->capture_default_str();
    c->add_option("--threads", threads)->capture_default_str();
    c->callback([&] {
      auto doc = config_doc(g);
      auto grid = experiment::calibration_grid_from_json(doc);
      if (!doc.contains("calibration") || !doc.at("calibration").contains("seed")) grid.seed = g.seed;
      const auto net = network::load_network(net_path);
      experiment::RunOptions opts;
      opts.threads = threads;
      const auto rows = experiment::run_calibration(grid, net, demand::read_od(od_path),
                                                    demand::build_grid(net, tile_side), cli::read_travel_times(real),
                                                    opts);
      experiment::write_calibration_csv(g.out / "calibration.csv", rows);
      io::write_text(g.out / "calibration.manifest.json", experiment::to_json(grid).dump(1) + "\n");
      std::cout << io::read_text(g.out / "calibration.csv");
      for (const auto& r : rows)
        if (r.failed) status = 3;
    });
  }
  {
    auto* c = ex_cmd->add_subcommand("summarize", "Per-i mean and std of a sweep");
    static fs::path sweep;
    c->add_option("--sweep", sweep)->required();
    c->callback([&] {
      const auto rows = experiment::summarize(experiment::read_sweep_csv(sweep));
      experiment::write_summary_csv(g.out / "summary.csv", rows);
      std::cout << io::read_text(g.out / "summary.csv");
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ValidationError& e) {
    std::cerr << "error:\n";
    for (const auto& issue : e.issues()) std::cerr << "  " << issue << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return status;
}
