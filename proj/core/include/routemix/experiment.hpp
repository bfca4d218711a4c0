#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "routemix/demand.hpp"
#include "routemix/emissions.hpp"
#include "routemix/network.hpp"
#include "routemix/providers.hpp"
#include "routemix/sim.hpp"

namespace routemix::experiment {

using network::RoadNetwork;
using routing::NavigationProvider;

/// One mixing campaign: for every i and repetition, sample a demand, route
/// round(N*i/10) trips through the provider and the rest with perturbation w,
/// simulate, and measure emissions.
struct SweepConfig {
  std::string provider = "fastest";   // label recorded with every row
  std::size_t n_vehicles = 2000;
  double w = 5.0;
  std::vector<int> i_values{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int repetitions = 10;
  std::uint64_t seed = 0;
  sim::ExtraVehiclesConfig extra;
  std::filesystem::path coefficients;  // empty: use the coefficients passed to run_sweep
  /// Keep one demand for every repetition instead of resampling it per repetition.
  bool fix_demand = false;
  /// With fix_demand, still redraw departure times per repetition.
  bool redraw_departures = true;
  /// Cells sharing a repetition reuse its demand, departures, routing and
  /// dawdling streams, so they differ only in i. Off: every stream is keyed by (i, rep).
  bool common_random_numbers = true;
  /// Drop zero-emission edges before Gini and fits.
  bool include_zero_edges = false;
  /// w-sweep mode: rerun the sweep for each value. Empty means just `w`.
  std::vector<double> w_values;
  sim::SimConfig sim;

  /// Throws ValidationError.
  void validate() const;
  std::vector<double> effective_w_values() const { return w_values.empty() ? std::vector<double>{w} : w_values; }
};

struct SweepRow {
  std::string provider;
  double w = 1.0;
  int i = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  double total_co2_mg = 0.0;
  double gini = 0.0;
  double alpha = 0.0;    // truncated power-law exponent, NaN if the fit failed
  double lambda = 0.0;
  double mean_travel_time = 0.0;
  std::size_t teleports = 0;
  std::size_t arrived = 0;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by (w, i, rep)
  std::size_t failures() const;
};

struct RunOptions {
  /// Rows are appended here as soon as each cell completes.
  std::optional<std::filesystem::path> journal;
  /// Worker threads; 0 means hardware concurrency.
  unsigned threads = 0;
  std::function<void(const SweepRow&)> on_row;
};

/// Seed of cell (i, rep): derive_seed(master, {i, rep}).
std::uint64_t cell_seed(std::uint64_t master, int i, int rep);

/// Runs a single cell; never throws, failures land in row.error.
SweepRow run_cell(const SweepConfig& cfg, double w, int i, int rep, const RoadNetwork& net,
                  const demand::ODMatrix& od, const demand::TileEdgeIndex& tiles, NavigationProvider& provider,
                  const emissions::EmissionCoefficients& coef);

SweepResult run_sweep(const SweepConfig& cfg, const RoadNetwork& net, const demand::ODMatrix& od,
                      const demand::TileGrid& grid, NavigationProvider& provider,
                      const emissions::EmissionCoefficients& coef, const RunOptions& opts = {});

struct SummaryRow {
  std::string provider;
  double w = 1.0;
  int i = 0;
  std::size_t runs = 0;  // successful repetitions
  double total_co2_mean = 0.0, total_co2_std = 0.0;
  double gini_mean = 0.0, gini_std = 0.0;
  double alpha_mean = 0.0, alpha_std = 0.0;
  double travel_time_mean = 0.0, travel_time_std = 0.0;
  double teleports_mean = 0.0, teleports_std = 0.0;
};

/// Mean and sample standard deviation per (w, i) over successful rows. NaN
/// metrics (failed fits) are left out of their own column only.
std::vector<SummaryRow> summarize(const SweepResult& result);

/// Calibration grid over (N, w, extra vehicles), with all trips perturbed.
struct CalibrationGrid {
  std::vector<std::size_t> n_values{5000, 10000, 15000, 20000};
  std::vector<double> w_values{1.0, 2.5, 5.0, 10.0, 15.0, 25.0};
  std::vector<sim::ExtraVehiclesConfig> extras{{0, 0}, {15, 0}, {15, 45}};
  int runs = 5;
  std::uint64_t seed = 0;
  sim::SimConfig sim;

  void validate() const;
  std::size_t cells() const noexcept { return n_values.size() * w_values.size() * extras.size(); }
};

struct CalibrationRow {
  std::size_t n = 0;
  double w = 1.0;
  sim::ExtraVehiclesConfig extra;
  int runs_ok = 0;
  int runs_failed = 0;
  double js = 0.0;
  double abs_dtt = 0.0;
  double teleports = 0.0;
  bool failed = false;  // no successful run; listed after the ranked rows
  std::string error;    // last failure message
};

/// Ranked rows: successful cells ascending by (js, abs_dtt, teleports), then
/// failed cells in grid order.
std::vector<CalibrationRow> run_calibration(const CalibrationGrid& grid, const RoadNetwork& net,
                                            const demand::ODMatrix& od, const demand::TileGrid& tiles,
                                            std::span<const double> real_times, const RunOptions& opts = {});

/// Sort used by run_calibration.
void rank_calibration(std::vector<CalibrationRow>& rows);

// Config files (JSON or TOML). Sections: [sweep], [calibration], [sim].
SweepConfig sweep_config_from_json(const nlohmann::json& doc);
CalibrationGrid calibration_grid_from_json(const nlohmann::json& doc);
sim::SimConfig sim_config_from_json(const nlohmann::json& section, sim::SimConfig base = {});
nlohmann::ordered_json to_json(const SweepConfig& cfg);
nlohmann::ordered_json to_json(const CalibrationGrid& grid);
nlohmann::ordered_json to_json(const sim::SimConfig& cfg);

// Output tables.
void write_sweep_header(std::ostream& os);
void write_sweep_row(std::ostream& os, const SweepRow& row);
void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result);
SweepResult read_sweep_csv(const std::filesystem::path& path);
void write_summary_csv(const std::filesystem::path& path, std::span<const SummaryRow> rows);
void write_calibration_csv(const std::filesystem::path& path, std::span<const CalibrationRow> rows);

/// Config, seeds and outcome of a sweep for later audit.
std::string sweep_manifest(const SweepConfig& cfg, const SweepResult& result,
                           const emissions::EmissionCoefficients& coef);

}  // namespace routemix::experiment
