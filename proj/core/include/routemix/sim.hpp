#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "routemix/demand.hpp"
#include "routemix/network.hpp"
#include "routemix/rng.hpp"
#include "routemix/routing.hpp"

namespace routemix::sim {

using network::EdgeIndex;
using network::RoadNetwork;

struct SimConfig {
  double dt = 1.0;                    // s
  double horizon = 3600.0;            // s, departure window
  double max_time = 0.0;              // s, hard stop; 0 means 3 * horizon
  double accel = 2.6;                 // m/s^2
  double decel = 4.5;                 // m/s^2
  double tau = 1.0;                   // s, driver reaction time
  double sigma = 0.5;                 // driver imperfection in [0, 1]
  double vehicle_length = 5.0;        // m
  double min_gap = 2.5;               // m
  double teleport_threshold = 300.0;  // s stopped at the head of a blocked queue
  double green = 45.0;                // s per phase at signalized nodes
  double red = 45.0;
  std::uint64_t seed = 0;             // keys the per-vehicle dawdling generators
  bool record_trajectories = true;

  double stop_time() const noexcept { return max_time > 0.0 ? max_time : 3.0 * horizon; }
  /// Throws ValidationError on non-positive parameters or sigma outside [0, 1].
  void validate() const;
};

struct Leader {
  double speed = 0.0;  // m/s
  double gap = 0.0;    // m, net of min_gap
};

/// Krauss-style speed update.
///
/// v_safe = v_l + (gap - v_l*tau) / (tau + (v + v_l) / (2b)),
/// v_des = min(v + a*dt, v_max, v_safe), result = max(0, v_des - sigma*a*dt*eta).
/// Without a leader v_safe is dropped.
double car_following_speed(double v, std::optional<Leader> leader, double v_max, const SimConfig& cfg, double eta);

/// Departure time per routed path, aligned with RoutedDemand::paths.
struct DepartureSchedule {
  std::vector<double> times;
};

/// Each departure i.i.d. uniform on [0, horizon).
DepartureSchedule assign_departures(const routing::RoutedDemand& d, double horizon, Rng& rng);

/// Background traffic used during calibration: "none", "15_start",
/// "15_start+45_end". x_start adds floor(N*x/100) vehicles at t = 0, y_end adds
/// floor(N*y/100) vehicles right after the last scheduled departure.
struct ExtraVehiclesConfig {
  int start_pct = 0;
  int end_pct = 0;

  static ExtraVehiclesConfig parse(std::string_view label);
  std::string label() const;
  std::size_t start_count(std::size_t n) const noexcept { return n * static_cast<std::size_t>(start_pct) / 100; }
  std::size_t end_count(std::size_t n) const noexcept { return n * static_cast<std::size_t>(end_pct) / 100; }
  bool operator==(const ExtraVehiclesConfig&) const = default;
};

struct ExtraVehicles {
  std::vector<routing::RoutedPath> paths;
  std::vector<double> depart;
  std::size_t size() const noexcept { return paths.size(); }
};

/// Builds the extra fleet with perturbed fastest paths between uniformly
/// chosen feasible tile pairs.
ExtraVehicles build_extra_vehicles(const ExtraVehiclesConfig& cfg, std::size_t n, double last_departure,
                                   const RoadNetwork& net, const demand::TileEdgeIndex& tiles, double w,
                                   std::uint64_t seed, double dt = 1.0);

struct TrajectoryPoint {
  std::uint32_t vehicle = 0;
  EdgeIndex edge = 0;   // edge occupied at the start of the step
  double time = 0.0;    // step start
  double pos = 0.0;     // m from the edge start, at step start
  double speed = 0.0;   // m/s held during the step
  double accel = 0.0;   // m/s^2 over the step
};

struct EdgeEntry {
  std::uint32_t vehicle = 0;
  EdgeIndex edge = 0;
  double time = 0.0;
};

struct TrajectoryLog {
  std::vector<std::string> vehicle_ids;
  std::vector<bool> is_extra;
  std::vector<double> depart;                     // scheduled
  std::vector<std::optional<double>> inserted;    // actual insertion time
  std::vector<std::optional<double>> arrival;
  std::vector<TrajectoryPoint> points;            // step-major
  std::vector<EdgeEntry> entries;

  std::size_t vehicle_count() const noexcept { return vehicle_ids.size(); }
};

struct SimStats {
  std::size_t vehicles = 0;           // demand + extra
  std::size_t inserted = 0;           // departed onto the network
  std::size_t arrived = 0;
  std::size_t en_route = 0;           // inserted, not arrived, at the end
  std::size_t waiting_insertion = 0;  // never inserted
  std::size_t teleports = 0;
  std::size_t demand_arrived = 0;
  double mean_travel_time = 0.0;      // over arrived demand (non-extra) vehicles
  double end_time = 0.0;
};

struct SimResult {
  TrajectoryLog log;
  SimStats stats;
};

using PointCallback = std::function<void(const TrajectoryPoint&)>;

/// Time-stepped single-lane microsimulation of a routed demand.
///
/// Vehicles enter their next edge only if it has a free slot and, at a
/// signalized node, only while their approach is green. The head of a queue
/// that has been nearly stopped (< 0.1 m/s) for teleport_threshold seconds is
/// moved to the first edge further along its path with room. Runs until every
/// vehicle arrives or cfg.stop_time() is reached. `on_point`, when set, sees
/// every trajectory point whether or not they are recorded.
SimResult simulate(const RoadNetwork& net, const routing::RoutedDemand& demand, const DepartureSchedule& sched,
                   const SimConfig& cfg, const ExtraVehicles& extra = {}, const PointCallback& on_point = {});

/// arrival - scheduled departure per vehicle; nullopt for vehicles that did
/// not arrive.
std::vector<std::optional<double>> travel_times(const TrajectoryLog& log);

/// Travel times of arrived demand (non-extra) vehicles.
std::vector<double> arrived_travel_times(const TrajectoryLog& log);

// I/O
void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryLog& log, const RoadNetwork& net);
TrajectoryLog read_trajectory_csv(const std::filesystem::path& path, const RoadNetwork& net);
std::string stats_to_json(const SimStats& stats);
void write_schedule_csv(const std::filesystem::path& path, const routing::RoutedDemand& d, const DepartureSchedule& s);
DepartureSchedule read_schedule_csv(const std::filesystem::path& path, const routing::RoutedDemand& d);

}  // namespace routemix::sim
