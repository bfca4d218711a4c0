#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "routemix/network.hpp"
#include "routemix/rng.hpp"

namespace routemix::demand {

using network::EdgeIndex;
using network::RoadNetwork;

/// Square tessellation of the plane anchored at (origin_x, origin_y).
struct TileGrid {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double side = 1000.0;
  int n_rows = 1;
  int n_cols = 1;

  double x_max() const noexcept { return origin_x + side * n_cols; }
  double y_max() const noexcept { return origin_y + side * n_rows; }
  std::size_t tile_count() const noexcept { return static_cast<std::size_t>(n_rows) * n_cols; }
};

struct Tile {
  int row = 0;
  int col = 0;
  auto operator<=>(const Tile&) const = default;
};

TileGrid build_grid(const network::BoundingBox& bbox, double side);
/// Grid over the network's node bounding box.
TileGrid build_grid(const RoadNetwork& net, double side);

bool contains(const TileGrid& grid, double x, double y) noexcept;
/// Tile holding (x, y); points on the upper/right boundary clamp into the last
/// row/column. Throws ValidationError outside the grid.
Tile tile_of(const TileGrid& grid, double x, double y);

struct TripRecord {
  double origin_x = 0.0, origin_y = 0.0;
  double dest_x = 0.0, dest_y = 0.0;
  double depart_time = 0.0;
  double arrive_time = 0.0;

  double travel_time() const noexcept { return arrive_time - depart_time; }
};

/// Tile-to-tile trip counts.
class ODMatrix {
 public:
  using Key = std::pair<Tile, Tile>;

  void add(Tile o, Tile d, double count = 1.0);
  double at(Tile o, Tile d) const;
  double total() const noexcept;
  bool empty() const noexcept { return counts_.empty(); }
  std::size_t size() const noexcept { return counts_.size(); }
  const std::map<Key, double>& entries() const noexcept { return counts_; }

 private:
  std::map<Key, double> counts_;
};

struct OdEstimate {
  ODMatrix od;
  std::size_t skipped = 0;  // records with an endpoint outside the grid
};

/// Counts records by (origin tile, destination tile). Records outside the
/// grid are skipped; if none remain, throws ValidationError.
OdEstimate estimate_od(std::span<const TripRecord> records, const TileGrid& grid);

/// Edges whose source node lies in `tile`.
std::vector<EdgeIndex> edges_in_tile(const RoadNetwork& net, const TileGrid& grid, Tile tile);

/// Precomputed tile -> edges index; equivalent to calling edges_in_tile for
/// every tile.
class TileEdgeIndex {
 public:
  TileEdgeIndex(const RoadNetwork& net, const TileGrid& grid);

  std::span<const EdgeIndex> edges(Tile t) const;
  const TileGrid& grid() const noexcept { return grid_; }
  /// Tiles holding at least one edge.
  std::vector<Tile> nonempty_tiles() const;
  /// An OD pair can produce a trip with distinct origin and destination edges.
  bool feasible(Tile o, Tile d) const;

 private:
  TileGrid grid_;
  std::vector<std::vector<EdgeIndex>> by_tile_;
};

struct Trip {
  std::string vehicle_id;
  EdgeIndex origin_edge = 0;
  EdgeIndex dest_edge = 0;
};

struct MobilityDemand {
  std::vector<Trip> trips;
  std::size_t size() const noexcept { return trips.size(); }
};

std::string vehicle_id(std::size_t index);

struct SampleReport {
  std::vector<ODMatrix::Key> excluded_pairs;  // positive mass but an empty tile
};

/// Draws N trips: OD pair with probability proportional to its count among
/// feasible pairs, then origin and destination edges uniformly within the
/// tiles, redrawing until they differ.
MobilityDemand sample_demand(const ODMatrix& od, const RoadNetwork& net, const TileGrid& grid, std::size_t n,
                             Rng& rng, SampleReport* report = nullptr);

/// Gravity-style generator of synthetic trip records standing in for GPS data.
struct GravityConfig {
  std::size_t n_records = 1000;
  /// Per-tile attraction weights, row-major. Empty means a centre-peaked
  /// profile exp(-r / centre_scale).
  std::vector<double> tile_weights;
  double centre_scale = 2000.0;   // m
  double decay_length = 2000.0;   // m, flow ~ w_o * w_d * exp(-dist / decay_length)
  double mean_speed = 7.0;        // m/s, door-to-door over Manhattan distance
  double time_noise_sigma = 0.25; // lognormal multiplicative noise
  double base_time = 60.0;        // s, fixed overhead per trip
  double horizon = 3600.0;        // departures uniform on [0, horizon)
};

std::vector<TripRecord> synth_records(const TileGrid& grid, const GravityConfig& cfg, Rng& rng);

// CSV formats
std::vector<TripRecord> read_trip_records(const std::filesystem::path& path);
void write_trip_records(const std::filesystem::path& path, std::span<const TripRecord> records);
ODMatrix read_od(const std::filesystem::path& path);
void write_od(const std::filesystem::path& path, const ODMatrix& od);
MobilityDemand read_demand(const std::filesystem::path& path, const RoadNetwork& net);
void write_demand(const std::filesystem::path& path, const MobilityDemand& demand, const RoadNetwork& net);

}  // namespace routemix::demand
