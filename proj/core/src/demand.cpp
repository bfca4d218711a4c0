#include "routemix/demand.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "routemix/error.hpp"
#include "routemix/log.hpp"
#include "routemix/table_io.hpp"

namespace routemix::demand {

TileGrid build_grid(const network::BoundingBox& b, double side) {
  if (!(side > 0.0)) throw ValidationError({"build_grid: side must be > 0"});
  if (!(b.x_max > b.x_min) || !(b.y_max > b.y_min)) throw ValidationError({"build_grid: degenerate bounding box"});
  TileGrid g;
  g.origin_x = b.x_min;
  g.origin_y = b.y_min;
  g.side = side;
  g.n_cols = static_cast<int>(std::ceil((b.x_max - b.x_min) / side));
  g.n_rows = static_cast<int>(std::ceil((b.y_max - b.y_min) / side));
  return g;
}

TileGrid build_grid(const RoadNetwork& net, double side) { return build_grid(net.bbox(), side); }

bool contains(const TileGrid& g, double x, double y) noexcept {
  return x >= g.origin_x && y >= g.origin_y && x <= g.x_max() && y <= g.y_max();
}

Tile tile_of(const TileGrid& g, double x, double y) {
  if (!contains(g, x, y))
    throw ValidationError({"tile_of: point (" + io::format_double(x) + ", " + io::format_double(y) +
                           ") outside grid"});
  const int row = std::min(g.n_rows - 1, static_cast<int>(std::floor((y - g.origin_y) / g.side)));
  const int col = std::min(g.n_cols - 1, static_cast<int>(std::floor((x - g.origin_x) / g.side)));
  return {row, col};
}

void ODMatrix::add(Tile o, Tile d, double count) {
  if (count < 0.0) throw ValidationError({"ODMatrix: negative count"});
  counts_[{o, d}] += count;
}

double ODMatrix::at(Tile o, Tile d) const {
  auto it = counts_.find({o, d});
  return it == counts_.end() ? 0.0 : it->second;
}

double ODMatrix::total() const noexcept {
  double t = 0.0;
  for (const auto& [k, v] : counts_) t += v;
  return t;
}

OdEstimate estimate_od(std::span<const TripRecord> records, const TileGrid& grid) {
  if (records.empty()) throw ValidationError({"estimate_od: no trip records"});
  OdEstimate out;
  for (const auto& r : records) {
    if (!contains(grid, r.origin_x, r.origin_y) || !contains(grid, r.dest_x, r.dest_y)) {
      ++out.skipped;
      continue;
    }
    out.od.add(tile_of(grid, r.origin_x, r.origin_y), tile_of(grid, r.dest_x, r.dest_y));
  }
  if (out.od.empty()) throw ValidationError({"estimate_od: every record lies outside the tile grid"});
  return out;
}

std::vector<EdgeIndex> edges_in_tile(const RoadNetwork& net, const TileGrid& grid, Tile tile) {
  std::vector<EdgeIndex> out;
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    const auto& n = net.node(net.source(e));
    if (contains(grid, n.x, n.y) && tile_of(grid, n.x, n.y) == tile) out.push_back(e);
  }
  return out;
}

TileEdgeIndex::TileEdgeIndex(const RoadNetwork& net, const TileGrid& grid)
    : grid_(grid), by_tile_(grid.tile_count()) {
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    const auto& n = net.node(net.source(e));
    if (!contains(grid, n.x, n.y)) continue;
    const Tile t = tile_of(grid, n.x, n.y);
    by_tile_[static_cast<std::size_t>(t.row) * grid.n_cols + t.col].push_back(e);
  }
}

std::span<const EdgeIndex> TileEdgeIndex::edges(Tile t) const {
  if (t.row < 0 || t.col < 0 || t.row >= grid_.n_rows || t.col >= grid_.n_cols) return {};
  return by_tile_[static_cast<std::size_t>(t.row) * grid_.n_cols + t.col];
}

std::vector<Tile> TileEdgeIndex::nonempty_tiles() const {
  std::vector<Tile> out;
  for (int r = 0; r < grid_.n_rows; ++r)
    for (int c = 0; c < grid_.n_cols; ++c)
      if (!edges({r, c}).empty()) out.push_back({r, c});
  return out;
}

bool TileEdgeIndex::feasible(Tile o, Tile d) const {
  const auto eo = edges(o), ed = edges(d);
  if (eo.empty() || ed.empty()) return false;
  return !(o == d && eo.size() == 1);
}

std::string vehicle_id(std::size_t index) { return "v" + std::to_string(index); }

MobilityDemand sample_demand(const ODMatrix& od, const RoadNetwork& net, const TileGrid& grid, std::size_t n,
                             Rng& rng, SampleReport* report) {
  if (n == 0) throw ValidationError({"sample_demand: N must be >= 1"});
  const TileEdgeIndex index(net, grid);

  std::vector<ODMatrix::Key> pairs;
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& [key, count] : od.entries()) {
    if (!(count > 0.0)) continue;
    if (!index.feasible(key.first, key.second)) {
      if (report) report->excluded_pairs.push_back(key);
      warn("sample_demand: excluding OD pair (" + std::to_string(key.first.row) + "," +
           std::to_string(key.first.col) + ")->(" + std::to_string(key.second.row) + "," +
           std::to_string(key.second.col) + "): tile has no usable edges");
      continue;
    }
    total += count;
    pairs.push_back(key);
    cumulative.push_back(total);
  }
  if (pairs.empty()) throw ValidationError({"sample_demand: no feasible OD pair"});

  MobilityDemand out;
  out.trips.reserve(n);
  for (std::size_t v = 0; v < n; ++v) {
    const double u = rng.uniform01() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    const auto& [o, d] = pairs[static_cast<std::size_t>(it - cumulative.begin())];
    const auto eo = index.edges(o), ed = index.edges(d);
    EdgeIndex a, b;
    do {
      a = eo[rng.below(eo.size())];
      b = ed[rng.below(ed.size())];
    } while (a == b);
    out.trips.push_back({vehicle_id(v), a, b});
  }
  return out;
}

std::vector<TripRecord> synth_records(const TileGrid& grid, const GravityConfig& cfg, Rng& rng) {
  const std::size_t n_tiles = grid.tile_count();
  std::vector<double> weight = cfg.tile_weights;
  auto centre = [&](std::size_t k) {
    const double r = static_cast<double>(k / grid.n_cols), c = static_cast<double>(k % grid.n_cols);
    return std::pair{grid.origin_x + (c + 0.5) * grid.side, grid.origin_y + (r + 0.5) * grid.side};
  };
  if (weight.empty()) {
    const double cx = grid.origin_x + 0.5 * grid.side * grid.n_cols;
    const double cy = grid.origin_y + 0.5 * grid.side * grid.n_rows;
    weight.resize(n_tiles);
    for (std::size_t k = 0; k < n_tiles; ++k) {
      auto [x, y] = centre(k);
      weight[k] = std::exp(-std::hypot(x - cx, y - cy) / cfg.centre_scale);
    }
  }
  if (weight.size() != n_tiles)
    throw ValidationError({"synth_records: tile_weights must have " + std::to_string(n_tiles) + " entries"});

  std::vector<double> cumulative;
  cumulative.reserve(n_tiles * n_tiles);
  double total = 0.0;
  for (std::size_t o = 0; o < n_tiles; ++o) {
    for (std::size_t d = 0; d < n_tiles; ++d) {
      auto [xo, yo] = centre(o);
      auto [xd, yd] = centre(d);
      total += weight[o] * weight[d] * std::exp(-std::hypot(xo - xd, yo - yd) / cfg.decay_length);
      cumulative.push_back(total);
    }
  }
  if (!(total > 0.0)) throw ValidationError({"synth_records: all tile weights are zero"});

  std::vector<TripRecord> out;
  out.reserve(cfg.n_records);
  for (std::size_t i = 0; i < cfg.n_records; ++i) {
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), rng.uniform01() * total);
    if (it == cumulative.end()) --it;
    const auto k = static_cast<std::size_t>(it - cumulative.begin());
    auto [xo, yo] = centre(k / n_tiles);
    auto [xd, yd] = centre(k % n_tiles);
    TripRecord r;
    r.origin_x = xo + (rng.uniform01() - 0.5) * grid.side;
    r.origin_y = yo + (rng.uniform01() - 0.5) * grid.side;
    r.dest_x = xd + (rng.uniform01() - 0.5) * grid.side;
    r.dest_y = yd + (rng.uniform01() - 0.5) * grid.side;
    r.depart_time = rng.uniform(0.0, cfg.horizon);
    const double manhattan = std::abs(r.dest_x - r.origin_x) + std::abs(r.dest_y - r.origin_y);
    const double s = cfg.time_noise_sigma;
    const double noise = std::exp(s * rng.normal() - 0.5 * s * s);
    r.arrive_time = r.depart_time + cfg.base_time + manhattan / cfg.mean_speed * noise;
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {
const std::vector<std::string> kRecordHeader{"origin_x", "origin_y", "dest_x", "dest_y", "depart_time", "arrive_time"};
const std::vector<std::string> kOdHeader{"o_row", "o_col", "d_row", "d_col", "count"};
const std::vector<std::string> kDemandHeader{"vehicle_id", "origin_edge", "dest_edge"};
}  // namespace

std::vector<TripRecord> read_trip_records(const std::filesystem::path& path) {
  const auto table = io::read_csv(path, kRecordHeader);
  std::vector<TripRecord> out;
  std::vector<std::string> issues;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = path.string() + ":" + std::to_string(table.lines[i]);
    TripRecord r{io::parse_double(row[0], where), io::parse_double(row[1], where), io::parse_double(row[2], where),
                 io::parse_double(row[3], where), io::parse_double(row[4], where), io::parse_double(row[5], where)};
    if (!(r.arrive_time > r.depart_time)) issues.push_back(where + ": arrive_time must exceed depart_time");
    out.push_back(r);
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return out;
}

void write_trip_records(const std::filesystem::path& path, std::span<const TripRecord> records) {
  std::ostringstream os;
  io::write_csv_row(os, kRecordHeader);
  for (const auto& r : records) {
    io::write_csv_row(os, {io::format_double(r.origin_x), io::format_double(r.origin_y), io::format_double(r.dest_x),
                           io::format_double(r.dest_y), io::format_double(r.depart_time),
                           io::format_double(r.arrive_time)});
  }
  io::write_text(path, os.str());
}

ODMatrix read_od(const std::filesystem::path& path) {
  const auto table = io::read_csv(path, kOdHeader);
  ODMatrix od;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = path.string() + ":" + std::to_string(table.lines[i]);
    const Tile o{static_cast<int>(io::parse_int(row[0], where)), static_cast<int>(io::parse_int(row[1], where))};
    const Tile d{static_cast<int>(io::parse_int(row[2], where)), static_cast<int>(io::parse_int(row[3], where))};
    const double count = io::parse_double(row[4], where);
    if (count < 0.0) throw ValidationError({where + ": negative count"});
    od.add(o, d, count);
  }
  if (od.total() <= 0.0) throw ValidationError({path.string() + ": OD matrix has no positive entry"});
  return od;
}

void write_od(const std::filesystem::path& path, const ODMatrix& od) {
  std::ostringstream os;
  io::write_csv_row(os, kOdHeader);
  for (const auto& [k, v] : od.entries()) {
    io::write_csv_row(os, {std::to_string(k.first.row), std::to_string(k.first.col), std::to_string(k.second.row),
                           std::to_string(k.second.col), io::format_double(v)});
  }
  io::write_text(path, os.str());
}

MobilityDemand read_demand(const std::filesystem::path& path, const RoadNetwork& net) {
  const auto table = io::read_csv(path, kDemandHeader);
  MobilityDemand out;
  std::vector<std::string> issues;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = path.string() + ":" + std::to_string(table.lines[i]);
    auto o = net.find_edge(row[1]);
    auto d = net.find_edge(row[2]);
    if (!o) issues.push_back(where + ": unknown origin edge '" + row[1] + "'");
    if (!d) issues.push_back(where + ": unknown destination edge '" + row[2] + "'");
    if (o && d && *o == *d) issues.push_back(where + ": origin_edge equals dest_edge");
    if (o && d) out.trips.push_back({row[0], *o, *d});
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return out;
}

void write_demand(const std::filesystem::path& path, const MobilityDemand& demand, const RoadNetwork& net) {
  std::ostringstream os;
  io::write_csv_row(os, kDemandHeader);
  for (const auto& t : demand.trips)
    io::write_csv_row(os, {t.vehicle_id, net.edge(t.origin_edge).id, net.edge(t.dest_edge).id});
  io::write_text(path, os.str());
}

}  // namespace routemix::demand
