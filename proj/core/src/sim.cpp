#include "routemix/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "routemix/error.hpp"
#include "routemix/table_io.hpp"

namespace routemix::sim {

void SimConfig::validate() const {
  std::vector<std::string> issues;
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) issues.push_back(std::string(name) + " must be > 0");
  };
  positive(dt, "dt");
  positive(horizon, "horizon");
  positive(accel, "accel");
  positive(decel, "decel");
  positive(tau, "tau");
  positive(vehicle_length, "vehicle_length");
  positive(min_gap, "min_gap");
  positive(teleport_threshold, "teleport_threshold");
  positive(green, "green");
  positive(red, "red");
  if (max_time < 0.0) issues.push_back("max_time must be >= 0");
  if (!(sigma >= 0.0 && sigma <= 1.0)) issues.push_back("sigma must be in [0, 1]");
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

double car_following_speed(double v, std::optional<Leader> leader, double v_max, const SimConfig& cfg, double eta) {
  double v_des = std::min(v + cfg.accel * cfg.dt, v_max);
  if (leader) {
    const double vl = leader->speed;
    const double gap = std::max(0.0, leader->gap);
    const double v_safe = vl + (gap - vl * cfg.tau) / (cfg.tau + (v + vl) / (2.0 * cfg.decel));
    v_des = std::min(v_des, v_safe);
  }
  return std::max(0.0, v_des - cfg.sigma * cfg.accel * cfg.dt * eta);
}

DepartureSchedule assign_departures(const routing::RoutedDemand& d, double horizon, Rng& rng) {
  if (!(horizon > 0.0)) throw ValidationError({"assign_departures: horizon must be > 0"});
  DepartureSchedule s;
  s.times.reserve(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    double t = rng.uniform(0.0, horizon);
    if (t >= horizon) t = std::nextafter(horizon, 0.0);
    s.times.push_back(t);
  }
  return s;
}

ExtraVehiclesConfig ExtraVehiclesConfig::parse(std::string_view label) {
  ExtraVehiclesConfig c;
  if (label == "none" || label.empty()) return c;
  std::size_t start = 0;
  while (start <= label.size()) {
    auto plus = label.find('+', start);
    auto part = label.substr(start, plus == std::string_view::npos ? std::string_view::npos : plus - start);
    auto us = part.find('_');
    if (us == std::string_view::npos) throw ParseError("extra vehicles", "bad component '" + std::string(part) + "'");
    const auto pct = static_cast<int>(io::parse_int(part.substr(0, us), "extra vehicles"));
    const auto where = part.substr(us + 1);
    if (pct < 0) throw ParseError("extra vehicles", "negative percentage");
    if (where == "start")
      c.start_pct = pct;
    else if (where == "end")
      c.end_pct = pct;
    else
      throw ParseError("extra vehicles", "expected _start or _end in '" + std::string(part) + "'");
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  return c;
}

std::string ExtraVehiclesConfig::label() const {
  if (start_pct == 0 && end_pct == 0) return "none";
  std::string s;
  if (start_pct) s = std::to_string(start_pct) + "_start";
  if (end_pct) s += (s.empty() ? "" : "+") + std::to_string(end_pct) + "_end";
  return s;
}

ExtraVehicles build_extra_vehicles(const ExtraVehiclesConfig& cfg, std::size_t n, double last_departure,
                                   const RoadNetwork& net, const demand::TileEdgeIndex& tiles, double w,
                                   std::uint64_t seed, double dt) {
  ExtraVehicles out;
  const std::size_t n_start = cfg.start_count(n), n_end = cfg.end_count(n);
  if (n_start + n_end == 0) return out;

  std::vector<std::pair<demand::Tile, demand::Tile>> pairs;
  const auto nonempty = tiles.nonempty_tiles();
  for (auto o : nonempty)
    for (auto d : nonempty)
      if (tiles.feasible(o, d)) pairs.emplace_back(o, d);
  if (pairs.empty()) throw ValidationError({"build_extra_vehicles: no feasible tile pair"});

  Rng rng(derive_seed(seed, {hash_string("extra-vehicles")}));
  routing::Router router(net);
  for (std::size_t k = 0; k < n_start + n_end; ++k) {
    const auto& [o, d] = pairs[rng.below(pairs.size())];
    const auto eo = tiles.edges(o), ed = tiles.edges(d);
    EdgeIndex a, b;
    do {
      a = eo[rng.below(eo.size())];
      b = ed[rng.below(ed.size())];
    } while (a == b);
    routing::RoutedPath p;
    p.vehicle_id = "x" + std::to_string(k);
    Rng vr(derive_seed(seed, {hash_string(p.vehicle_id)}));
    auto routed = routing::perturbed_fastest_path(router, a, b, w, vr);
    p.edges = std::move(routed.edges);
    p.source = routed.source;
    out.paths.push_back(std::move(p));
    out.depart.push_back(k < n_start ? 0.0 : last_departure + dt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulation core

namespace {

enum class State : std::uint8_t { pending, waiting_insert, driving, teleporting, arrived };

struct Vehicle {
  const std::vector<EdgeIndex>* path = nullptr;
  std::size_t route_pos = 0;
  double pos = 0.0;
  double speed = 0.0;
  double stopped_for = 0.0;
  double depart = 0.0;
  std::uint64_t moved_step = std::numeric_limits<std::uint64_t>::max();
  State state = State::pending;
  Rng rng;
};

class Engine {
 public:
  Engine(const RoadNetwork& net, const SimConfig& cfg, const PointCallback& on_point)
      : net_(net), cfg_(cfg), on_point_(on_point), queues_(net.edge_count()), insert_queues_(net.edge_count()) {
    capacity_.resize(net.edge_count());
    signal_group_.assign(net.edge_count(), -1);
    for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
      capacity_[e] = network::edge_capacity(net.edge(e), cfg.vehicle_length, cfg.min_gap);
      const auto& to = net.node(net.target(e));
      if (to.has_traffic_light) {
        const auto& from = net.node(net.source(e));
        signal_group_[e] = std::abs(to.x - from.x) >= std::abs(to.y - from.y) ? 0 : 1;
      }
    }
  }

  SimResult run(std::vector<const routing::RoutedPath*> paths, std::vector<double> depart, std::vector<bool> extra);

 private:
  bool green(EdgeIndex e, double t) const {
    if (signal_group_[e] < 0) return true;
    const double phase = std::fmod(t, cfg_.green + cfg_.red);
    return (phase < cfg_.green) == (signal_group_[e] == 0);
  }

  /// Room at the start of `e` for a vehicle placed at position 0.
  bool has_room(EdgeIndex e) const {
    const auto& q = queues_[e];
    if (q.size() >= capacity_[e]) return false;
    if (q.empty()) return true;
    return vehicles_[q.back()].pos - cfg_.vehicle_length - cfg_.min_gap >= 0.0;
  }

  void enter(std::uint32_t v, EdgeIndex e, double pos, double t) {
    queues_[e].push_back(v);
    vehicles_[v].pos = pos;
    log_.entries.push_back({v, e, t});
  }

  void insert_due(double t);
  void place_teleporting(double t);
  void move_all(std::uint64_t step, double t);
  void teleport_stuck(double t);
  void emit(const TrajectoryPoint& p) {
    if (on_point_) on_point_(p);
    if (cfg_.record_trajectories) log_.points.push_back(p);
  }
  bool try_teleport(std::uint32_t v, double t);

  const RoadNetwork& net_;
  const SimConfig& cfg_;
  const PointCallback& on_point_;
  std::vector<std::deque<std::uint32_t>> queues_;
  std::vector<std::deque<std::uint32_t>> insert_queues_;
  std::set<EdgeIndex> insert_edges_;
  std::vector<std::size_t> capacity_;
  std::vector<int> signal_group_;
  std::vector<Vehicle> vehicles_;
  std::vector<std::uint32_t> by_departure_;
  std::size_t next_departure_ = 0;
  std::vector<std::uint32_t> teleporting_;
  std::size_t arrived_ = 0;
  std::size_t teleports_ = 0;
  TrajectoryLog log_;
};

void Engine::insert_due(double t) {
  while (next_departure_ < by_departure_.size() && vehicles_[by_departure_[next_departure_]].depart <= t) {
    const auto v = by_departure_[next_departure_++];
    const EdgeIndex origin = vehicles_[v].path->front();
    vehicles_[v].state = State::waiting_insert;
    insert_queues_[origin].push_back(v);
    insert_edges_.insert(origin);
  }
  for (auto it = insert_edges_.begin(); it != insert_edges_.end();) {
    const EdgeIndex e = *it;
    auto& waiting = insert_queues_[e];
    if (has_room(e)) {
      const auto v = waiting.front();
      waiting.pop_front();
      auto& veh = vehicles_[v];
      veh.state = State::driving;
      veh.speed = 0.0;
      veh.stopped_for = 0.0;
      log_.inserted[v] = t;
      enter(v, e, 0.0, t);
    }
    it = waiting.empty() ? insert_edges_.erase(it) : std::next(it);
  }
}

bool Engine::try_teleport(std::uint32_t v, double t) {
  auto& veh = vehicles_[v];
  const auto& path = *veh.path;
  for (std::size_t j = veh.route_pos + 1; j < path.size(); ++j) {
    if (!has_room(path[j])) continue;
    veh.route_pos = j;
    veh.speed = 0.0;
    veh.stopped_for = 0.0;
    veh.state = State::driving;
    enter(v, path[j], 0.0, t);
    return true;
  }
  return false;
}

void Engine::place_teleporting(double t) {
  std::erase_if(teleporting_, [&](std::uint32_t v) { return try_teleport(v, t); });
}

void Engine::move_all(std::uint64_t step, double t) {
  const double dt = cfg_.dt;
  std::vector<std::uint32_t> snapshot;
  for (EdgeIndex e = 0; e < net_.edge_count(); ++e) {
    auto& q = queues_[e];
    if (q.empty()) continue;
    snapshot.assign(q.begin(), q.end());
    const auto& edge = net_.edge(e);
    std::size_t removed = 0;
    for (std::size_t k = 0; k < snapshot.size(); ++k) {
      const auto v = snapshot[k];
      auto& veh = vehicles_[v];
      if (veh.moved_step == step) continue;
      const std::size_t live = k - removed;
      const bool last_edge = veh.route_pos + 1 == veh.path->size();

      std::optional<Leader> leader;
      bool may_leave = false;
      EdgeIndex next = e;
      if (live > 0) {
        const auto& lead = vehicles_[q[live - 1]];
        leader = Leader{lead.speed, lead.pos - cfg_.vehicle_length - cfg_.min_gap - veh.pos};
      } else if (!last_edge) {
        next = (*veh.path)[veh.route_pos + 1];
        may_leave = green(e, t) && queues_[next].size() < capacity_[next];
        if (!may_leave) {
          leader = Leader{0.0, edge.length - veh.pos};
        } else if (!queues_[next].empty()) {
          const auto& lead = vehicles_[queues_[next].back()];
          leader = Leader{lead.speed, edge.length - veh.pos + lead.pos - cfg_.vehicle_length - cfg_.min_gap};
        }
      }

      const double eta = veh.rng.uniform01();
      double v_new = car_following_speed(veh.speed, leader, edge.speed_limit, cfg_, eta);
      if (leader) v_new = std::min(v_new, std::max(0.0, leader->gap) / dt);
      const double accel = (v_new - veh.speed) / dt;
      emit({v, e, t, veh.pos, v_new, accel});

      double new_pos = veh.pos + v_new * dt;
      veh.speed = v_new;
      veh.stopped_for = v_new < 0.1 ? veh.stopped_for + dt : 0.0;
      veh.moved_step = step;

      if (live == 0 && new_pos >= edge.length) {
        if (last_edge) {
          q.pop_front();
          ++removed;
          veh.state = State::arrived;
          veh.pos = edge.length;
          log_.arrival[v] = t + dt;
          ++arrived_;
          continue;
        }
        if (may_leave) {
          q.pop_front();
          ++removed;
          ++veh.route_pos;
          double pos_next = std::min(new_pos - edge.length, net_.edge(next).length);
          if (!queues_[next].empty()) {
            const auto& lead = vehicles_[queues_[next].back()];
            pos_next = std::min(pos_next, std::max(0.0, lead.pos - cfg_.vehicle_length - cfg_.min_gap));
          }
          enter(v, next, pos_next, t + dt);
          continue;
        }
        new_pos = edge.length;
      }
      if (live > 0) {
        const auto& lead = vehicles_[q[live - 1]];
        new_pos = std::min(new_pos, lead.pos - cfg_.vehicle_length - cfg_.min_gap);
      }
      veh.pos = std::clamp(new_pos, veh.pos, edge.length);
    }
  }
}

void Engine::teleport_stuck(double t) {
  for (EdgeIndex e = 0; e < net_.edge_count(); ++e) {
    auto& q = queues_[e];
    if (q.empty()) continue;
    const auto v = q.front();
    auto& veh = vehicles_[v];
    if (veh.route_pos + 1 == veh.path->size() || veh.stopped_for < cfg_.teleport_threshold) continue;
    q.pop_front();
    ++teleports_;
    if (!try_teleport(v, t)) {
      veh.state = State::teleporting;
      teleporting_.push_back(v);
    }
  }
}

SimResult Engine::run(std::vector<const routing::RoutedPath*> paths, std::vector<double> depart,
                      std::vector<bool> extra) {
  const std::size_t n = paths.size();
  vehicles_.resize(n);
  log_.vehicle_ids.resize(n);
  log_.is_extra = std::move(extra);
  log_.depart = depart;
  log_.inserted.assign(n, std::nullopt);
  log_.arrival.assign(n, std::nullopt);
  for (std::size_t v = 0; v < n; ++v) {
    auto& veh = vehicles_[v];
    veh.path = &paths[v]->edges;
    veh.depart = depart[v];
    veh.rng = Rng(derive_seed(cfg_.seed, {hash_string(paths[v]->vehicle_id)}));
    log_.vehicle_ids[v] = paths[v]->vehicle_id;
  }
  by_departure_.resize(n);
  std::iota(by_departure_.begin(), by_departure_.end(), 0u);
  std::stable_sort(by_departure_.begin(), by_departure_.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return vehicles_[a].depart < vehicles_[b].depart; });

  const double stop = cfg_.stop_time();
  double t = 0.0;
  std::uint64_t step = 0;
  while (arrived_ < n && t < stop) {
    place_teleporting(t);
    insert_due(t);
    move_all(step, t);
    ++step;
    t = static_cast<double>(step) * cfg_.dt;
    teleport_stuck(t);
  }

  SimResult out;
  auto& s = out.stats;
  s.vehicles = n;
  s.arrived = arrived_;
  s.teleports = teleports_;
  s.end_time = t;
  double sum = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    if (log_.inserted[v]) ++s.inserted;
    if (!log_.is_extra[v] && log_.arrival[v]) {
      ++s.demand_arrived;
      sum += *log_.arrival[v] - log_.depart[v];
    }
  }
  s.en_route = s.inserted - s.arrived;
  s.waiting_insertion = n - s.inserted;
  s.mean_travel_time = s.demand_arrived ? sum / static_cast<double>(s.demand_arrived) : 0.0;
  out.log = std::move(log_);
  return out;
}

}  // namespace

SimResult simulate(const RoadNetwork& net, const routing::RoutedDemand& demand, const DepartureSchedule& sched,
                   const SimConfig& cfg, const ExtraVehicles& extra, const PointCallback& on_point) {
  cfg.validate();
  if (sched.times.size() != demand.size())
    throw ValidationError({"simulate: schedule has " + std::to_string(sched.times.size()) + " entries for " +
                           std::to_string(demand.size()) + " paths"});
  if (extra.depart.size() != extra.paths.size()) throw ValidationError({"simulate: extra vehicles lack departures"});

  std::vector<const routing::RoutedPath*> paths;
  std::vector<double> depart;
  std::vector<bool> is_extra;
  auto add = [&](const routing::RoutedPath& p, double t, bool x) {
    for (auto e : p.edges)
      if (e >= net.edge_count())
        throw ValidationError({"simulate: vehicle '" + p.vehicle_id + "' references an unknown edge"});
    if (p.edges.empty()) throw ValidationError({"simulate: vehicle '" + p.vehicle_id + "' has an empty path"});
    routing::validate_path(net, p.edges, p.edges.front(), p.edges.back());
    paths.push_back(&p);
    depart.push_back(t);
    is_extra.push_back(x);
  };
  for (std::size_t k = 0; k < demand.size(); ++k) add(demand.paths[k], sched.times[k], false);
  for (std::size_t k = 0; k < extra.size(); ++k) add(extra.paths[k], extra.depart[k], true);

  Engine engine(net, cfg, on_point);
  return engine.run(std::move(paths), std::move(depart), std::move(is_extra));
}

std::vector<std::optional<double>> travel_times(const TrajectoryLog& log) {
  std::vector<std::optional<double>> out(log.vehicle_count());
  for (std::size_t v = 0; v < log.vehicle_count(); ++v)
    if (log.arrival[v]) out[v] = *log.arrival[v] - log.depart[v];
  return out;
}

std::vector<double> arrived_travel_times(const TrajectoryLog& log) {
  std::vector<double> out;
  for (std::size_t v = 0; v < log.vehicle_count(); ++v)
    if (!log.is_extra[v] && log.arrival[v]) out.push_back(*log.arrival[v] - log.depart[v]);
  return out;
}

// ---------------------------------------------------------------------------
// I/O

namespace {
const std::vector<std::string> kTrajectoryHeader{"vehicle_id", "time", "edge_id", "pos", "speed", "accel"};
const std::vector<std::string> kScheduleHeader{"vehicle_id", "depart"};
}  // namespace

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryLog& log, const RoadNetwork& net) {
  std::ostringstream os;
  io::write_csv_row(os, kTrajectoryHeader);
  for (const auto& p : log.points) {
    io::write_csv_row(os, {log.vehicle_ids[p.vehicle], io::format_double(p.time), net.edge(p.edge).id,
                           io::format_double(p.pos), io::format_double(p.speed), io::format_double(p.accel)});
  }
  io::write_text(path, os.str());
}

TrajectoryLog read_trajectory_csv(const std::filesystem::path& path, const RoadNetwork& net) {
  const auto table = io::read_csv(path, kTrajectoryHeader);
  TrajectoryLog log;
  std::unordered_map<std::string, std::uint32_t> ids;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = path.string() + ":" + std::to_string(table.lines[i]);
    auto [it, fresh] = ids.emplace(row[0], static_cast<std::uint32_t>(log.vehicle_ids.size()));
    if (fresh) {
      log.vehicle_ids.push_back(row[0]);
      log.is_extra.push_back(false);
      log.depart.push_back(0.0);
      log.inserted.emplace_back();
      log.arrival.emplace_back();
    }
    auto e = net.find_edge(row[2]);
    if (!e) throw ValidationError({where + ": unknown edge '" + row[2] + "'"});
    log.points.push_back({it->second, *e, io::parse_double(row[1], where), io::parse_double(row[3], where),
                          io::parse_double(row[4], where), io::parse_double(row[5], where)});
  }
  return log;
}

std::string stats_to_json(const SimStats& s) {
  nlohmann::ordered_json j;
  j["teleports"] = s.teleports;
  j["arrived"] = s.arrived;
  j["mean_travel_time"] = s.mean_travel_time;
  j["vehicles"] = s.vehicles;
  j["inserted"] = s.inserted;
  j["en_route"] = s.en_route;
  j["waiting_insertion"] = s.waiting_insertion;
  j["end_time"] = s.end_time;
  return j.dump(1) + "\n";
}

void write_schedule_csv(const std::filesystem::path& path, const routing::RoutedDemand& d,
                        const DepartureSchedule& s) {
  std::ostringstream os;
  io::write_csv_row(os, kScheduleHeader);
  for (std::size_t k = 0; k < d.size(); ++k) io::write_csv_row(os, {d.paths[k].vehicle_id, io::format_double(s.times[k])});
  io::write_text(path, os.str());
}

DepartureSchedule read_schedule_csv(const std::filesystem::path& path, const routing::RoutedDemand& d) {
  const auto table = io::read_csv(path, kScheduleHeader);
  std::unordered_map<std::string, double> by_id;
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    by_id[table.rows[i][0]] = io::parse_double(table.rows[i][1], path.string() + ":" + std::to_string(table.lines[i]));
  DepartureSchedule s;
  std::vector<std::string> issues;
  for (const auto& p : d.paths) {
    auto it = by_id.find(p.vehicle_id);
    if (it == by_id.end()) {
      issues.push_back("no departure for vehicle '" + p.vehicle_id + "'");
      continue;
    }
    s.times.push_back(it->second);
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return s;
}

}  // namespace routemix::sim
