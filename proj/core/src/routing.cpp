#include "routemix/routing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include <nlohmann/json.hpp>

#include "routemix/error.hpp"
#include "routemix/providers.hpp"
#include "routemix/table_io.hpp"

namespace routemix::routing {

std::string PathSource::label() const {
  switch (kind) {
    case Kind::fastest:
      return "FASTEST";
    case Kind::perturbed:
      return "PERTURBED(" + io::format_double(w) + ")";
    case Kind::external:
      return "EXTERNAL(" + name + ")";
  }
  return "FASTEST";
}

PathSource PathSource::parse(std::string_view label) {
  auto inner = [&](std::string_view prefix) -> std::optional<std::string_view> {
    if (label.size() > prefix.size() + 1 && label.substr(0, prefix.size()) == prefix &&
        label[prefix.size()] == '(' && label.back() == ')')
      return label.substr(prefix.size() + 1, label.size() - prefix.size() - 2);
    return std::nullopt;
  };
  if (label == "FASTEST") return fastest();
  if (auto w = inner("PERTURBED")) return perturbed(io::parse_double(*w, "provider"));
  if (auto n = inner("EXTERNAL")) return external(std::string(*n));
  throw ParseError("provider", "unknown provider label '" + std::string(label) + "'");
}

void validate_path(const RoadNetwork& net, std::span<const EdgeIndex> edges, EdgeIndex origin, EdgeIndex dest) {
  std::vector<std::string> issues;
  if (edges.empty()) throw ValidationError({"path is empty"});
  if (edges.front() != origin)
    issues.push_back("path starts at '" + net.edge(edges.front()).id + "', expected '" + net.edge(origin).id + "'");
  if (edges.back() != dest)
    issues.push_back("path ends at '" + net.edge(edges.back()).id + "', expected '" + net.edge(dest).id + "'");
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    if (edges[k] >= net.edge_count() || edges[k + 1] >= net.edge_count()) {
      issues.push_back("path references an unknown edge index");
      break;
    }
    if (edges[k] == edges[k + 1]) issues.push_back("edge '" + net.edge(edges[k]).id + "' repeated consecutively");
    if (net.target(edges[k]) != net.source(edges[k + 1]))
      issues.push_back("edges '" + net.edge(edges[k]).id + "' and '" + net.edge(edges[k + 1]).id +
                       "' are not adjacent");
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

double path_cost(const RoadNetwork& net, std::span<const EdgeIndex> edges) {
  double c = 0.0;
  for (auto e : edges) c += network::free_flow_time(net.edge(e));
  return c;
}

// ---------------------------------------------------------------------------
// Router

Router::Router(const RoadNetwork& net)
    : net_(net), free_flow_(net.edge_count()), dist_(net.edge_count()), stamp_(net.edge_count(), 0) {
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) free_flow_[e] = network::free_flow_time(net.edge(e));
}

std::vector<EdgeIndex> Router::shortest(EdgeIndex origin, EdgeIndex dest, std::span<const double> weights) {
  if (origin >= net_.edge_count() || dest >= net_.edge_count()) throw RoutingError("edge index out of range");
  if (origin == dest) return {origin};

  // Stamps: 2*epoch = tentative, 2*epoch+1 = settled. Anything older is unseen.
  if (epoch_ >= std::numeric_limits<std::uint32_t>::max() / 2 - 1) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 0;
  }
  ++epoch_;
  const std::uint32_t tentative = 2 * epoch_, settled = 2 * epoch_ + 1;
  auto seen = [&](EdgeIndex e) { return stamp_[e] >= tentative; };

  // Backward search: dist_[e] = cheapest cost from e (inclusive) to dest (inclusive).
  using Item = std::pair<double, EdgeIndex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist_[dest] = weights[dest];
  stamp_[dest] = tentative;
  pq.emplace(dist_[dest], dest);
  double stop_at = std::numeric_limits<double>::infinity();
  while (!pq.empty()) {
    auto [d, f] = pq.top();
    if (d > stop_at) break;
    pq.pop();
    if (stamp_[f] == settled || d > dist_[f]) continue;
    stamp_[f] = settled;
    if (f == origin) stop_at = d + 1e-9 * std::max(1.0, d);
    for (EdgeIndex p : net_.incoming(net_.source(f))) {
      const double nd = weights[p] + d;
      if (!seen(p) || (stamp_[p] == tentative && nd < dist_[p])) {
        dist_[p] = nd;
        stamp_[p] = tentative;
        pq.emplace(nd, p);
      }
    }
  }
  if (stamp_[origin] != settled)
    throw RoutingError("no path from '" + net_.edge(origin).id + "' to '" + net_.edge(dest).id + "'");

  // Forward walk along tight successors, smallest id first.
  const double tol = 1e-9 * std::max(1.0, dist_[origin]);
  std::vector<EdgeIndex> path{origin};
  EdgeIndex cur = origin;
  while (cur != dest) {
    EdgeIndex best = cur;
    bool found = false;
    for (EdgeIndex f : net_.successors(cur)) {
      if (stamp_[f] != settled) continue;
      if (std::abs(weights[cur] + dist_[f] - dist_[cur]) > tol) continue;
      if (!found || net_.edge_rank(f) < net_.edge_rank(best)) {
        best = f;
        found = true;
      }
    }
    if (!found) throw RoutingError("shortest path reconstruction failed at '" + net_.edge(cur).id + "'");
    path.push_back(best);
    cur = best;
    if (path.size() > net_.edge_count() + 1) throw RoutingError("shortest path reconstruction looped");
  }
  return path;
}

RoutedPath fastest_path(Router& router, EdgeIndex origin, EdgeIndex dest) {
  return {{}, router.shortest(origin, dest, router.free_flow_weights()), PathSource::fastest()};
}

RoutedPath fastest_path(const RoadNetwork& net, EdgeIndex origin, EdgeIndex dest) {
  Router router(net);
  return fastest_path(router, origin, dest);
}

RoutedPath perturbed_fastest_path(Router& router, EdgeIndex origin, EdgeIndex dest, double w, Rng& rng) {
  if (!(w >= 1.0)) throw ValidationError({"perturbation parameter w must be >= 1"});
  const auto base = router.free_flow_weights();
  std::vector<double> weights(base.size());
  for (std::size_t e = 0; e < base.size(); ++e) weights[e] = base[e] * (1.0 + (w - 1.0) * rng.uniform01());
  return {{}, router.shortest(origin, dest, weights), PathSource::perturbed(w)};
}

RoutedPath perturbed_fastest_path(const RoadNetwork& net, EdgeIndex origin, EdgeIndex dest, double w, Rng& rng) {
  Router router(net);
  return perturbed_fastest_path(router, origin, dest, w, rng);
}

RoutedPath external_route(NavigationProvider& provider, const RoadNetwork& net, EdgeIndex origin, EdgeIndex dest) {
  const auto ids = provider.route(net, origin, dest);
  RoutedPath out;
  out.source = PathSource::external(provider.name());
  std::vector<std::string> issues;
  for (const auto& id : ids) {
    if (auto e = net.find_edge(id))
      out.edges.push_back(*e);
    else
      issues.push_back("provider '" + provider.name() + "' returned unknown edge '" + id + "'");
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  validate_path(net, out.edges, origin, dest);
  return out;
}

std::size_t provider_share(std::size_t n, int i) {
  if (i < 0 || i > 10) throw ValidationError({"mixing fraction i must be in 0..10"});
  return (n * static_cast<std::size_t>(i) + 5) / 10;
}

RoutedDemand route_demand(const demand::MobilityDemand& demand, int i, NavigationProvider& provider, double w,
                          std::uint64_t seed, const RoadNetwork& net) {
  if (demand.trips.empty()) throw ValidationError({"route_demand: empty demand"});
  const std::size_t n = demand.size();
  const std::size_t k = provider_share(n, i);

  // Partial Fisher-Yates: the first k positions form the provider subset.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng select(derive_seed(seed, {hash_string("provider-subset")}));
  for (std::size_t j = 0; j < k; ++j) std::swap(order[j], order[j + select.below(n - j)]);
  std::vector<bool> use_provider(n, false);
  for (std::size_t j = 0; j < k; ++j) use_provider[order[j]] = true;

  Router router(net);
  RoutedDemand out;
  out.mix_fraction = i;
  out.provider_name = provider.name();
  out.paths.reserve(n);
  for (std::size_t v = 0; v < n; ++v) {
    const auto& trip = demand.trips[v];
    try {
      RoutedPath p;
      if (use_provider[v]) {
        p = external_route(provider, net, trip.origin_edge, trip.dest_edge);
      } else {
        Rng rng(derive_seed(seed, {hash_string(trip.vehicle_id)}));
        p = perturbed_fastest_path(router, trip.origin_edge, trip.dest_edge, w, rng);
      }
      p.vehicle_id = trip.vehicle_id;
      out.paths.push_back(std::move(p));
    } catch (const Error& e) {
      throw RoutingError("vehicle '" + trip.vehicle_id + "': " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SSPD

namespace {

struct Point {
  double x, y;
};

std::vector<Point> sample_points(std::span<const EdgeIndex> path, const RoadNetwork& net) {
  std::vector<Point> pts;
  pts.reserve(path.size() + 1);
  for (auto e : path) {
    const auto& n = net.node(net.source(e));
    pts.push_back({n.x, n.y});
  }
  const auto& last = net.node(net.target(path.back()));
  pts.push_back({last.x, last.y});
  return pts;
}

double point_segment(Point p, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

double spd(const std::vector<Point>& from, const std::vector<Point>& to) {
  double sum = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < to.size(); ++k) best = std::min(best, point_segment(p, to[k], to[k + 1]));
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace

double sspd(std::span<const EdgeIndex> a, std::span<const EdgeIndex> b, const RoadNetwork& net) {
  if (a.empty() || b.empty()) throw ValidationError({"sspd: empty path"});
  const auto pa = sample_points(a, net), pb = sample_points(b, net);
  return 0.5 * (spd(pa, pb) + spd(pb, pa));
}

double sspd(const RoutedPath& a, const RoutedPath& b, const RoadNetwork& net) { return sspd(a.edges, b.edges, net); }

std::vector<PerturbationRow> perturbation_curve(const RoadNetwork& net, std::size_t n_pairs,
                                                std::span<const double> w_values, Rng& rng) {
  if (n_pairs == 0) throw ValidationError({"perturbation_curve: n_pairs must be >= 1"});
  if (net.edge_count() < 2) throw ValidationError({"perturbation_curve: network needs at least two edges"});
  Router router(net);
  std::vector<std::pair<EdgeIndex, EdgeIndex>> pairs;
  std::vector<std::vector<EdgeIndex>> reference;
  std::size_t attempts = 0;
  while (pairs.size() < n_pairs) {
    if (++attempts > 100 * n_pairs) throw RoutingError("perturbation_curve: too few connected edge pairs");
    const auto o = static_cast<EdgeIndex>(rng.below(net.edge_count()));
    const auto d = static_cast<EdgeIndex>(rng.below(net.edge_count()));
    if (o == d) continue;
    try {
      reference.push_back(router.shortest(o, d, router.free_flow_weights()));
      pairs.emplace_back(o, d);
    } catch (const RoutingError&) {
    }
  }
  std::vector<PerturbationRow> rows;
  for (double w : w_values) {
    double sum = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto p = perturbed_fastest_path(router, pairs[k].first, pairs[k].second, w, rng);
      sum += sspd(p.edges, reference[k], net);
    }
    rows.push_back({w, sum / static_cast<double>(pairs.size()), pairs.size()});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// JSON

std::string to_json(const RoutedDemand& d, const RoadNetwork& net) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& p : d.paths) {
    nlohmann::ordered_json o;
    o["vehicle_id"] = p.vehicle_id;
    o["provider"] = p.source.label();
    auto& edges = o["edges"] = nlohmann::ordered_json::array();
    for (auto e : p.edges) edges.push_back(net.edge(e).id);
    arr.push_back(std::move(o));
  }
  return arr.dump(1) + "\n";
}

RoutedDemand parse_routed_demand(std::string_view json_text, const RoadNetwork& net, std::string_view source) {
  const auto doc = io::parse_json(json_text, source);
  if (!doc.is_array()) throw ParseError(std::string(source), "routed demand must be a JSON array");
  RoutedDemand out;
  std::vector<std::string> issues;
  std::size_t external = 0;
  for (std::size_t k = 0; k < doc.size(); ++k) {
    const auto& o = doc[k];
    const std::string where = std::string(source) + "[" + std::to_string(k) + "]";
    if (!o.is_object() || !o.contains("vehicle_id") || !o.contains("provider") || !o.contains("edges") ||
        !o["edges"].is_array()) {
      issues.push_back(where + ": expected {vehicle_id, provider, edges}");
      continue;
    }
    RoutedPath p;
    p.vehicle_id = o["vehicle_id"].get<std::string>();
    p.source = PathSource::parse(o["provider"].get<std::string>());
    for (const auto& id : o["edges"]) {
      auto e = net.find_edge(id.get<std::string>());
      if (!e) {
        issues.push_back(where + ": unknown edge '" + id.get<std::string>() + "'");
        continue;
      }
      p.edges.push_back(*e);
    }
    if (p.edges.empty()) {
      issues.push_back(where + ": empty path");
      continue;
    }
    try {
      validate_path(net, p.edges, p.edges.front(), p.edges.back());
    } catch (const ValidationError& e) {
      for (const auto& i : e.issues()) issues.push_back(where + ": " + i);
    }
    if (p.source.kind == PathSource::Kind::external) {
      ++external;
      if (out.provider_name.empty()) out.provider_name = p.source.name;
    }
    out.paths.push_back(std::move(p));
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  if (!out.paths.empty())
    out.mix_fraction = static_cast<int>(std::lround(10.0 * static_cast<double>(external) / out.paths.size()));
  return out;
}

RoutedDemand load_routed_demand(const std::filesystem::path& path, const RoadNetwork& net) {
  return parse_routed_demand(io::read_text(path), net, path.string());
}

void save_routed_demand(const std::filesystem::path& path, const RoutedDemand& d, const RoadNetwork& net) {
  io::write_text(path, to_json(d, net));
}

}  // namespace routemix::routing
