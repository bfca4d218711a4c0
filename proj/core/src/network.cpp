#include "routemix/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "routemix/error.hpp"
#include "routemix/table_io.hpp"

namespace routemix::network {

namespace {

constexpr std::array<std::pair<RoadType, std::string_view>, 5> kRoadTypes{{
    {RoadType::motorway, "motorway"},
    {RoadType::primary, "primary"},
    {RoadType::secondary, "secondary"},
    {RoadType::residential, "residential"},
    {RoadType::other, "other"},
}};

void build_csr(std::size_t n_nodes, const std::vector<NodeIndex>& key, std::vector<std::uint32_t>& offsets,
               std::vector<EdgeIndex>& items) {
  offsets.assign(n_nodes + 1, 0);
  for (auto k : key) ++offsets[k + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  items.assign(key.size(), 0);
  auto cursor = offsets;
  for (EdgeIndex e = 0; e < key.size(); ++e) items[cursor[key[e]]++] = e;
}

}  // namespace

std::string_view to_string(RoadType t) noexcept {
  for (auto [k, name] : kRoadTypes)
    if (k == t) return name;
  return "other";
}

std::optional<RoadType> road_type_from_string(std::string_view s) noexcept {
  for (auto [k, name] : kRoadTypes)
    if (name == s) return k;
  return std::nullopt;
}

RoadNetwork::RoadNetwork(std::vector<Node> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  std::vector<std::string> issues;

  for (NodeIndex i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.id.empty()) issues.push_back("node #" + std::to_string(i) + ": empty id");
    if (!node_lookup_.emplace(n.id, i).second) issues.push_back("node '" + n.id + "': duplicate id");
    if (!std::isfinite(n.x) || !std::isfinite(n.y)) issues.push_back("node '" + n.id + "': non-finite coordinates");
  }

  edge_from_.resize(edges_.size());
  edge_to_.resize(edges_.size());
  for (EdgeIndex i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    const std::string tag = "edge '" + e.id + "'";
    if (e.id.empty()) issues.push_back("edge #" + std::to_string(i) + ": empty id");
    if (!edge_lookup_.emplace(e.id, i).second) issues.push_back(tag + ": duplicate id");
    auto f = node_lookup_.find(e.from);
    auto t = node_lookup_.find(e.to);
    if (f == node_lookup_.end()) issues.push_back(tag + ": unknown from node '" + e.from + "'");
    if (t == node_lookup_.end()) issues.push_back(tag + ": unknown to node '" + e.to + "'");
    edge_from_[i] = f == node_lookup_.end() ? 0 : f->second;
    edge_to_[i] = t == node_lookup_.end() ? 0 : t->second;
    if (e.from == e.to && !e.self_loop) issues.push_back(tag + ": from == to but not flagged self_loop");
    if (!(e.length > 0.0) || !std::isfinite(e.length)) issues.push_back(tag + ": length must be > 0");
    if (!(e.speed_limit > 0.0) || !std::isfinite(e.speed_limit))
      issues.push_back(tag + ": speed_limit must be > 0");
    if (e.lanes < 1) issues.push_back(tag + ": lanes must be >= 1");
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));

  build_csr(nodes_.size(), edge_from_, out_offsets_, out_edges_);
  build_csr(nodes_.size(), edge_to_, in_offsets_, in_edges_);

  std::vector<EdgeIndex> order(edges_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](EdgeIndex a, EdgeIndex b) { return edges_[a].id < edges_[b].id; });
  edge_rank_.resize(edges_.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) edge_rank_[order[r]] = r;
}

std::optional<NodeIndex> RoadNetwork::find_node(std::string_view id) const {
  auto it = node_lookup_.find(std::string(id));
  if (it == node_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<EdgeIndex> RoadNetwork::find_edge(std::string_view id) const {
  auto it = edge_lookup_.find(std::string(id));
  if (it == edge_lookup_.end()) return std::nullopt;
  return it->second;
}

EdgeIndex RoadNetwork::edge_index(std::string_view id) const {
  if (auto e = find_edge(id)) return *e;
  throw ValidationError({"unknown edge '" + std::string(id) + "'"});
}

std::span<const EdgeIndex> RoadNetwork::outgoing(NodeIndex n) const {
  return {out_edges_.data() + out_offsets_[n], out_offsets_[n + 1] - out_offsets_[n]};
}

std::span<const EdgeIndex> RoadNetwork::incoming(NodeIndex n) const {
  return {in_edges_.data() + in_offsets_[n], in_offsets_[n + 1] - in_offsets_[n]};
}

BoundingBox RoadNetwork::bbox() const {
  BoundingBox b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& n : nodes_) {
    b.x_min = std::min(b.x_min, n.x);
    b.y_min = std::min(b.y_min, n.y);
    b.x_max = std::max(b.x_max, n.x);
    b.y_max = std::max(b.y_max, n.y);
  }
  return b;
}

std::size_t edge_capacity(const Edge& e, double vehicle_length, double min_gap) noexcept {
  const double slots = static_cast<double>(e.lanes) * e.length / (vehicle_length + min_gap);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(slots)));
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where,
                    std::vector<std::string>& issues) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      issues.push_back(where + ": unknown field '" + it.key() + "'");
  }
}

template <typename T>
std::optional<T> field(const json& obj, const char* key, const std::string& where, std::vector<std::string>& issues,
                       bool required = true) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) issues.push_back(where + "." + key + ": missing");
    return std::nullopt;
  }
  if constexpr (std::is_same_v<T, std::string>) {
    if (!it->is_string()) {
      issues.push_back(where + "." + key + ": expected string");
      return std::nullopt;
    }
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!it->is_boolean()) {
      issues.push_back(where + "." + key + ": expected boolean");
      return std::nullopt;
    }
  } else if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer()) {
      issues.push_back(where + "." + key + ": expected integer");
      return std::nullopt;
    }
  } else {
    if (!it->is_number()) {
      issues.push_back(where + "." + key + ": expected number");
      return std::nullopt;
    }
  }
  return it->get<T>();
}

}  // namespace

RoadNetwork parse_network(std::string_view json_text, std::string_view source) {
  const json doc = io::parse_json(json_text, source);
  std::vector<std::string> issues;
  const std::string src(source);
  if (!doc.is_object()) throw ParseError(src, "top level must be an object");
  reject_unknown(doc, {"nodes", "edges"}, src, issues);
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) throw ParseError(src, "'nodes' must be an array");
  if (!doc.contains("edges") || !doc["edges"].is_array()) throw ParseError(src, "'edges' must be an array");

  std::vector<Node> nodes;
  nodes.reserve(doc["nodes"].size());
  for (std::size_t i = 0; i < doc["nodes"].size(); ++i) {
    const auto& jn = doc["nodes"][i];
    const std::string where = "nodes[" + std::to_string(i) + "]";
    if (!jn.is_object()) {
      issues.push_back(where + ": expected object");
      continue;
    }
    reject_unknown(jn, {"id", "x", "y", "traffic_light"}, where, issues);
    Node n;
    n.id = field<std::string>(jn, "id", where, issues).value_or("");
    n.x = field<double>(jn, "x", where, issues).value_or(0.0);
    n.y = field<double>(jn, "y", where, issues).value_or(0.0);
    n.has_traffic_light = field<bool>(jn, "traffic_light", where, issues, false).value_or(false);
    nodes.push_back(std::move(n));
  }

  std::vector<Edge> edges;
  edges.reserve(doc["edges"].size());
  for (std::size_t i = 0; i < doc["edges"].size(); ++i) {
    const auto& je = doc["edges"][i];
    const std::string where = "edges[" + std::to_string(i) + "]";
    if (!je.is_object()) {
      issues.push_back(where + ": expected object");
      continue;
    }
    reject_unknown(je, {"id", "from", "to", "length", "speed_limit", "lanes", "road_type", "self_loop"}, where, issues);
    Edge e;
    e.id = field<std::string>(je, "id", where, issues).value_or("");
    e.from = field<std::string>(je, "from", where, issues).value_or("");
    e.to = field<std::string>(je, "to", where, issues).value_or("");
    e.length = field<double>(je, "length", where, issues).value_or(0.0);
    e.speed_limit = field<double>(je, "speed_limit", where, issues).value_or(0.0);
    e.lanes = field<int>(je, "lanes", where, issues, false).value_or(1);
    e.self_loop = field<bool>(je, "self_loop", where, issues, false).value_or(false);
    if (auto rt = field<std::string>(je, "road_type", where, issues, false)) {
      if (auto parsed = road_type_from_string(*rt))
        e.road_type = *parsed;
      else
        issues.push_back(where + ".road_type: unknown road type '" + *rt + "'");
    }
    edges.push_back(std::move(e));
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return RoadNetwork(std::move(nodes), std::move(edges));
}

RoadNetwork load_network(const std::filesystem::path& path) {
  return parse_network(io::read_text(path), path.string());
}

std::string to_json(const RoadNetwork& net) {
  nlohmann::ordered_json doc;
  auto& jn = doc["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : net.nodes()) {
    nlohmann::ordered_json o;
    o["id"] = n.id;
    o["x"] = n.x;
    o["y"] = n.y;
    o["traffic_light"] = n.has_traffic_light;
    jn.push_back(std::move(o));
  }
  auto& je = doc["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : net.edges()) {
    nlohmann::ordered_json o;
    o["id"] = e.id;
    o["from"] = e.from;
    o["to"] = e.to;
    o["length"] = e.length;
    o["speed_limit"] = e.speed_limit;
    o["lanes"] = e.lanes;
    o["road_type"] = std::string(to_string(e.road_type));
    if (e.self_loop) o["self_loop"] = true;
    je.push_back(std::move(o));
  }
  return doc.dump(1) + "\n";
}

void save_network(const RoadNetwork& net, const std::filesystem::path& path) { io::write_text(path, to_json(net)); }

// ---------------------------------------------------------------------------
// Connectivity

std::vector<std::vector<NodeIndex>> strongly_connected_components(const RoadNetwork& net) {
  const auto n = static_cast<NodeIndex>(net.node_count());
  constexpr std::uint32_t kUnvisited = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> index(n, kUnvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<NodeIndex> stack;
  std::vector<std::vector<NodeIndex>> components;
  std::uint32_t counter = 0;

  // Iterative Tarjan: frames hold (node, next outgoing position).
  std::vector<std::pair<NodeIndex, std::size_t>> frames;
  for (NodeIndex root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    frames.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& [v, pos] = frames.back();
      const auto out = net.outgoing(v);
      if (pos < out.size()) {
        const NodeIndex w = net.target(out[pos++]);
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const NodeIndex done = v;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().first] = std::min(low[frames.back().first], low[done]);
      if (low[done] == index[done]) {
        std::vector<NodeIndex> comp;
        NodeIndex w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != done);
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
      }
    }
  }
  return components;
}

RoadNetwork largest_scc(const RoadNetwork& net) {
  if (net.node_count() == 0) throw ValidationError({"largest_scc: empty network"});
  const auto comps = strongly_connected_components(net);
  auto smallest_id = [&](const std::vector<NodeIndex>& c) {
    const std::string* best = &net.node(c.front()).id;
    for (auto v : c)
      if (net.node(v).id < *best) best = &net.node(v).id;
    return *best;
  };
  std::size_t best = 0;
  std::string best_id = smallest_id(comps[0]);
  for (std::size_t i = 1; i < comps.size(); ++i) {
    auto id = smallest_id(comps[i]);
    if (comps[i].size() > comps[best].size() || (comps[i].size() == comps[best].size() && id < best_id)) {
      best = i;
      best_id = std::move(id);
    }
  }
  std::vector<bool> keep(net.node_count(), false);
  for (auto v : comps[best]) keep[v] = true;

  std::vector<Node> nodes;
  for (NodeIndex v = 0; v < net.node_count(); ++v)
    if (keep[v]) nodes.push_back(net.node(v));
  std::vector<Edge> edges;
  for (EdgeIndex e = 0; e < net.edge_count(); ++e)
    if (keep[net.source(e)] && keep[net.target(e)]) edges.push_back(net.edge(e));
  return RoadNetwork(std::move(nodes), std::move(edges));
}

// ---------------------------------------------------------------------------
// Synthetic grid

RoadNetwork synth_grid(const GridOptions& o) {
  if (o.rows < 2 || o.cols < 2) throw ValidationError({"synth_grid: rows and cols must be >= 2"});
  if (!(o.block_length > 0.0) || !(o.speed_limit > 0.0))
    throw ValidationError({"synth_grid: block_length and speed_limit must be > 0"});
  if (o.light_period && *o.light_period < 1) throw ValidationError({"synth_grid: light_period must be >= 1"});

  const int width = static_cast<int>(std::to_string(std::max(o.rows, o.cols) - 1).size());
  auto pad = [width](int v) {
    auto s = std::to_string(v);
    return std::string(static_cast<std::size_t>(width) - s.size(), '0') + s;
  };
  auto node_id = [&](int r, int c) { return "n" + pad(r) + "_" + pad(c); };
  auto is_arterial = [&](int line) { return o.arterial_every > 0 && line % o.arterial_every == 0; };

  std::vector<Node> nodes;
  for (int r = 0; r < o.rows; ++r) {
    for (int c = 0; c < o.cols; ++c) {
      const int k = r * o.cols + c;
      Node n{node_id(r, c), c * o.block_length, r * o.block_length, false};
      if (o.light_period) n.has_traffic_light = (k % *o.light_period) == 0;
      nodes.push_back(std::move(n));
    }
  }

  std::vector<Edge> edges;
  auto add = [&](int r, int c, int r2, int c2, char dir, bool arterial) {
    Edge e;
    e.id = "e" + pad(r) + "_" + pad(c) + "_" + dir;
    e.from = node_id(r, c);
    e.to = node_id(r2, c2);
    e.length = o.block_length;
    e.speed_limit = arterial ? o.arterial_speed : o.speed_limit;
    e.lanes = arterial ? o.arterial_lanes : 1;
    e.road_type = arterial ? RoadType::primary : RoadType::residential;
    edges.push_back(std::move(e));
  };
  for (int r = 0; r < o.rows; ++r) {
    for (int c = 0; c < o.cols; ++c) {
      if (c + 1 < o.cols) add(r, c, r, c + 1, 'E', is_arterial(r));
      if (c > 0) add(r, c, r, c - 1, 'W', is_arterial(r));
      if (r + 1 < o.rows) add(r, c, r + 1, c, 'N', is_arterial(c));
      if (r > 0) add(r, c, r - 1, c, 'S', is_arterial(c));
    }
  }
  return RoadNetwork(std::move(nodes), std::move(edges));
}

RoadNetwork synth_grid(int rows, int cols, double block_length, double speed_limit, std::optional<int> light_period) {
  GridOptions o;
  o.rows = rows;
  o.cols = cols;
  o.block_length = block_length;
  o.speed_limit = speed_limit;
  o.light_period = light_period;
  return synth_grid(o);
}

}  // namespace routemix::network
