#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace routemix::network {

using NodeIndex = std::uint32_t;
using EdgeIndex = std::uint32_t;

enum class RoadType { motorway, primary, secondary, residential, other };

std::string_view to_string(RoadType t) noexcept;
std::optional<RoadType> road_type_from_string(std::string_view s) noexcept;

/// Road intersection. Coordinates are projected planar meters.
struct Node {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  bool has_traffic_light = false;
};

/// Directed road segment between two intersections.
struct Edge {
  std::string id;
  std::string from;
  std::string to;
  double length = 0.0;       // m
  double speed_limit = 0.0;  // m/s
  int lanes = 1;
  RoadType road_type = RoadType::other;
  bool self_loop = false;    // must be set for from == to
};

struct BoundingBox {
  double x_min = 0.0, y_min = 0.0, x_max = 0.0, y_max = 0.0;
};

/// Immutable validated directed road graph.
///
/// Nodes and edges keep the order they were given in; indices are positions
/// in that order. Construction either succeeds with every invariant satisfied
/// or throws ValidationError listing all violations.
class RoadNetwork {
 public:
  RoadNetwork(std::vector<Node> nodes, std::vector<Edge> edges);

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Node& node(NodeIndex n) const { return nodes_[n]; }
  const Edge& edge(EdgeIndex e) const { return edges_[e]; }

  std::optional<NodeIndex> find_node(std::string_view id) const;
  std::optional<EdgeIndex> find_edge(std::string_view id) const;
  /// Like find_edge but throws ValidationError naming the missing id.
  EdgeIndex edge_index(std::string_view id) const;

  NodeIndex source(EdgeIndex e) const { return edge_from_[e]; }
  NodeIndex target(EdgeIndex e) const { return edge_to_[e]; }

  std::span<const EdgeIndex> outgoing(NodeIndex n) const;
  std::span<const EdgeIndex> incoming(NodeIndex n) const;
  /// Edges a vehicle can continue onto after `e`.
  std::span<const EdgeIndex> successors(EdgeIndex e) const { return outgoing(edge_to_[e]); }

  /// Position of the edge id in lexicographic order; used for tie-breaking.
  std::uint32_t edge_rank(EdgeIndex e) const { return edge_rank_[e]; }

  BoundingBox bbox() const;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, NodeIndex> node_lookup_;
  std::unordered_map<std::string, EdgeIndex> edge_lookup_;
  std::vector<NodeIndex> edge_from_, edge_to_;
  std::vector<std::uint32_t> out_offsets_, in_offsets_;
  std::vector<EdgeIndex> out_edges_, in_edges_;
  std::vector<std::uint32_t> edge_rank_;
};

/// Traversal time at the speed limit, seconds.
inline double free_flow_time(const Edge& e) noexcept { return e.length / e.speed_limit; }

/// Vehicles an edge can hold: ceil(lanes * length / (vehicle_length + min_gap)).
std::size_t edge_capacity(const Edge& e, double vehicle_length, double min_gap) noexcept;

RoadNetwork parse_network(std::string_view json_text, std::string_view source = "<network>");
RoadNetwork load_network(const std::filesystem::path& path);

/// Canonical JSON form: fixed key order, shortest round-trip numbers.
std::string to_json(const RoadNetwork& net);
void save_network(const RoadNetwork& net, const std::filesystem::path& path);

/// Subgraph induced by the largest strongly connected component. Ties go to
/// the component holding the lexicographically smallest node id.
RoadNetwork largest_scc(const RoadNetwork& net);

/// Strongly connected components as node-index lists (Tarjan).
std::vector<std::vector<NodeIndex>> strongly_connected_components(const RoadNetwork& net);

struct GridOptions {
  int rows = 2;
  int cols = 2;
  double block_length = 100.0;
  double speed_limit = 13.89;
  /// Every k-th intersection (row-major) gets a traffic light.
  std::optional<int> light_period;
  /// When > 0, every k-th row and column is a faster arterial road.
  int arterial_every = 0;
  double arterial_speed = 22.22;
  int arterial_lanes = 1;
};

/// Manhattan grid with two directed edges per block.
///
/// Node ids are "n<row>_<col>"; edge ids are "e<row>_<col>_<dir>" where dir is
/// one of E, W, N, S for the block leaving that node.
RoadNetwork synth_grid(const GridOptions& opts);
RoadNetwork synth_grid(int rows, int cols, double block_length, double speed_limit,
                       std::optional<int> light_period = std::nullopt);

}  // namespace routemix::network
