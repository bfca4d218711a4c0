#include <gtest/gtest.h>

#include <filesystem>
#include <queue>

#include "oracles.hpp"
#include "routemix/error.hpp"
#include "routemix/network.hpp"
#include "routemix/table_io.hpp"

using namespace routemix;
using namespace routemix::network;

namespace {

std::vector<std::vector<bool>> reachability(const RoadNetwork& net) {
  const auto n = net.node_count();
  std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
  for (NodeIndex s = 0; s < n; ++s) {
    std::queue<NodeIndex> q;
    q.push(s);
    r[s][s] = true;
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (auto e : net.outgoing(u))
        if (!r[s][net.target(e)]) {
          r[s][net.target(e)] = true;
          q.push(net.target(e));
        }
    }
  }
  return r;
}

bool strongly_connected(const RoadNetwork& net) {
  for (const auto& row : reachability(net))
    for (bool b : row)
      if (!b) return false;
  return true;
}

RoadNetwork cycle_with_spur() {
  return parse_network(R"({"nodes":[
    {"id":"a","x":0,"y":0},{"id":"b","x":1,"y":0},{"id":"c","x":1,"y":1},{"id":"d","x":0,"y":1},{"id":"s","x":2,"y":2}],
   "edges":[
    {"id":"ab","from":"a","to":"b","length":1,"speed_limit":1},
    {"id":"bc","from":"b","to":"c","length":1,"speed_limit":1},
    {"id":"cd","from":"c","to":"d","length":1,"speed_limit":1},
    {"id":"da","from":"d","to":"a","length":1,"speed_limit":1},
    {"id":"cs","from":"c","to":"s","length":1,"speed_limit":1}]})");
}

}  // namespace

TEST(Network, MinimalFileLoads) {
  const auto dir = std::filesystem::temp_directory_path() / "routemix_net_test";
  io::write_text(dir / "tiny.json", R"({"nodes":[{"id":"n1","x":0,"y":0},{"id":"n2","x":100,"y":0,"traffic_light":true}],
    "edges":[{"id":"e1","from":"n1","to":"n2","length":100,"speed_limit":10}]})");
  const auto net = load_network(dir / "tiny.json");
  EXPECT_EQ(net.node_count(), 2u);
  EXPECT_EQ(net.edge_count(), 1u);
  EXPECT_TRUE(net.node(1).has_traffic_light);
  EXPECT_EQ(net.edge(0).lanes, 1);
}

TEST(Network, MissingNodeIsNamed) {
  try {
    parse_network(R"({"nodes":[{"id":"n1","x":0,"y":0}],
      "edges":[{"id":"e1","from":"n1","to":"n9","length":100,"speed_limit":10}]})");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("n9"), std::string::npos);
  }
}

TEST(Network, NegativeLengthRejected) {
  try {
    parse_network(R"({"nodes":[{"id":"n1","x":0,"y":0},{"id":"n2","x":1,"y":0}],
      "edges":[{"id":"bad","from":"n1","to":"n2","length":-5,"speed_limit":10}]})");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
  }
}

TEST(Network, CollectsEveryIssue) {
  try {
    parse_network(R"({"nodes":[{"id":"n1","x":0,"y":0},{"id":"n1","x":1,"y":0}],
      "edges":[{"id":"e","from":"n1","to":"n1","length":0,"speed_limit":0,"lanes":0}]})");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_GE(e.issues().size(), 5u);
  }
}

TEST(Network, UnknownFieldAndSyntaxErrors) {
  // Schema problems are collected as validation issues; broken syntax is a parse error.
  EXPECT_THROW(parse_network(R"({"nodes":[{"id":"n1","x":0,"y":0,"z":3}],"edges":[]})"), ValidationError);
  EXPECT_THROW(parse_network(R"({"nodes":[],"edges":[],"extra":1})"), ValidationError);
  EXPECT_THROW(parse_network(R"({"nodes":[)"), ParseError);
  EXPECT_THROW(parse_network(R"({"nodes":[{"id":"n1","x":"zero","y":0}],"edges":[]})"), ValidationError);
}

TEST(Network, SelfLoopNeedsFlag) {
  const char* flagged = R"({"nodes":[{"id":"n","x":0,"y":0}],
    "edges":[{"id":"l","from":"n","to":"n","length":10,"speed_limit":5,"self_loop":true}]})";
  EXPECT_NO_THROW(parse_network(flagged));
  EXPECT_THROW(parse_network(R"({"nodes":[{"id":"n","x":0,"y":0}],
    "edges":[{"id":"l","from":"n","to":"n","length":10,"speed_limit":5}]})"),
               ValidationError);
}

TEST(Network, FreeFlowTime) {
  Edge e;
  e.length = 100;
  e.speed_limit = 10;
  EXPECT_DOUBLE_EQ(free_flow_time(e), 10.0);
  e.length = 250;
  e.speed_limit = 12.5;
  EXPECT_DOUBLE_EQ(free_flow_time(e), 20.0);
  e.length = 1;
  e.speed_limit = 50;
  EXPECT_DOUBLE_EQ(free_flow_time(e), 0.02);
}

TEST(Network, CapacityFormula) {
  Edge e;
  e.length = 100;
  e.lanes = 2;
  EXPECT_EQ(edge_capacity(e, 5.0, 2.5), 27u);  // ceil(200 / 7.5)
  e.length = 1;
  e.lanes = 1;
  EXPECT_EQ(edge_capacity(e, 5.0, 2.5), 1u);
}

TEST(Scc, FourCycleIsFixedPoint) {
  auto net = parse_network(R"({"nodes":[
    {"id":"a","x":0,"y":0},{"id":"b","x":1,"y":0},{"id":"c","x":1,"y":1},{"id":"d","x":0,"y":1}],
   "edges":[
    {"id":"ab","from":"a","to":"b","length":1,"speed_limit":1},
    {"id":"bc","from":"b","to":"c","length":1,"speed_limit":1},
    {"id":"cd","from":"c","to":"d","length":1,"speed_limit":1},
    {"id":"da","from":"d","to":"a","length":1,"speed_limit":1}]})");
  EXPECT_EQ(to_json(largest_scc(net)), to_json(net));
}

TEST(Scc, DanglingSpurRemoved) {
  const auto scc = largest_scc(cycle_with_spur());
  EXPECT_EQ(scc.node_count(), 4u);
  EXPECT_EQ(scc.edge_count(), 4u);
  EXPECT_FALSE(scc.find_edge("cs"));
  EXPECT_TRUE(strongly_connected(scc));
}

TEST(Scc, TieKeepsSmallestNodeId) {
  auto net = parse_network(R"({"nodes":[
    {"id":"x1","x":0,"y":0},{"id":"x2","x":1,"y":0},{"id":"x3","x":1,"y":1},
    {"id":"b1","x":5,"y":0},{"id":"b2","x":6,"y":0},{"id":"b3","x":6,"y":1}],
   "edges":[
    {"id":"p","from":"x1","to":"x2","length":1,"speed_limit":1},
    {"id":"q","from":"x2","to":"x3","length":1,"speed_limit":1},
    {"id":"r","from":"x3","to":"x1","length":1,"speed_limit":1},
    {"id":"s","from":"b1","to":"b2","length":1,"speed_limit":1},
    {"id":"t","from":"b2","to":"b3","length":1,"speed_limit":1},
    {"id":"u","from":"b3","to":"b1","length":1,"speed_limit":1}]})");
  const auto scc = largest_scc(net);
  EXPECT_EQ(scc.node_count(), 3u);
  EXPECT_TRUE(scc.find_node("b1"));
  EXPECT_FALSE(scc.find_node("x1"));
}

TEST(Scc, EmptyNetworkIsAnError) {
  RoadNetwork empty({}, {});
  EXPECT_THROW(largest_scc(empty), ValidationError);
}

TEST(Scc, RandomGraphsGiveStronglyConnectedResult) {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto net = oracle::random_graph(rng, 3 + static_cast<int>(rng.below(30)), 5 + static_cast<int>(rng.below(60)));
    const auto scc = largest_scc(net);
    EXPECT_TRUE(strongly_connected(scc));
    // No strictly larger strongly connected set exists: compare to brute-force classes.
    const auto r = reachability(net);
    std::size_t best = 0;
    for (NodeIndex a = 0; a < net.node_count(); ++a) {
      std::size_t size = 0;
      for (NodeIndex b = 0; b < net.node_count(); ++b) size += r[a][b] && r[b][a];
      best = std::max(best, size);
    }
    EXPECT_EQ(scc.node_count(), best);
  }
}

TEST(SynthGrid, Counts) {
  auto g2 = synth_grid(2, 2, 100, 10);
  EXPECT_EQ(g2.node_count(), 4u);
  EXPECT_EQ(g2.edge_count(), 8u);
  auto g3 = synth_grid(3, 3, 100, 10);
  EXPECT_EQ(g3.node_count(), 9u);
  EXPECT_EQ(g3.edge_count(), 24u);
}

TEST(SynthGrid, LightPeriodOneLightsEverything) {
  auto g = synth_grid(4, 3, 100, 10, 1);
  for (NodeIndex n = 0; n < g.node_count(); ++n) EXPECT_TRUE(g.node(n).has_traffic_light);
  auto h = synth_grid(4, 3, 100, 10, 2);
  std::size_t lit = 0;
  for (NodeIndex n = 0; n < h.node_count(); ++n) lit += h.node(n).has_traffic_light;
  EXPECT_EQ(lit, 6u);
}

TEST(SynthGrid, RejectsDegenerateSizes) {
  EXPECT_THROW(synth_grid(1, 5, 100, 10), ValidationError);
  EXPECT_THROW(synth_grid(5, 1, 100, 10), ValidationError);
}

TEST(SynthGrid, AlwaysStronglyConnected) {
  for (int r = 2; r <= 6; ++r)
    for (int c = 2; c <= 6; ++c) EXPECT_TRUE(strongly_connected(synth_grid(r, c, 50, 10)));
}

TEST(SynthGrid, ArterialsAreFaster) {
  GridOptions o;
  o.rows = o.cols = 7;
  o.arterial_every = 3;
  o.arterial_speed = 20;
  o.speed_limit = 10;
  const auto g = synth_grid(o);
  std::size_t fast = 0;
  for (EdgeIndex e = 0; e < g.edge_count(); ++e) {
    const auto& ed = g.edge(e);
    if (ed.speed_limit == 20) {
      ++fast;
      EXPECT_EQ(ed.road_type, RoadType::primary);
    } else {
      EXPECT_EQ(ed.road_type, RoadType::residential);
    }
  }
  // rows 0, 3, 6 and cols 0, 3, 6 each carry 6 blocks in both directions
  EXPECT_EQ(fast, 6u * 6u * 2u);
}

TEST(Network, CanonicalJsonRoundTrip) {
  GridOptions o;
  o.rows = 4;
  o.cols = 5;
  o.block_length = 123.456;
  o.light_period = 3;
  o.arterial_every = 2;
  const auto net = synth_grid(o);
  const auto text = to_json(net);
  const auto again = parse_network(text);
  EXPECT_EQ(to_json(again), text);
  const auto dir = std::filesystem::temp_directory_path() / "routemix_net_test";
  save_network(net, dir / "grid.json");
  EXPECT_EQ(io::read_text(dir / "grid.json"), text);
}

TEST(Network, AdjacencyMatchesEdges) {
  const auto net = synth_grid(4, 4, 100, 10);
  std::size_t out_total = 0, in_total = 0;
  for (NodeIndex n = 0; n < net.node_count(); ++n) {
    for (auto e : net.outgoing(n)) EXPECT_EQ(net.source(e), n);
    for (auto e : net.incoming(n)) EXPECT_EQ(net.target(e), n);
    out_total += net.outgoing(n).size();
    in_total += net.incoming(n).size();
  }
  EXPECT_EQ(out_total, net.edge_count());
  EXPECT_EQ(in_total, net.edge_count());
}
