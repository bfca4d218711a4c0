#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "routemix/error.hpp"
#include "routemix/providers.hpp"
#include "routemix/routing.hpp"

using namespace routemix;
using namespace routemix::routing;
using network::EdgeIndex;
using network::RoadNetwork;

namespace {

/// s -> a -> t costs 10 + 10 s (fast), s -> b -> t costs 15 + 15 s (slow); plus
/// entry edge "in" and exit edge "out" so both branches are interior.
RoadNetwork diamond() {
  return network::parse_network(R"({"nodes":[
    {"id":"p","x":-100,"y":0},{"id":"s","x":0,"y":0},{"id":"a","x":100,"y":100},{"id":"b","x":100,"y":-100},
    {"id":"t","x":200,"y":0},{"id":"q","x":300,"y":0}],
   "edges":[
    {"id":"in","from":"p","to":"s","length":10,"speed_limit":10},
    {"id":"sa","from":"s","to":"a","length":100,"speed_limit":10},
    {"id":"at","from":"a","to":"t","length":100,"speed_limit":10},
    {"id":"sb","from":"s","to":"b","length":150,"speed_limit":10},
    {"id":"bt","from":"b","to":"t","length":150,"speed_limit":10},
    {"id":"out","from":"t","to":"q","length":10,"speed_limit":10}]})");
}

std::vector<std::string> ids(const RoadNetwork& net, const std::vector<EdgeIndex>& p) {
  std::vector<std::string> out;
  for (auto e : p) out.push_back(net.edge(e).id);
  return out;
}

}  // namespace

TEST(Fastest, TwoEdgeLine) {
  const auto net = oracle::line_network(3, 100, 10);
  const auto p = fastest_path(net, net.edge_index("f0"), net.edge_index("f1"));
  EXPECT_EQ(ids(net, p.edges), (std::vector<std::string>{"f0", "f1"}));
  EXPECT_EQ(p.source.kind, PathSource::Kind::fastest);
}

TEST(Fastest, DiamondPicksFastBranch) {
  const auto net = diamond();
  const auto p = fastest_path(net, net.edge_index("in"), net.edge_index("out"));
  EXPECT_EQ(ids(net, p.edges), (std::vector<std::string>{"in", "sa", "at", "out"}));
  EXPECT_DOUBLE_EQ(path_cost(net, p.edges), 1 + 10 + 10 + 1);
}

TEST(Fastest, SameOriginAndDestination) {
  const auto net = diamond();
  const auto p = fastest_path(net, net.edge_index("sa"), net.edge_index("sa"));
  EXPECT_EQ(p.edges.size(), 1u);
}

TEST(Fastest, UnreachableThrows) {
  const auto net = diamond();
  EXPECT_THROW(fastest_path(net, net.edge_index("out"), net.edge_index("in")), RoutingError);
}

TEST(Fastest, EqualCostBranchesPickSmallerIds) {
  const auto net = network::parse_network(R"({"nodes":[
    {"id":"s","x":0,"y":0},{"id":"a","x":1,"y":1},{"id":"b","x":1,"y":-1},{"id":"t","x":2,"y":0},{"id":"u","x":3,"y":0}],
   "edges":[
    {"id":"o","from":"u","to":"s","length":1,"speed_limit":1},
    {"id":"c2","from":"s","to":"a","length":5,"speed_limit":1},
    {"id":"d1","from":"a","to":"t","length":5,"speed_limit":1},
    {"id":"c1","from":"s","to":"b","length":5,"speed_limit":1},
    {"id":"d9","from":"b","to":"t","length":5,"speed_limit":1},
    {"id":"f","from":"t","to":"u","length":1,"speed_limit":1}]})");
  const auto p = fastest_path(net, net.edge_index("o"), net.edge_index("f"));
  EXPECT_EQ(ids(net, p.edges), (std::vector<std::string>{"o", "c1", "d9", "f"}));
}

TEST(Fastest, MatchesBellmanFordOnGrid) {
  const auto net = network::synth_grid(5, 5, 100, 10);
  Router router(net);
  Rng rng(77);
  std::vector<double> w(router.free_flow_weights().begin(), router.free_flow_weights().end());
  for (int k = 0; k < 100; ++k) {
    const auto o = static_cast<EdgeIndex>(rng.below(net.edge_count()));
    const auto d = static_cast<EdgeIndex>(rng.below(net.edge_count()));
    const auto p = fastest_path(router, o, d);
    const auto bf = oracle::bellman_ford_edges(net, o, w);
    EXPECT_NEAR(path_cost(net, p.edges), bf[d], 1e-9);
    EXPECT_NO_THROW(validate_path(net, p.edges, o, d));
  }
}

TEST(Fastest, MatchesBellmanFordOnRandomGraphs) {
  Rng rng(5);
  for (int g = 0; g < 30; ++g) {
    const auto net = oracle::random_graph(rng, 8, 25);
    Router router(net);
    std::vector<double> w(router.free_flow_weights().begin(), router.free_flow_weights().end());
    for (EdgeIndex o = 0; o < net.edge_count(); ++o) {
      const auto bf = oracle::bellman_ford_edges(net, o, w);
      for (EdgeIndex d = 0; d < net.edge_count(); ++d) {
        if (std::isinf(bf[d])) {
          EXPECT_THROW(router.shortest(o, d, w), RoutingError);
        } else {
          EXPECT_NEAR(path_cost(net, router.shortest(o, d, w)), bf[d], 1e-9);
        }
      }
    }
  }
}

TEST(Perturbed, WOneIsExact) {
  const auto net = network::synth_grid(6, 6, 100, 10, 2);
  Router router(net);
  Rng rng(1), pick(2);
  for (int k = 0; k < 50; ++k) {
    const auto o = static_cast<EdgeIndex>(pick.below(net.edge_count()));
    const auto d = static_cast<EdgeIndex>(pick.below(net.edge_count()));
    EXPECT_EQ(perturbed_fastest_path(router, o, d, 1.0, rng).edges, fastest_path(router, o, d).edges);
  }
}

TEST(Perturbed, RejectsWBelowOne) {
  const auto net = diamond();
  Rng rng(1);
  EXPECT_THROW(perturbed_fastest_path(net, 0, 5, 0.99, rng), ValidationError);
}

TEST(Perturbed, DiamondSlowBranchSometimes) {
  const auto net = diamond();
  Router router(net);
  Rng rng(99);
  const auto in = net.edge_index("in"), out = net.edge_index("out"), sb = net.edge_index("sb");
  int slow = 0;
  const int n = 10000;
  for (int k = 0; k < n; ++k) {
    const auto p = perturbed_fastest_path(router, in, out, 10.0, rng);
    slow += std::find(p.edges.begin(), p.edges.end(), sb) != p.edges.end();
  }
  const double freq = static_cast<double>(slow) / n;
  EXPECT_GT(freq, 0.0);
  EXPECT_LT(freq, 1.0);
  // Slow wins iff 15 (U3 + U4) < 10 (U1 + U2) with U ~ U[1, 10]; Monte Carlo of
  // the same event with an independent stream.
  Rng mc(123);
  int hits = 0;
  for (int k = 0; k < 200000; ++k) {
    const double f = 10 * (mc.uniform(1, 10) + mc.uniform(1, 10));
    const double s = 15 * (mc.uniform(1, 10) + mc.uniform(1, 10));
    hits += s < f;
  }
  EXPECT_NEAR(freq, hits / 200000.0, 0.015);
}

TEST(Perturbed, NeverBeatsTrueOptimum) {
  const auto net = network::synth_grid(7, 7, 100, 10);
  Router router(net);
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    const auto o = static_cast<EdgeIndex>(rng.below(net.edge_count()));
    const auto d = static_cast<EdgeIndex>(rng.below(net.edge_count()));
    const auto p = perturbed_fastest_path(router, o, d, 5.0, rng);
    EXPECT_NO_THROW(validate_path(net, p.edges, o, d));
    EXPECT_GE(path_cost(net, p.edges) + 1e-9, path_cost(net, fastest_path(router, o, d).edges));
    EXPECT_EQ(p.source.label(), "PERTURBED(5)");
  }
}

TEST(ValidatePath, RejectsBrokenPaths) {
  const auto net = diamond();
  auto e = [&](const char* id) { return net.edge_index(id); };
  EXPECT_THROW(validate_path(net, {}, e("in"), e("out")), ValidationError);
  std::vector<EdgeIndex> gap{e("in"), e("at"), e("out")};
  EXPECT_THROW(validate_path(net, gap, e("in"), e("out")), ValidationError);
  std::vector<EdgeIndex> wrong_end{e("in"), e("sa"), e("at")};
  EXPECT_THROW(validate_path(net, wrong_end, e("in"), e("out")), ValidationError);
  std::vector<EdgeIndex> ok{e("in"), e("sa"), e("at"), e("out")};
  EXPECT_NO_THROW(validate_path(net, ok, e("in"), e("out")));
}

TEST(RouteDemand, ShareAndBoundaries) {
  EXPECT_EQ(provider_share(15000, 5), 7500u);
  EXPECT_EQ(provider_share(7, 5), 4u);  // round half up
  EXPECT_EQ(provider_share(10, 0), 0u);
  EXPECT_EQ(provider_share(10, 10), 10u);

  const auto net = network::synth_grid(5, 5, 100, 10);
  FastestProvider provider(net, "tt");
  demand::MobilityDemand d;
  Rng rng(3);
  for (int v = 0; v < 60; ++v) {
    EdgeIndex a = static_cast<EdgeIndex>(rng.below(net.edge_count())), b;
    do b = static_cast<EdgeIndex>(rng.below(net.edge_count()));
    while (b == a);
    d.trips.push_back({demand::vehicle_id(v), a, b});
  }
  for (int i : {0, 3, 10}) {
    const auto r = route_demand(d, i, provider, 5.0, 11, net);
    std::size_t external = 0;
    for (const auto& p : r.paths) {
      external += p.source.kind == PathSource::Kind::external;
      EXPECT_NO_THROW(validate_path(net, p.edges, p.edges.front(), p.edges.back()));
    }
    EXPECT_EQ(external, provider_share(60, i));
    EXPECT_EQ(r.mix_fraction, i);
  }
}

TEST(RouteDemand, DeterministicBytes) {
  const auto net = network::synth_grid(5, 5, 100, 10);
  FastestProvider provider(net);
  demand::MobilityDemand d;
  Rng rng(3);
  for (int v = 0; v < 40; ++v) {
    EdgeIndex a = static_cast<EdgeIndex>(rng.below(net.edge_count())), b;
    do b = static_cast<EdgeIndex>(rng.below(net.edge_count()));
    while (b == a);
    d.trips.push_back({demand::vehicle_id(v), a, b});
  }
  const auto a = to_json(route_demand(d, 5, provider, 3.0, 42, net), net);
  const auto b = to_json(route_demand(d, 5, provider, 3.0, 42, net), net);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, to_json(route_demand(d, 5, provider, 3.0, 43, net), net));
  // JSON round trip.
  const auto back = parse_routed_demand(a, net);
  EXPECT_EQ(to_json(back, net), a);
  EXPECT_EQ(back.mix_fraction, 5);
}

TEST(RouteDemand, FailureNamesVehicle) {
  const auto net = diamond();
  FastestProvider provider(net);
  demand::MobilityDemand d;
  d.trips.push_back({"car-17", net.edge_index("out"), net.edge_index("in")});
  try {
    route_demand(d, 0, provider, 1.0, 1, net);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("car-17"), std::string::npos);
  }
}

TEST(Sspd, IdenticalIsZero) {
  const auto net = network::synth_grid(4, 4, 100, 10);
  const auto p = fastest_path(net, 0, 20);
  EXPECT_DOUBLE_EQ(sspd(p, p, net), 0.0);
}

TEST(Sspd, ParallelPathsOffset100m) {
  // Rows 0 and 1 of a grid with 100 m blocks, both eastbound over 3 blocks.
  const auto net = network::synth_grid(2, 4, 100, 10);
  std::vector<EdgeIndex> a{net.edge_index("e0_0_E"), net.edge_index("e0_1_E"), net.edge_index("e0_2_E")};
  std::vector<EdgeIndex> b{net.edge_index("e1_0_E"), net.edge_index("e1_1_E"), net.edge_index("e1_2_E")};
  EXPECT_NEAR(sspd(a, b, net), 100.0, 1e-12);
}

TEST(Sspd, HandComputedDetour) {
  // a: straight east along row 0, 2 blocks. b: up, east twice, down.
  const auto net = network::synth_grid(2, 3, 100, 10);
  std::vector<EdgeIndex> a{net.edge_index("e0_0_E"), net.edge_index("e0_1_E")};
  std::vector<EdgeIndex> b{net.edge_index("e0_0_N"), net.edge_index("e1_0_E"), net.edge_index("e1_1_E"),
                           net.edge_index("e1_2_S")};
  auto spd = [&](const std::vector<EdgeIndex>& from, const std::vector<EdgeIndex>& to) {
    std::vector<std::pair<double, double>> pts, line;
    for (auto e : from) pts.emplace_back(net.node(net.source(e)).x, net.node(net.source(e)).y);
    pts.emplace_back(net.node(net.target(from.back())).x, net.node(net.target(from.back())).y);
    for (auto e : to) line.emplace_back(net.node(net.source(e)).x, net.node(net.source(e)).y);
    line.emplace_back(net.node(net.target(to.back())).x, net.node(net.target(to.back())).y);
    double s = 0;
    for (auto [x, y] : pts) {
      double best = 1e300;
      for (std::size_t k = 0; k + 1 < line.size(); ++k)
        best = std::min(best, oracle::point_segment(x, y, line[k].first, line[k].second, line[k + 1].first,
                                                     line[k + 1].second));
      s += best;
    }
    return s / static_cast<double>(pts.size());
  };
  // a's points (0,0),(100,0),(200,0) are 0,100,0 from b -> 100/3.
  // b's points (0,0),(0,100),(100,100),(200,100),(200,0) are 0,100,100,100,0 -> 60.
  EXPECT_NEAR(spd(a, b), 100.0 / 3.0, 1e-12);
  EXPECT_NEAR(spd(b, a), 60.0, 1e-12);
  EXPECT_NEAR(sspd(a, b, net), (100.0 / 3.0 + 60.0) / 2.0, 1e-12);
}

TEST(Sspd, Symmetric) {
  const auto net = network::synth_grid(6, 6, 100, 10);
  Router router(net);
  Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    const auto o = static_cast<EdgeIndex>(rng.below(net.edge_count()));
    const auto d = static_cast<EdgeIndex>(rng.below(net.edge_count()));
    const auto a = perturbed_fastest_path(router, o, d, 4.0, rng);
    const auto b = perturbed_fastest_path(router, o, d, 4.0, rng);
    EXPECT_DOUBLE_EQ(sspd(a, b, net), sspd(b, a, net));
  }
}

TEST(PerturbationCurve, ZeroAtWOne) {
  const auto net = network::synth_grid(6, 6, 100, 10);
  Rng rng(1);
  const std::vector<double> ws{1.0, 3.0};
  const auto rows = perturbation_curve(net, 40, ws, rng);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].mean_sspd, 0.0);
  EXPECT_GT(rows[1].mean_sspd, 0.0);
  EXPECT_EQ(rows[1].pairs, 40u);
  Rng r2(1);
  EXPECT_THROW(perturbation_curve(net, 0, ws, r2), ValidationError);
}

TEST(PathSource, LabelsRoundTrip) {
  for (auto s : {PathSource::fastest(), PathSource::perturbed(2.5), PathSource::external("tomtom")})
    EXPECT_EQ(PathSource::parse(s.label()), s);
  EXPECT_THROW(PathSource::parse("BOGUS"), ParseError);
}
