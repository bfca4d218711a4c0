#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <thread>

#include "routemix/error.hpp"
#include "routemix/providers.hpp"
#include "routemix/table_io.hpp"

using namespace routemix;
using namespace routemix::routing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("routemix_providers_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(FixtureProvider, ReplaysRecordedPath) {
  const auto net = network::synth_grid(3, 3, 100, 10);
  const auto dir = scratch("replay");
  const auto o = net.edge_index("e0_0_E"), d = net.edge_index("e2_2_W");
  // A deliberately non-fastest but valid detour.
  const std::vector<network::EdgeIndex> detour{o, net.edge_index("e0_1_E"), net.edge_index("e0_2_N"),
                                               net.edge_index("e1_2_N"), d};
  write_fixture(dir, net, detour);
  FixtureProvider p(dir, "app");
  const auto r = external_route(p, net, o, d);
  EXPECT_EQ(r.edges, detour);
  EXPECT_EQ(r.source.label(), "EXTERNAL(app)");
}

TEST(FixtureProvider, ObjectFormatAccepted) {
  const auto net = network::synth_grid(2, 2, 100, 10);
  const auto dir = scratch("object");
  io::write_text(FixtureProvider::fixture_path(dir, "e0_0_E", "e0_1_N"),
                 R"({"edges":["e0_0_E","e0_1_N"]})");
  FixtureProvider p(dir);
  EXPECT_EQ(external_route(p, net, net.edge_index("e0_0_E"), net.edge_index("e0_1_N")).edges.size(), 2u);
}

TEST(FixtureProvider, RejectsNonAdjacentPath) {
  const auto net = network::synth_grid(3, 3, 100, 10);
  const auto dir = scratch("gap");
  io::write_text(FixtureProvider::fixture_path(dir, "e0_0_E", "e2_2_W"), R"(["e0_0_E","e2_2_W"])");
  FixtureProvider p(dir);
  EXPECT_THROW(external_route(p, net, net.edge_index("e0_0_E"), net.edge_index("e2_2_W")), ValidationError);
}

TEST(FixtureProvider, RejectsUnknownEdge) {
  const auto net = network::synth_grid(2, 2, 100, 10);
  const auto dir = scratch("unknown");
  io::write_text(FixtureProvider::fixture_path(dir, "e0_0_E", "e0_1_N"), R"(["e0_0_E","nope","e0_1_N"])");
  FixtureProvider p(dir);
  EXPECT_THROW(external_route(p, net, net.edge_index("e0_0_E"), net.edge_index("e0_1_N")), ValidationError);
}

TEST(FixtureProvider, MissingFixture) {
  const auto net = network::synth_grid(3, 3, 100, 10);
  const auto dir = scratch("missing");
  const auto o = net.edge_index("e0_0_E"), d = net.edge_index("e2_2_W");
  FixtureProvider strict(dir);
  EXPECT_THROW(external_route(strict, net, o, d), ProviderError);
  FixtureProvider lenient(dir, "fixture", MissingFixture::fastest);
  EXPECT_EQ(external_route(lenient, net, o, d).edges, fastest_path(net, o, d).edges);
}

TEST(FastestProvider, BoundToItsNetwork) {
  const auto net = network::synth_grid(3, 3, 100, 10);
  const auto other = network::synth_grid(3, 3, 100, 10);
  FastestProvider p(net);
  EXPECT_NO_THROW(external_route(p, net, 0, 5));
  EXPECT_THROW(p.route(other, 0, 5), ProviderError);
}

class HttpProviderTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/route", [this](const httplib::Request& req, httplib::Response& res) {
      last_request_ = nlohmann::json::parse(req.body);
      if (mode_ == 1) {
        res.status = 503;
        return;
      }
      if (mode_ == 2) {
        res.set_content("not json", "text/plain");
        return;
      }
      const auto o = net_.edge_index(last_request_["origin_edge"].get<std::string>());
      const auto d = net_.edge_index(last_request_["dest_edge"].get<std::string>());
      nlohmann::json out;
      for (auto e : fastest_path(net_, o, d).edges) out["edges"].push_back(net_.edge(e).id);
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  HttpProvider client() {
    HttpProvider::Options o;
    o.port = port_;
    o.name = "mock";
    o.timeout = std::chrono::milliseconds(2000);
    return HttpProvider(o);
  }

  network::RoadNetwork net_ = network::synth_grid(4, 4, 100, 10);
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  int mode_ = 0;
  nlohmann::json last_request_;
};

TEST_F(HttpProviderTest, RoundTrip) {
  auto p = client();
  const auto o = net_.edge_index("e0_0_E"), d = net_.edge_index("e3_3_S");
  const auto r = external_route(p, net_, o, d);
  EXPECT_EQ(r.edges, fastest_path(net_, o, d).edges);
  EXPECT_EQ(r.source.label(), "EXTERNAL(mock)");
  EXPECT_DOUBLE_EQ(last_request_["origin"]["x"].get<double>(), 0.0);
  EXPECT_DOUBLE_EQ(last_request_["destination"]["x"].get<double>(), 300.0);
  EXPECT_DOUBLE_EQ(last_request_["destination"]["y"].get<double>(), 200.0);
}

TEST_F(HttpProviderTest, HttpErrorIsProviderError) {
  mode_ = 1;
  auto p = client();
  EXPECT_THROW(p.route(net_, 0, 3), ProviderError);
}

TEST_F(HttpProviderTest, MalformedBody) {
  mode_ = 2;
  auto p = client();
  EXPECT_THROW(p.route(net_, 0, 3), Error);
}

TEST(HttpProvider, ConnectionRefused) {
  HttpProvider::Options o;
  o.port = 1;  // nothing listens on a privileged port in the test sandbox
  o.timeout = std::chrono::milliseconds(500);
  HttpProvider p(o);
  const auto net = network::synth_grid(2, 2, 100, 10);
  EXPECT_THROW(p.route(net, 0, 1), ProviderError);
}
