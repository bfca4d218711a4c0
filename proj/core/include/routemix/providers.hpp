#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "routemix/network.hpp"
#include "routemix/routing.hpp"

namespace routemix::routing {

/// Source of navigation-app style paths. Implementations return edge ids;
/// validation against the network happens in external_route.
class NavigationProvider {
 public:
  virtual ~NavigationProvider() = default;
  virtual std::string name() const = 0;
  virtual std::vector<std::string> route(const RoadNetwork& net, EdgeIndex origin, EdgeIndex dest) = 0;
};

enum class MissingFixture { error, fastest };

/// Replays recorded paths from `<dir>/<origin>__<dest>.json`. Each file holds
/// either an array of edge ids or an object with an "edges" array.
class FixtureProvider final : public NavigationProvider {
 public:
  FixtureProvider(std::filesystem::path dir, std::string name = "fixture",
                  MissingFixture fallback = MissingFixture::error);

  std::string name() const override { return name_; }
  std::vector<std::string> route(const RoadNetwork& net, EdgeIndex origin, EdgeIndex dest) override;

  static std::filesystem::path fixture_path(const std::filesystem::path& dir, std::string_view origin,
                                            std::string_view dest);

 private:
  std::filesystem::path dir_;
  std::string name_;
  MissingFixture fallback_;
};

/// Writes fixture files in the format FixtureProvider reads.
void write_fixture(const std::filesystem::path& dir, const RoadNetwork& net, std::span<const EdgeIndex> path);

/// Exact fastest path on a fixed network; the deterministic "navigation app"
/// used in tests and synthetic experiments.
class FastestProvider final : public NavigationProvider {
 public:
  explicit FastestProvider(const RoadNetwork& net, std::string name = "fastest")
      : name_(std::move(name)), router_(net) {}
  std::string name() const override { return name_; }
  std::vector<std::string> route(const RoadNetwork& net, EdgeIndex origin, EdgeIndex dest) override;

 private:
  std::string name_;
  Router router_;
};

/// Generic HTTP routing client.
///
/// POSTs {"origin_edge","dest_edge","origin":{"x","y"},"destination":{"x","y"}}
/// where the coordinates are the origin edge's source node and the
/// destination edge's target node, and expects {"edges":[...]} back.
class HttpProvider final : public NavigationProvider {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string path = "/route";
    std::chrono::milliseconds timeout{5000};
    std::string name = "http";
  };

  explicit HttpProvider(Options opts) : opts_(std::move(opts)) {}
  std::string name() const override { return opts_.name; }
  std::vector<std::string> route(const RoadNetwork& net, EdgeIndex origin, EdgeIndex dest) override;

 private:
  Options opts_;
};

}  // namespace routemix::routing
