#include "routemix/providers.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "routemix/error.hpp"
#include "routemix/table_io.hpp"

namespace routemix::routing {

FixtureProvider::FixtureProvider(std::filesystem::path dir, std::string name, MissingFixture fallback)
    : dir_(std::move(dir)), name_(std::move(name)), fallback_(fallback) {}

std::filesystem::path FixtureProvider::fixture_path(const std::filesystem::path& dir, std::string_view origin,
                                                    std::string_view dest) {
  return dir / (std::string(origin) + "__" + std::string(dest) + ".json");
}

std::vector<std::string> FixtureProvider::route(const RoadNetwork& net, EdgeIndex origin, EdgeIndex dest) {
  const auto path = fixture_path(dir_, net.edge(origin).id, net.edge(dest).id);
  if (!std::filesystem::exists(path)) {
    if (fallback_ == MissingFixture::fastest) {
      std::vector<std::string> ids;
      for (auto e : fastest_path(net, origin, dest).edges) ids.push_back(net.edge(e).id);
      return ids;
    }
    throw ProviderError("no fixture for (" + net.edge(origin).id + ", " + net.edge(dest).id + "): " + path.string());
  }
  const auto doc = io::parse_json(io::read_text(path), path.string());
  const auto& arr = doc.is_object() && doc.contains("edges") ? doc["edges"] : doc;
  if (!arr.is_array()) throw ParseError(path.string(), "expected an array of edge ids");
  std::vector<std::string> ids;
  for (const auto& v : arr) {
    if (!v.is_string()) throw ParseError(path.string(), "edge ids must be strings");
    ids.push_back(v.get<std::string>());
  }
  return ids;
}

void write_fixture(const std::filesystem::path& dir, const RoadNetwork& net, std::span<const EdgeIndex> path) {
  if (path.empty()) throw ValidationError({"write_fixture: empty path"});
  nlohmann::json doc;
  doc["edges"] = nlohmann::json::array();
  for (auto e : path) doc["edges"].push_back(net.edge(e).id);
  io::write_text(FixtureProvider::fixture_path(dir, net.edge(path.front()).id, net.edge(path.back()).id),
                 doc.dump() + "\n");
}

std::vector<std::string> FastestProvider::route(const RoadNetwork& net, EdgeIndex origin, EdgeIndex dest) {
  if (&net != &router_.network()) throw ProviderError("provider '" + name_ + "' is bound to a different network");
  std::vector<std::string> ids;
  for (auto e : fastest_path(router_, origin, dest).edges) ids.push_back(net.edge(e).id);
  return ids;
}

std::vector<std::string> HttpProvider::route(const RoadNetwork& net, EdgeIndex origin, EdgeIndex dest) {
  httplib::Client client(opts_.host, opts_.port);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(opts_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(opts_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());

  const auto& o = net.node(net.source(origin));
  const auto& d = net.node(net.target(dest));
  nlohmann::json req;
  req["origin_edge"] = net.edge(origin).id;
  req["dest_edge"] = net.edge(dest).id;
  req["origin"] = {{"x", o.x}, {"y", o.y}};
  req["destination"] = {{"x", d.x}, {"y", d.y}};

  auto res = client.Post(opts_.path, req.dump(), "application/json");
  if (!res) throw ProviderError("provider '" + opts_.name + "': " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw ProviderError("provider '" + opts_.name + "': HTTP " + std::to_string(res->status));
  const auto doc = io::parse_json(res->body, opts_.name);
  if (!doc.is_object() || !doc.contains("edges") || !doc["edges"].is_array())
    throw ParseError(opts_.name, "response must be {\"edges\": [...]}");
  std::vector<std::string> ids;
  for (const auto& v : doc["edges"]) {
    if (!v.is_string()) throw ParseError(opts_.name, "edge ids must be strings");
    ids.push_back(v.get<std::string>());
  }
  return ids;
}

}  // namespace routemix::routing
