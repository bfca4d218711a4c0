#include "routemix/emissions.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "routemix/error.hpp"
#include "routemix/table_io.hpp"

namespace routemix::emissions {

void EmissionCoefficients::validate() const {
  std::vector<std::string> issues;
  const double cs[] = {c0, c1, c2, c3, c4, c5};
  for (int k = 0; k < 6; ++k)
    if (!std::isfinite(cs[k])) issues.push_back("c" + std::to_string(k) + " is not finite");
  if (c0 < 0.0) issues.push_back("c0 must be >= 0");
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

namespace {

EmissionCoefficients from_json(const nlohmann::json& j, std::string_view where) {
  if (!j.is_object()) throw ParseError(std::string(where), "expected an object");
  EmissionCoefficients c;
  for (const auto& [key, value] : j.items()) {
    if (key == "label") {
      if (!value.is_string()) throw ParseError(std::string(where), "label must be a string");
      c.label = value.get<std::string>();
      continue;
    }
    double* slot = key == "c0" ? &c.c0 : key == "c1" ? &c.c1 : key == "c2" ? &c.c2
                 : key == "c3" ? &c.c3 : key == "c4" ? &c.c4 : key == "c5" ? &c.c5 : nullptr;
    if (!slot) throw ParseError(std::string(where), "unknown key '" + key + "'");
    if (!value.is_number()) throw ParseError(std::string(where), key + " must be a number");
    *slot = value.get<double>();
  }
  for (const char* k : {"c0", "c1", "c2", "c3", "c4", "c5"})
    if (!j.contains(k)) throw ParseError(std::string(where), std::string("missing ") + k);
  c.validate();
  return c;
}

}  // namespace

EmissionCoefficients parse_coefficients_json(std::string_view text, std::string_view where) {
  return from_json(io::parse_json(text, where), where);
}

EmissionCoefficients load_coefficients(const std::filesystem::path& path) {
  return from_json(io::load_config(path), path.string());
}

WeightedNetwork::WeightedNetwork(std::vector<std::string> edge_ids, std::vector<double> lengths,
                                 std::vector<double> mass_mg)
    : ids_(std::move(edge_ids)), lengths_(std::move(lengths)), mass_(std::move(mass_mg)) {
  if (ids_.size() != lengths_.size() || ids_.size() != mass_.size())
    throw ValidationError({"WeightedNetwork: column sizes differ"});
  std::vector<std::string> issues;
  for (std::size_t e = 0; e < ids_.size(); ++e) {
    if (!(mass_[e] >= 0.0) || !std::isfinite(mass_[e])) issues.push_back("edge '" + ids_[e] + "': bad mass");
    if (!(lengths_[e] > 0.0)) issues.push_back("edge '" + ids_[e] + "': length must be > 0");
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

WeightedNetwork WeightedNetwork::zeros(const RoadNetwork& net) {
  std::vector<std::string> ids;
  std::vector<double> lengths;
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    ids.push_back(net.edge(e).id);
    lengths.push_back(net.edge(e).length);
  }
  return {std::move(ids), std::move(lengths), std::vector<double>(net.edge_count(), 0.0)};
}

bool WeightedNetwork::same_network(const WeightedNetwork& other) const noexcept {
  return ids_ == other.ids_ && lengths_ == other.lengths_;
}

void EmissionAccumulator::Neumaier::add(double x) noexcept {
  const double t = sum + x;
  if (std::abs(sum) >= std::abs(x))
    comp += (sum - t) + x;
  else
    comp += (x - t) + sum;
  sum = t;
}

EmissionAccumulator::EmissionAccumulator(const RoadNetwork& net, EmissionCoefficients coef, double dt)
    : net_(net), coef_(std::move(coef)), dt_(dt), per_edge_(net.edge_count()) {
  coef_.validate();
  if (!(dt > 0.0)) throw ValidationError({"emissions: dt must be > 0"});
}

double EmissionAccumulator::add(const sim::TrajectoryPoint& p) {
  if (p.edge >= per_edge_.size())
    throw ValidationError({"emissions: trajectory point on unknown edge index " + std::to_string(p.edge)});
  const double m = instantaneous_emission(coef_, p.speed, p.accel) * dt_;
  per_edge_[p.edge].add(m);
  total_.add(m);
  return m;
}

WeightedNetwork EmissionAccumulator::finish() const {
  std::vector<std::string> ids;
  std::vector<double> lengths, mass;
  for (EdgeIndex e = 0; e < net_.edge_count(); ++e) {
    ids.push_back(net_.edge(e).id);
    lengths.push_back(net_.edge(e).length);
    mass.push_back(per_edge_[e].value());
  }
  return {std::move(ids), std::move(lengths), std::move(mass)};
}

WeightedNetwork aggregate(const sim::TrajectoryLog& log, const EmissionCoefficients& coef, const RoadNetwork& net,
                          double dt) {
  EmissionAccumulator acc(net, coef, dt);
  for (const auto& p : log.points) acc.add(p);
  return acc.finish();
}

double total_emissions(const WeightedNetwork& g) {
  double sum = 0.0, comp = 0.0;
  for (double x : g.mass()) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

std::vector<double> per_meter(const WeightedNetwork& g) {
  std::vector<double> out(g.size());
  for (std::size_t e = 0; e < g.size(); ++e) out[e] = g.mass()[e] / g.lengths()[e];
  return out;
}

std::vector<double> emission_diff(const WeightedNetwork& a, const WeightedNetwork& b) {
  if (!a.same_network(b)) throw ValidationError({"emission_diff: weighted networks are built on different roads"});
  auto out = per_meter(a);
  const auto pb = per_meter(b);
  for (std::size_t e = 0; e < out.size(); ++e) out[e] -= pb[e];
  return out;
}

std::vector<double> edge_masses(const WeightedNetwork& g, bool include_zero) {
  std::vector<double> out;
  out.reserve(g.size());
  for (double m : g.mass())
    if (include_zero || m > 0.0) out.push_back(m);
  return out;
}

void write_weighted_csv(const std::filesystem::path& path, const WeightedNetwork& g) {
  std::ostringstream os;
  io::write_csv_row(os, {"edge_id", "co2_mg", "co2_mg_per_m"});
  const auto pm = per_meter(g);
  for (std::size_t e = 0; e < g.size(); ++e)
    io::write_csv_row(os, {g.edge_ids()[e], io::format_double(g.mass()[e]), io::format_double(pm[e])});
  io::write_text(path, os.str());
}

WeightedNetwork read_weighted_csv(const std::filesystem::path& path, const RoadNetwork& net) {
  const auto table = io::read_csv(path, {"edge_id", "co2_mg", "co2_mg_per_m"});
  std::vector<double> mass(net.edge_count(), 0.0);
  std::vector<bool> seen(net.edge_count(), false);
  std::vector<std::string> issues;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::string where = path.string() + ":" + std::to_string(table.lines[i]);
    auto e = net.find_edge(table.rows[i][0]);
    if (!e) {
      issues.push_back(where + ": unknown edge '" + table.rows[i][0] + "'");
      continue;
    }
    if (seen[*e]) issues.push_back(where + ": duplicate edge '" + table.rows[i][0] + "'");
    seen[*e] = true;
    mass[*e] = io::parse_double(table.rows[i][1], where);
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  auto g = WeightedNetwork::zeros(net);
  std::vector<std::string> ids(g.edge_ids().begin(), g.edge_ids().end());
  std::vector<double> lengths(g.lengths().begin(), g.lengths().end());
  return {std::move(ids), std::move(lengths), std::move(mass)};
}

std::string to_geojson(const RoadNetwork& net, std::span<const double> values, std::string_view property) {
  if (values.size() != net.edge_count())
    throw ValidationError({"to_geojson: expected one value per edge"});
  nlohmann::ordered_json features = nlohmann::ordered_json::array();
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    const auto& a = net.node(net.source(e));
    const auto& b = net.node(net.target(e));
    nlohmann::ordered_json f;
    f["type"] = "Feature";
    f["geometry"] = {{"type", "LineString"}, {"coordinates", {{a.x, a.y}, {b.x, b.y}}}};
    f["properties"] = {{"edge_id", net.edge(e).id}, {std::string(property), values[e]}};
    features.push_back(std::move(f));
  }
  nlohmann::ordered_json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = std::move(features);
  return doc.dump() + "\n";
}

}  // namespace routemix::emissions
