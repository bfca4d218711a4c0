#include "cli_support.hpp"

#include <algorithm>
#include <sstream>

#include "routemix/demand.hpp"
#include "routemix/error.hpp"
#include "routemix/table_io.hpp"

namespace routemix::cli {

std::unique_ptr<routing::NavigationProvider> make_provider(const std::string& spec, const network::RoadNetwork& net,
                                                           const std::string& fallback) {
  if (fallback != "error" && fallback != "fastest")
    throw ValidationError({"--fallback must be error or fastest"});
  if (spec == "fastest") return std::make_unique<routing::FastestProvider>(net);
  if (spec.rfind("fixture:", 0) == 0) {
    const auto mode = fallback == "fastest" ? routing::MissingFixture::fastest : routing::MissingFixture::error;
    return std::make_unique<routing::FixtureProvider>(spec.substr(8), "fixture", mode);
  }
  if (spec.rfind("http://", 0) == 0) {
    routing::HttpProvider::Options o;
    auto rest = spec.substr(7);
    const auto slash = rest.find('/');
    if (slash != std::string::npos) {
      o.path = rest.substr(slash);
      rest = rest.substr(0, slash);
    }
    const auto colon = rest.find(':');
    o.host = rest.substr(0, colon);
    if (colon != std::string::npos) o.port = static_cast<int>(io::parse_int(rest.substr(colon + 1), "provider port"));
    return std::make_unique<routing::HttpProvider>(o);
  }
  throw ValidationError({"unknown provider '" + spec + "' (use fastest, fixture:<dir> or http://host:port/path)"});
}

emissions::EmissionCoefficients coefficients_or_default(const std::filesystem::path& path) {
  if (!path.empty()) return emissions::load_coefficients(path);
  return emissions::load_coefficients(std::filesystem::path(ROUTEMIX_DATA_DIR) / "default_passenger_car.json");
}

std::vector<double> read_travel_times(const std::filesystem::path& path) {
  const auto table = io::read_csv(path);
  const auto& h = table.header;
  auto col = std::find(h.begin(), h.end(), "travel_time_s");
  std::vector<double> out;
  if (col != h.end()) {
    const auto k = static_cast<std::size_t>(col - h.begin());
    for (std::size_t i = 0; i < table.rows.size(); ++i)
      out.push_back(io::parse_double(table.rows[i].at(k), path.string() + ":" + std::to_string(table.lines[i])));
    return out;
  }
  for (const auto& r : demand::read_trip_records(path)) out.push_back(r.travel_time());
  return out;
}

void write_travel_times(const std::filesystem::path& path, const std::vector<std::string>& ids,
                        const std::vector<double>& times) {
  std::ostringstream os;
  io::write_csv_row(os, {"vehicle_id", "travel_time_s"});
  for (std::size_t i = 0; i < ids.size(); ++i) io::write_csv_row(os, {ids[i], io::format_double(times[i])});
  io::write_text(path, os.str());
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(io::parse_double(item, "number list"));
  return out;
}

}  // namespace routemix::cli
