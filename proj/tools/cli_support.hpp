#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "routemix/emissions.hpp"
#include "routemix/providers.hpp"

namespace routemix::cli {

/// "fastest", "fixture:<dir>" or "http://host:port/path".
std::unique_ptr<routing::NavigationProvider> make_provider(const std::string& spec, const network::RoadNetwork& net,
                                                           const std::string& fallback);

/// Explicit file, else the default passenger car shipped in data/.
emissions::EmissionCoefficients coefficients_or_default(const std::filesystem::path& path);

/// Travel times from a CSV with a travel_time_s column or from trip records.
std::vector<double> read_travel_times(const std::filesystem::path& path);
void write_travel_times(const std::filesystem::path& path, const std::vector<std::string>& ids,
                        const std::vector<double>& times);

std::vector<double> parse_number_list(const std::string& text);

}  // namespace routemix::cli
