#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace routemix::io {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

double parse_double(std::string_view text, std::string_view where);
long long parse_int(std::string_view text, std::string_view where);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based source line of each row, for error messages.
  std::vector<std::size_t> lines;
};

/// Reads a comma-separated file with a header line. When `expected_header` is
/// non-empty the header must match it exactly. Quoting is not supported; none
/// of the formats written here need it.
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected_header = {});
CsvTable parse_csv(std::string_view text, const std::vector<std::string>& expected_header = {},
                   std::string_view source = "<csv>");

void write_csv_row(std::ostream& os, const std::vector<std::string>& cells);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Parses a flat TOML document (tables, key = scalar or single-line array).
nlohmann::json parse_toml(std::string_view text, std::string_view source = "<toml>");

/// Loads a JSON or TOML file (chosen by extension) into a JSON value.
nlohmann::json load_config(const std::filesystem::path& path);

/// Parses JSON text, mapping parse failures to ParseError with line/column.
nlohmann::json parse_json(std::string_view text, std::string_view source);

}  // namespace routemix::io
