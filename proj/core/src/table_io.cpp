#include "routemix/table_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "routemix/error.hpp"

namespace routemix::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_commas(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw Error("format_double: conversion failed");
  return {buf, ptr};
}

double parse_double(std::string_view text, std::string_view where) {
  text = trim(text);
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ParseError(std::string(where), "expected a number, got '" + std::string(text) + "'");
  return v;
}

long long parse_int(std::string_view text, std::string_view where) {
  text = trim(text);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ParseError(std::string(where), "expected an integer, got '" + std::string(text) + "'");
  return v;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

CsvTable parse_csv(std::string_view text, const std::vector<std::string>& expected_header, std::string_view source) {
  CsvTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_commas(line);
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    if (!have_header) {
      if (!expected_header.empty() && cells != expected_header) {
        std::string want;
        for (const auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
        throw ParseError(where, "unexpected header; expected '" + want + "'");
      }
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size())
      throw ParseError(where, "expected " + std::to_string(table.header.size()) + " columns, got " +
                                  std::to_string(cells.size()));
    table.rows.push_back(std::move(cells));
    table.lines.push_back(line_no);
  }
  if (!have_header) throw ParseError(std::string(source), "missing header line");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected_header) {
  return parse_csv(read_text(path), expected_header, path.string());
}

void write_csv_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    os << cells[i];
  }
  os << '\n';
}

nlohmann::json parse_json(std::string_view text, std::string_view source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError(std::string(source) + ":" + std::to_string(line) + ":" + std::to_string(col), e.what());
  }
}

namespace {

nlohmann::json toml_scalar(std::string_view v, const std::string& where) {
  v = trim(v);
  if (v.empty()) throw ParseError(where, "missing value");
  if (v.front() == '"' || v.front() == '\'') {
    if (v.size() < 2 || v.back() != v.front()) throw ParseError(where, "unterminated string");
    return std::string(v.substr(1, v.size() - 2));
  }
  if (v == "true") return true;
  if (v == "false") return false;
  std::string cleaned;
  for (char c : v)
    if (c != '_') cleaned += c;
  if (cleaned.find_first_of(".eE") == std::string::npos && cleaned != "inf" && cleaned != "nan") {
    try {
      return parse_int(cleaned, where);
    } catch (const ParseError&) {
    }
  }
  return parse_double(cleaned, where);
}

std::string_view strip_comment(std::string_view line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

}  // namespace

nlohmann::json parse_toml(std::string_view text, std::string_view source) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* table = &root;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(where, "unterminated table header");
      auto name = trim(line.substr(1, line.size() - 2));
      table = &root;
      std::size_t start = 0;
      for (;;) {
        auto dot = name.find('.', start);
        std::string key(trim(name.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start)));
        if (key.empty()) throw ParseError(where, "empty table name");
        auto& child = (*table)[key];
        if (child.is_null()) child = nlohmann::json::object();
        if (!child.is_object()) throw ParseError(where, "'" + key + "' is not a table");
        table = &child;
        if (dot == std::string_view::npos) break;
        start = dot + 1;
      }
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(where, "expected key = value");
    std::string key(trim(line.substr(0, eq)));
    if (key.size() >= 2 && (key.front() == '"' || key.front() == '\'')) key = key.substr(1, key.size() - 2);
    if (key.empty()) throw ParseError(where, "empty key");
    if (table->contains(key)) throw ParseError(where, "duplicate key '" + key + "'");
    auto value = trim(line.substr(eq + 1));
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']') throw ParseError(where, "arrays must fit on one line");
      nlohmann::json arr = nlohmann::json::array();
      auto inner = trim(value.substr(1, value.size() - 2));
      if (!inner.empty()) {
        for (const auto& cell : split_commas(inner)) {
          if (trim(cell).empty()) continue;  // trailing comma
          arr.push_back(toml_scalar(cell, where));
        }
      }
      (*table)[key] = std::move(arr);
    } else {
      (*table)[key] = toml_scalar(value, where);
    }
  }
  return root;
}

nlohmann::json load_config(const std::filesystem::path& path) {
  const auto text = read_text(path);
  if (path.extension() == ".toml") return parse_toml(text, path.string());
  return parse_json(text, path.string());
}

}  // namespace routemix::io
