#include "qfc/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "qfc/errors.hpp"

namespace qfc::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::vector<std::string> split_fields(std::string_view line, std::string_view origin, int line_no) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"' && trim(current).empty()) {
      current.clear();
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (quoted) throw ParseError(fmt::format("{}:{}: unterminated quoted field", origin, line_no));
  fields.emplace_back(trim(current));
  return fields;
}

}  // namespace

int CsvTable::column(std::string_view name) const {
  const std::string key = lower(trim(name));
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (lower(header[i]) == key) return static_cast<int>(i);
  }
  return -1;
}

int CsvTable::require_column(std::string_view name) const {
  const int idx = column(name);
  if (idx < 0) throw ParseError(fmt::format("{}: missing required column '{}'", origin, name));
  return idx;
}

double CsvTable::number(std::size_t row, int col) const {
  return parse_number(rows.at(row).at(static_cast<std::size_t>(col)),
                      fmt::format("{}:{} column '{}'", origin, line_numbers.at(row), header.at(col)));
}

double parse_number(std::string_view field, std::string_view context) {
  const std::string text(trim(field));
  if (text.empty()) throw ParseError(fmt::format("{}: empty numeric field", context));
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) {
    throw ParseError(fmt::format("{}: '{}' is not a number", context, text));
  }
  return value;
}

CsvTable parse_csv(std::string_view text, std::string origin) {
  CsvTable table;
  table.origin = std::move(origin);
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = split_fields(view, table.origin, line_no);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw ParseError(fmt::format("{}:{}: expected {} fields, found {}", table.origin, line_no,
                                   table.header.size(), fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (table.header.empty()) throw ParseError(fmt::format("{}: no header row", table.origin));
  return table;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_text_file(path), path.string()); }

}  // namespace qfc::io
