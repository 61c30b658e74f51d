#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qfc::io {

/// A parsed CSV table: one header row followed by data rows. Blank lines and
/// lines starting with '#' are skipped. Fields may be double-quoted.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// Line number (1-based) of each row in the source, for diagnostics.
  std::vector<int> line_numbers;
  std::string origin;

  /// Index of a header column, or -1. Matching ignores case and surrounding
  /// whitespace.
  int column(std::string_view name) const;
  int require_column(std::string_view name) const;
  double number(std::size_t row, int column) const;
};

CsvTable parse_csv(std::string_view text, std::string origin = "<string>");
CsvTable read_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

/// Strict decimal parse of a whole field; throws ParseError.
double parse_number(std::string_view field, std::string_view context);

}  // namespace qfc::io
