#pragma once

#include <string>
#include <variant>
#include <vector>

namespace qfc::cli {

using Cell = std::variant<double, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  /// fmt spec per column for the human table; empty means "{:.6g}".
  std::vector<std::string> human_formats;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

/// Output of one subcommand. The machine form is
///
///   format = qfc-report/1
///   command = <name>
///   key = value            (doubles at 17 significant digits)
///   ...
///   [table <name>]
///   csv header / rows
///
/// and is byte-stable for identical inputs.
class Report {
 public:
  explicit Report(std::string command) : command_(std::move(command)) {}

  void value(std::string key, double v, std::string human_format = {});
  void text(std::string key, std::string v);
  void flag(std::string key, bool v) { text(std::move(key), v ? "true" : "false"); }
  Table& table(std::string name, std::vector<std::string> columns, std::vector<std::string> human_formats = {});
  /// Free-text line shown after the values in human output.
  void note(std::string line) { notes_.push_back(std::move(line)); }

  std::string machine() const;
  std::string human() const;

 private:
  struct Field {
    std::string key;
    Cell value;
    std::string human_format;
  };
  std::string command_;
  std::vector<Field> fields_;
  std::vector<Table> tables_;
  std::vector<std::string> notes_;
};

}  // namespace qfc::cli
