#include "report.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace qfc::cli {

namespace {

std::string machine_cell(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return fmt::format("{:.17g}", *d);
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char ch : s) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  return quoted + "\"";
}

std::string human_cell(const Cell& c, const std::string& spec) {
  if (const double* d = std::get_if<double>(&c)) {
    return fmt::format(fmt::runtime(spec.empty() ? "{:.6g}" : spec), *d);
  }
  return std::get<std::string>(c);
}

}  // namespace

void Report::value(std::string key, double v, std::string human_format) {
  fields_.push_back({std::move(key), v, std::move(human_format)});
}

void Report::text(std::string key, std::string v) { fields_.push_back({std::move(key), std::move(v), {}}); }

Table& Report::table(std::string name, std::vector<std::string> columns, std::vector<std::string> human_formats) {
  human_formats.resize(columns.size());
  tables_.push_back({std::move(name), std::move(columns), std::move(human_formats), {}});
  return tables_.back();
}

std::string Report::machine() const {
  std::string out = "format = qfc-report/1\n";
  out += fmt::format("command = {}\n", command_);
  for (const auto& f : fields_) out += fmt::format("{} = {}\n", f.key, machine_cell(f.value));
  for (const auto& n : notes_) out += fmt::format("note = {}\n", n);
  for (const auto& t : tables_) {
    out += fmt::format("\n[table {}]\n", t.name);
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
    out += '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + machine_cell(row[i]);
      out += '\n';
    }
  }
  return out;
}

std::string Report::human() const {
  std::string out;
  std::size_t key_width = 0;
  for (const auto& f : fields_) key_width = std::max(key_width, f.key.size());
  for (const auto& f : fields_) {
    out += fmt::format("{:<{}}  {}\n", f.key, key_width, human_cell(f.value, f.human_format));
  }
  for (const auto& t : tables_) {
    if (!out.empty()) out += '\n';
    std::vector<std::vector<std::string>> cells;
    std::vector<std::size_t> width(t.columns.size());
    for (std::size_t i = 0; i < t.columns.size(); ++i) width[i] = t.columns[i].size();
    for (const auto& row : t.rows) {
      auto& line = cells.emplace_back();
      for (std::size_t i = 0; i < row.size(); ++i) {
        line.push_back(human_cell(row[i], t.human_formats[i]));
        width[i] = std::max(width[i], line.back().size());
      }
    }
    // Text columns left-aligned, numbers right-aligned.
    std::vector<bool> left(t.columns.size(), true);
    if (!t.rows.empty()) {
      for (std::size_t i = 0; i < t.rows.front().size(); ++i) {
        left[i] = std::holds_alternative<std::string>(t.rows.front()[i]);
      }
    }
    auto emit = [&](const std::vector<std::string>& line) {
      for (std::size_t i = 0; i < line.size(); ++i) {
        out += i ? "  " : "";
        out += left[i] ? fmt::format("{:<{}}", line[i], width[i]) : fmt::format("{:>{}}", line[i], width[i]);
      }
      out += '\n';
    };
    out += t.name + ":\n";
    emit(t.columns);
    for (const auto& line : cells) emit(line);
  }
  if (!notes_.empty()) out += '\n';
  for (const auto& n : notes_) out += n + '\n';
  return out;
}

}  // namespace qfc::cli
