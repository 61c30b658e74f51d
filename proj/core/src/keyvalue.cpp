#include "qfc/keyvalue.hpp"

#include <cctype>
#include <sstream>

#include <fmt/format.h>

#include "qfc/csv.hpp"
#include "qfc/errors.hpp"

namespace qfc::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

KeyValueDoc KeyValueDoc::parse(std::string_view text, std::string origin) {
  KeyValueDoc doc;
  doc.origin_ = std::move(origin);
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(fmt::format("{}:{}: expected 'key = value'", doc.origin_, line_no));
    }
    const auto key = trim(view.substr(0, eq));
    if (key.empty()) throw ParseError(fmt::format("{}:{}: empty key", doc.origin_, line_no));
    if (doc.get(key)) throw ParseError(fmt::format("{}:{}: duplicate key '{}'", doc.origin_, line_no, key));
    doc.entries_.emplace_back(std::string(key), std::string(trim(view.substr(eq + 1))));
  }
  return doc;
}

KeyValueDoc KeyValueDoc::read(const std::filesystem::path& path) {
  return parse(read_text_file(path), path.string());
}

void KeyValueDoc::set(std::string key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

std::optional<std::string> KeyValueDoc::get(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string KeyValueDoc::require(std::string_view key) const {
  auto value = get(key);
  if (!value) throw ParseError(fmt::format("{}: missing key '{}'", origin_, key));
  return *value;
}

double KeyValueDoc::number(std::string_view key) const {
  return parse_number(require(key), fmt::format("{}: key '{}'", origin_, key));
}

std::optional<double> KeyValueDoc::optional_number(std::string_view key) const {
  if (!get(key)) return std::nullopt;
  return number(key);
}

std::string KeyValueDoc::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += fmt::format("{} = {}\n", k, v);
  return out;
}

}  // namespace qfc::io
