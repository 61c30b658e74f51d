#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qfc::io {

/// Ordered "key = value" document. '#' starts a comment; blank lines ignored.
class KeyValueDoc {
 public:
  static KeyValueDoc parse(std::string_view text, std::string origin = "<string>");
  static KeyValueDoc read(const std::filesystem::path& path);

  void set(std::string key, std::string value);
  std::optional<std::string> get(std::string_view key) const;
  std::string require(std::string_view key) const;
  double number(std::string_view key) const;
  std::optional<double> optional_number(std::string_view key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
  const std::string& origin() const noexcept { return origin_; }
  std::string to_string() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::string origin_;
};

}  // namespace qfc::io
