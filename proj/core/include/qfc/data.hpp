#pragma once

#include <filesystem>
#include <string_view>

namespace qfc {

/// Location of a file shipped in the package data directory (source tree
/// when running from a build, install prefix otherwise).
std::filesystem::path bundled_data_path(std::string_view file_name);

}  // namespace qfc
