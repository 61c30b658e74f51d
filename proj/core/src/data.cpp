#include "qfc/data.hpp"

namespace qfc {

std::filesystem::path bundled_data_path(std::string_view file_name) {
  const std::filesystem::path build_tree = std::filesystem::path(QFC_DATA_DIR) / file_name;
  if (std::filesystem::exists(build_tree)) return build_tree;
  return std::filesystem::path(QFC_INSTALLED_DATA_DIR) / file_name;
}

}  // namespace qfc
