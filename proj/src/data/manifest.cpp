#include "anisr/data/manifest.hpp"

#include <fstream>
#include <sstream>

#include "anisr/core/error.hpp"

namespace anisr::data {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::train: return "train";
    case Role::val: return "val";
    case Role::test: return "test";
  }
  return "unknown";
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read manifest '" + path.string() + "'");
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string file, role, contrast;
    if (!(fields >> file)) continue;
    if (!(fields >> role >> contrast)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected `path role contrast`");
    }
    ManifestEntry e;
    e.path = std::filesystem::path(file).is_absolute() ? std::filesystem::path(file) : path.parent_path() / file;
    if (role == "train") {
      e.role = Role::train;
    } else if (role == "val" || role == "validate") {
      e.role = Role::val;
    } else if (role == "test") {
      e.role = Role::test;
    } else {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": unknown role '" + role + "'");
    }
    e.contrast = contrast;
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<ManifestEntry> with_role(const std::vector<ManifestEntry>& entries, Role role) {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (e.role == role) out.push_back(e);
  }
  return out;
}

}  // namespace anisr::data
