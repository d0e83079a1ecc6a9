#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace anisr::data {

enum class Role { train, val, test };

std::string_view to_string(Role r);

struct ManifestEntry {
  std::filesystem::path path;
  Role role = Role::train;
  std::string contrast;  ///< e.g. T1w / T2w
};

/// Plain-text manifest: one `path role contrast` triple per line, `#`
/// comments. Relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

std::vector<ManifestEntry> with_role(const std::vector<ManifestEntry>& entries, Role role);

}  // namespace anisr::data
