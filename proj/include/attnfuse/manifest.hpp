#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace attnfuse::io {

enum class Split { train, val, test };
enum class Role { seed_masked, unlabeled, labeled_only };

std::string to_string(Split s);
std::string to_string(Role r);
Split split_from_string(const std::string& s);
Role role_from_string(const std::string& s);

inline constexpr const char* kManifestHeader = "image_path,label,mask_path,split,role";

/// One CSV record. Paths are kept as written; the resolved_* fields are
/// filled by load_manifest relative to the manifest's directory.
struct ManifestRow {
    std::string image_path;
    int label = 0;
    std::optional<std::string> mask_path;
    Split split = Split::train;
    Role role = Role::labeled_only;

    std::filesystem::path resolved_image;
    std::optional<std::filesystem::path> resolved_mask;
};

struct Manifest {
    std::filesystem::path path;
    std::vector<ManifestRow> rows;
};

/// Parses and validates a manifest. Errors name the offending line. With
/// check_paths, every referenced file must exist.
Manifest load_manifest(const std::filesystem::path& path, bool check_paths = true);
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir, bool check_paths);

/// Canonical text: the header, then one line per row, '\n' terminated.
std::string format_manifest(const std::vector<ManifestRow>& rows);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);

}  // namespace attnfuse::io
