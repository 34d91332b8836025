#include "attnfuse/manifest.hpp"

#include <fstream>
#include <sstream>

#include "attnfuse/errors.hpp"

namespace attnfuse::io {

namespace fs = std::filesystem;

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "train";
}

std::string to_string(Role r) {
    switch (r) {
        case Role::seed_masked: return "seed-masked";
        case Role::unlabeled: return "unlabeled";
        case Role::labeled_only: return "labeled-only";
    }
    return "labeled-only";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw ValidationError("unknown split '" + s + "'");
}

Role role_from_string(const std::string& s) {
    if (s == "seed-masked") return Role::seed_masked;
    if (s == "unlabeled") return Role::unlabeled;
    if (s == "labeled-only") return Role::labeled_only;
    throw ValidationError("unknown role '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, ',')) out.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

Manifest parse_manifest(const std::string& text, const fs::path& base_dir, bool check_paths) {
    Manifest m;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw ValidationError("manifest: empty file");
    ++lineno;
    if (trim(line) != kManifestHeader) {
        throw ValidationError("manifest line 1: expected header '" + std::string(kManifestHeader) + "'");
    }
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const std::string where = "manifest line " + std::to_string(lineno) + ": ";
        const auto f = split_fields(line);
        if (f.size() != 5) {
            throw ValidationError(where + "expected 5 fields, got " + std::to_string(f.size()));
        }
        ManifestRow row;
        if (f[0].empty()) throw ValidationError(where + "empty image_path");
        row.image_path = f[0];
        if (f[1] != "0" && f[1] != "1") throw ValidationError(where + "label must be 0 or 1, got '" + f[1] + "'");
        row.label = f[1] == "1" ? 1 : 0;
        if (!f[2].empty()) row.mask_path = f[2];
        try {
            row.split = split_from_string(f[3]);
            row.role = role_from_string(f[4]);
        } catch (const ValidationError& e) {
            throw ValidationError(where + e.what());
        }
        if (row.role == Role::seed_masked && !row.mask_path) {
            throw ValidationError(where + "seed-masked row has no mask_path");
        }
        row.resolved_image = base_dir / row.image_path;
        if (row.mask_path) row.resolved_mask = base_dir / *row.mask_path;
        if (check_paths) {
            if (!fs::exists(row.resolved_image)) {
                throw ValidationError(where + "image '" + row.resolved_image.string() + "' does not exist");
            }
            if (row.resolved_mask && !fs::exists(*row.resolved_mask)) {
                throw ValidationError(where + "mask '" + row.resolved_mask->string() + "' does not exist");
            }
        }
        m.rows.push_back(std::move(row));
    }
    return m;
}

Manifest load_manifest(const fs::path& path, bool check_paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    Manifest m = parse_manifest(ss.str(), path.parent_path(), check_paths);
    m.path = path;
    return m;
}

std::string format_manifest(const std::vector<ManifestRow>& rows) {
    std::ostringstream out;
    out << kManifestHeader << '\n';
    for (const auto& r : rows) {
        out << r.image_path << ',' << r.label << ',' << r.mask_path.value_or("") << ',' << to_string(r.split) << ','
            << to_string(r.role) << '\n';
    }
    return out.str();
}

void write_manifest(const fs::path& path, const std::vector<ManifestRow>& rows) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << format_manifest(rows);
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace attnfuse::io
