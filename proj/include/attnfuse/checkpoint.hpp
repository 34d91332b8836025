#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "attnfuse/model.hpp"
#include "attnfuse/segmenter.hpp"

namespace attnfuse::io {

inline constexpr int kCheckpointVersion = 1;

struct TensorEntry {
    std::string name;
    Shape shape;
};

/// Parsed text header. Everything the model constructors need lives in
/// `fields`; the tensor table fixes the payload order.
struct CheckpointHeader {
    int format_version = kCheckpointVersion;
    std::string kind;
    std::vector<std::pair<std::string, std::string>> fields;
    std::vector<TensorEntry> tensors;

    const std::string& field(const std::string& key) const;
};

/// Header lines `key value`, a `tensor name d0,d1,...` line per tensor and
/// `end_header`, followed by the tensors as little-endian float32 in table
/// order.
void save_checkpoint(const model::MultiStreamModel& m, const std::filesystem::path& path);
model::MultiStreamModel load_checkpoint(const std::filesystem::path& path);
/// Loads weights into an existing model; the shape tables must match.
void load_checkpoint_into(const std::filesystem::path& path, model::MultiStreamModel& m);

void save_segmenter(const semisup::Segmenter& seg, const std::filesystem::path& path);
semisup::Segmenter load_segmenter(const std::filesystem::path& path);

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);

}  // namespace attnfuse::io
