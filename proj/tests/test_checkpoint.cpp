#include <gtest/gtest.h>

#include "attnfuse/errors.hpp"
#include "attnfuse/checkpoint.hpp"
#include "support/temp_dir.hpp"

using namespace attnfuse;
using namespace attnfuse::io;

namespace {

model::ModelConfig config_with_k(int k) {
    model::ModelConfig cfg;
    cfg.backbone.stage_channels = {4, 8};
    cfg.backbone.final_channels = k;
    cfg.backbone.input_size = 32;
    cfg.tau = 0.6f;
    cfg.seed = 12;
    return cfg;
}

}  // namespace

TEST(Checkpoint, SaveLoadSaveIsIdentical) {
    TempDir dir("ckpt");
    const model::MultiStreamModel m(config_with_k(8));
    save_checkpoint(m, dir / "a.ckpt");
    const auto loaded = load_checkpoint(dir / "a.ckpt");
    save_checkpoint(loaded, dir / "b.ckpt");
    EXPECT_EQ(read_file(dir / "a.ckpt"), read_file(dir / "b.ckpt"));
    EXPECT_EQ(loaded.config().tau, 0.6f);
    const auto a = m.parameters(), b = loaded.parameters();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value) << a[i]->name;
}

TEST(Checkpoint, HeaderDescribesModel) {
    TempDir dir("ckpt_header");
    save_checkpoint(model::MultiStreamModel(config_with_k(8)), dir / "m.ckpt");
    const auto h = read_checkpoint_header(dir / "m.ckpt");
    EXPECT_EQ(h.format_version, kCheckpointVersion);
    EXPECT_EQ(h.kind, "multistream");
    EXPECT_EQ(h.field("final_channels"), "8");
    EXPECT_EQ(h.field("num_classes"), "2");
    EXPECT_FALSE(h.tensors.empty());
}

TEST(Checkpoint, TruncatedPayloadReportsBytes) {
    TempDir dir("ckpt_trunc");
    save_checkpoint(model::MultiStreamModel(config_with_k(8)), dir / "m.ckpt");
    const std::string full = read_file(dir / "m.ckpt");
    write_file(dir / "m.ckpt", full.substr(0, full.size() - 6));
    try {
        load_checkpoint(dir / "m.ckpt");
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        const std::size_t header = full.find("end_header\n") + 11;
        const std::size_t expected = full.size() - header;
        EXPECT_NE(msg.find(std::to_string(expected)), std::string::npos) << msg;
        EXPECT_NE(msg.find(std::to_string(expected - 6)), std::string::npos) << msg;
    }
}

TEST(Checkpoint, ShapeMismatchListsBothTables) {
    TempDir dir("ckpt_shape");
    save_checkpoint(model::MultiStreamModel(config_with_k(8)), dir / "m.ckpt");
    model::MultiStreamModel wide(config_with_k(16));
    try {
        load_checkpoint_into(dir / "m.ckpt", wide);
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("checkpoint:"), std::string::npos) << msg;
        EXPECT_NE(msg.find("model:"), std::string::npos) << msg;
        EXPECT_NE(msg.find("8,"), std::string::npos) << msg;
        EXPECT_NE(msg.find("16,"), std::string::npos) << msg;
    }
}

TEST(Checkpoint, VersionMismatchRejected) {
    TempDir dir("ckpt_version");
    save_checkpoint(model::MultiStreamModel(config_with_k(8)), dir / "m.ckpt");
    std::string text = read_file(dir / "m.ckpt");
    text.replace(text.find("format_version 1"), 16, "format_version 9");
    write_file(dir / "m.ckpt", text);
    EXPECT_THROW(load_checkpoint(dir / "m.ckpt"), ValidationError);
}

TEST(Checkpoint, MissingFileIsIoError) {
    EXPECT_THROW(load_checkpoint("/nonexistent/m.ckpt"), IoError);
}

TEST(Checkpoint, SegmenterRoundTrip) {
    TempDir dir("ckpt_seg");
    semisup::SegmenterConfig cfg;
    cfg.input_size = 32;
    cfg.seed = 5;
    const semisup::Segmenter seg(cfg);
    save_segmenter(seg, dir / "s.ckpt");
    const auto back = load_segmenter(dir / "s.ckpt");
    ASSERT_EQ(back.params().size(), seg.params().size());
    for (std::size_t i = 0; i < seg.params().size(); ++i) EXPECT_EQ(back.params()[i].value, seg.params()[i].value);
    EXPECT_EQ(back.config().input_size, 32);
    EXPECT_THROW(load_checkpoint(dir / "s.ckpt"), ValidationError);
}
