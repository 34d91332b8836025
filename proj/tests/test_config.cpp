#include <gtest/gtest.h>

#include "attnfuse/errors.hpp"
#include "attnfuse/config.hpp"

using namespace attnfuse;
using namespace attnfuse::io;

TEST(Config, EmptyTextGivesReferenceSettings) {
    const auto cfg = parse_config("");
    EXPECT_EQ(cfg.model.backbone.input_size, 224);
    EXPECT_EQ(cfg.model.tau, 0.75f);
    EXPECT_EQ(cfg.batch_size, 32);
    EXPECT_EQ(cfg.epochs, 50);
    EXPECT_EQ(cfg.optimizer.learning_rate, 0.01f);
    EXPECT_EQ(cfg.optimizer.momentum, 0.9f);
    EXPECT_EQ(cfg.optimizer.weight_decay, 1e-4f);
    EXPECT_EQ(cfg.optimizer.lr_decay_epoch, 30);
    EXPECT_EQ(cfg.segmentation.k, 100);
}

TEST(Config, ParsesSectionsAndComments) {
    const auto cfg = parse_config(
        "# desk scale\n"
        "[model]\n"
        "input_size = 64   # pixels\n"
        "stage_channels = 4,8,16\n"
        "tau = 0.5\n"
        "[trainer]\n"
        "epochs = 3\n"
        "infected_first = true\n"
        "[output]\n"
        "dir = runs/a\n");
    EXPECT_EQ(cfg.model.backbone.input_size, 64);
    EXPECT_EQ(cfg.model.backbone.stage_channels, (std::vector<int>{4, 8, 16}));
    EXPECT_EQ(cfg.model.tau, 0.5f);
    EXPECT_EQ(cfg.epochs, 3);
    EXPECT_TRUE(cfg.infected_first);
    EXPECT_EQ(cfg.output_dir, "runs/a");
}

TEST(Config, ErrorsNameTheLine) {
    auto expect_line = [](const std::string& text, const std::string& line) {
        try {
            parse_config(text);
            FAIL() << text;
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find(line), std::string::npos) << e.what();
        }
    };
    expect_line("[model]\nwidth = 3\n", "line 2");
    expect_line("[extras]\n", "line 1");
    expect_line("[model]\ntau = high\n", "line 2");
    expect_line("epochs = 3\n", "line 1");
    expect_line("[trainer]\ninfected_first = maybe\n", "line 2");
}

TEST(Config, RangeChecks) {
    EXPECT_THROW(parse_config("[model]\ntau = 1.5\n"), ConfigError);
    EXPECT_THROW(parse_config("[trainer]\nbatch_size = 0\n"), ConfigError);
    EXPECT_THROW(parse_config("[model]\ninput_size = 60\n"), ConfigError);
}

TEST(Config, FormatRoundTrips) {
    auto cfg = parse_config("[model]\ninput_size = 64\ntau = 0.6\n[tsne]\nperplexity = 12.5\n[segmenter]\nk = 7\n");
    const std::string text = format_config(cfg);
    const auto again = parse_config(text);
    EXPECT_EQ(format_config(again), text);
    EXPECT_EQ(again.model.tau, 0.6f);
    EXPECT_EQ(again.tsne.perplexity, 12.5);
    EXPECT_EQ(again.segmentation.k, 7);
}

TEST(Config, ProtocolCarriesSettings) {
    const auto cfg = parse_config("[trainer]\nepochs = 4\nbatch_size = 8\npatience = 2\nseed = 3\n");
    const auto p = cfg.protocol();
    EXPECT_EQ(p.epochs, 4);
    EXPECT_EQ(p.batch_size, 8);
    EXPECT_EQ(p.early_stop.patience, 2);
    EXPECT_EQ(p.seed, 3u);
}
