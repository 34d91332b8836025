#include <gtest/gtest.h>

#include <cstdlib>
#include <string>

#include <sys/wait.h>

#include "attnfuse/errors.hpp"
#include "attnfuse/report.hpp"
#include "support/temp_dir.hpp"

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(ATTNFUSE_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallConfig =
    "[model]\n"
    "input_size = 32\n"
    "stage_channels = 4,8\n"
    "final_channels = 4\n"
    "[trainer]\n"
    "epochs = 2\n"
    "batch_size = 4\n"
    "[segmenter]\n"
    "epochs_per_round = 1\n"
    "k = 10\n"
    "[tsne]\n"
    "perplexity = 2\n"
    "iterations = 100\n";

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("train"), 2);
    EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, BadInputsMapToExitCodes) {
    TempDir dir("cli_codes");
    EXPECT_EQ(run("synth --n 7 --size 32 --out " + (dir / "d").string()), 2);
    EXPECT_EQ(run("eval --checkpoint " + (dir / "none.ckpt").string() + " --manifest " + (dir / "none.csv").string()),
              3);
    write_file(dir / "m.csv", "image_path,label,mask_path,split,role\nghost.pgm,1,,train,labeled-only\n");
    EXPECT_EQ(run("segment-pseudo --manifest " + (dir / "m.csv").string()), 2);
    write_file(dir / "bad.ini", "[model]\nflavour = sour\n");
    EXPECT_EQ(run("train --manifest " + (dir / "m.csv").string() + " --config " + (dir / "bad.ini").string()), 2);
}

TEST(Cli, FullPipeline) {
    TempDir dir("cli_pipeline");
    const std::string d = dir.path().string();
    write_file(dir / "small.ini", kSmallConfig);
    const std::string cfg = " --config " + d + "/small.ini";
    const std::string manifest = " --manifest " + d + "/data/manifest.csv";
    ASSERT_EQ(run("synth --n 24 --size 32 --seed 3 --out " + d + "/data"), 0);
    ASSERT_EQ(run("segment-pseudo" + manifest + cfg + " --out " + d + "/run"), 0);
    EXPECT_TRUE(std::filesystem::exists(dir / "run/provenance.csv"));
    ASSERT_EQ(run("train" + manifest + cfg + " --out " + d + "/run"), 0);
    ASSERT_EQ(run("eval --checkpoint " + d + "/run/model.ckpt" + manifest + cfg + " --split test"), 0);
    EXPECT_EQ(attnfuse::evalviz::validate_report(read_file(dir / "run/metrics_test.json")), "");
    ASSERT_EQ(run("embed --checkpoint " + d + "/run/model.ckpt" + manifest + cfg + " --split all"), 0);
    const std::string csv = read_file(dir / "run/embedding.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 25);
    ASSERT_EQ(run("heatmap --checkpoint " + d + "/run/model.ckpt --image " + d + "/data/images/img_0001.pgm --out " +
                  d + "/hm"),
              0);
    EXPECT_TRUE(std::filesystem::exists(dir / "hm/cam.ppm"));
    EXPECT_EQ(run("train" + manifest + cfg + " --stage III --out " + d + "/run2 --segmenter " + d +
                  "/run/segmenter.ckpt"),
              2);
    EXPECT_EQ(run("train" + manifest + cfg + " --stage III --out " + d + "/run2 --segmenter " + d +
                  "/run/segmenter.ckpt --init " + d + "/run/model.ckpt"),
              0);
}
