#include <gtest/gtest.h>

#include <json.hpp>

#include "attnfuse/report.hpp"

using namespace attnfuse;
using namespace attnfuse::evalviz;

namespace {

ModelEvaluation fake_eval(std::vector<int> labels) {
    ModelEvaluation ev;
    ev.split = "test";
    for (std::size_t b = 0; b < 4; ++b) {
        std::vector<double> scores;
        std::vector<int> preds;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            scores.push_back(0.1 * static_cast<double>(i + b));
            preds.push_back((i + b) % 2 == 0 ? 1 : 0);
        }
        ev.branches[b] = evaluate(scores, preds, labels);
    }
    return ev;
}

}  // namespace

TEST(Report, FixedKeyOrderAndValid) {
    const std::string text = metrics_report(fake_eval({0, 1, 1, 0, 1}));
    EXPECT_EQ(validate_report(text), "");
    const auto j = nlohmann::ordered_json::parse(text);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"split", "n", "accuracy", "f1", "auc", "confusion", "branches"}));
    EXPECT_EQ(j["n"], 5);
    std::vector<std::string> branches;
    for (auto it = j["branches"].begin(); it != j["branches"].end(); ++it) branches.push_back(it.key());
    EXPECT_EQ(branches, (std::vector<std::string>{"global", "heatmap", "infected", "fusion"}));
}

TEST(Report, SingleClassGivesNullAuc) {
    const std::string text = metrics_report(fake_eval({1, 1, 1}));
    EXPECT_EQ(validate_report(text), "");
    EXPECT_TRUE(nlohmann::json::parse(text)["auc"].is_null());
}

TEST(Report, ValidatorCatchesProblems) {
    EXPECT_NE(validate_report("{"), "");
    EXPECT_NE(validate_report("[]"), "");
    auto j = nlohmann::ordered_json::parse(metrics_report(fake_eval({0, 1})));
    auto broken = j;
    broken["accuracy"] = 1.5;
    EXPECT_NE(validate_report(broken.dump()), "");
    broken = j;
    broken["branches"].erase("heatmap");
    EXPECT_NE(validate_report(broken.dump()), "");
    broken = j;
    broken["confusion"]["tp"] = 7;
    EXPECT_NE(validate_report(broken.dump()), "");
}

TEST(Report, HistoryLines) {
    trainer::StageResult s;
    s.stage = "I";
    s.history = {{1, 0.01f, 0.7f, 0.6f, 0.5f}, {2, 0.01f, 0.5f, 0.4f, 0.75f}};
    const std::vector<trainer::StageResult> stages{s};
    const std::string text = history_jsonl(stages);
    ASSERT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
    const auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
    EXPECT_EQ(first["stage"], "I");
    EXPECT_EQ(first["epoch"], 1);
}

TEST(Report, EmbeddingCsv) {
    Embedding3D e;
    e.points = {{1.0, 2.0, 3.0}};
    e.labels = {1};
    e.ids = {"img_0001.pgm"};
    e.final_kl = 0.25;
    EXPECT_EQ(embedding_csv(e), "id,label,x,y,z,kl\nimg_0001.pgm,1,1,2,3,0.25\n");
}
