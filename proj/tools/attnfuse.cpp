#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "attnfuse/checkpoint.hpp"
#include "attnfuse/config.hpp"
#include "attnfuse/dataset.hpp"
#include "attnfuse/errors.hpp"
#include "attnfuse/image_io.hpp"
#include "attnfuse/render.hpp"
#include "attnfuse/report.hpp"
#include "attnfuse/synth.hpp"

namespace fs = std::filesystem;
using namespace attnfuse;

namespace {

enum Exit { kOk = 0, kFailure = 1, kValidation = 2, kIo = 3, kNumerical = 4 };

io::RunConfig config_from(const std::string& path) {
    return path.empty() ? io::parse_config("") : io::load_config(path);
}

void log(const std::string& msg) { std::cerr << msg << std::endl; }

fs::path sibling(const fs::path& file, const std::string& name) {
    return file.has_parent_path() ? file.parent_path() / name : fs::path(name);
}

struct SynthArgs {
    io::SynthConfig cfg;
    std::string out = "data";
};

void run_synth(const SynthArgs& a) {
    const auto ds = io::generate_synthetic(a.cfg);
    const auto manifest = io::write_synthetic(ds, a.out);
    std::cout << manifest.string() << "\n";
}

struct SegmentArgs {
    std::string manifest;
    std::string config;
    std::string out;
    std::optional<int> k;
    std::optional<int> epochs;
    std::optional<std::uint64_t> seed;
};

void run_segment(const SegmentArgs& a) {
    auto cfg = config_from(a.config);
    if (a.k) cfg.segmentation.k = *a.k;
    if (a.epochs) cfg.segmentation.epochs_per_round = *a.epochs;
    if (a.seed) cfg.segmentation.segmenter.seed = *a.seed;
    cfg.validate();
    const fs::path out = a.out.empty() ? fs::path(cfg.output_dir) : fs::path(a.out);

    const auto manifest = io::load_manifest(a.manifest);
    const auto samples = io::load_samples(manifest, cfg.model.backbone.input_size);
    auto pool = io::segmentation_pool(samples, cfg.segmentation.k);
    const std::size_t seeds = pool.train_set.size();

    semisup::Segmenter seg(cfg.segmentation.segmenter);
    const auto rep = semisup::run_algorithm1(seg, pool, cfg.segmentation.epochs_per_round,
                                             cfg.segmentation.segmenter.seed, [](const auto& p, int round) {
                                                 log("round " + std::to_string(round) + ": " +
                                                     std::to_string(p.test_set.size()) + " images left");
                                             });
    io::save_segmenter(seg, out / "segmenter.ckpt");

    std::string prov = "id,provenance,round,mask_path\n";
    std::size_t i = 0;
    int round = 0;
    std::size_t round_end = seeds;
    for (const auto& m : pool.train_set) {
        while (i >= round_end && round < rep.rounds) round_end += rep.round_sizes[static_cast<std::size_t>(round++)];
        char name[32];
        std::snprintf(name, sizeof name, "mask_%05zu.pgm", i);
        const fs::path rel = fs::path("pseudo_masks") / name;
        io::write_mask_pgm(out / rel, m.mask);
        prov += m.id + "," + semisup::to_string(m.provenance) + "," + std::to_string(i < seeds ? 0 : round) + "," +
                rel.string() + "\n";
        ++i;
    }
    evalviz::write_text(out / "provenance.csv", prov);
    log("segmenter: " + std::to_string(rep.rounds) + " rounds, pixel accuracy on seed masks " +
        std::to_string(semisup::pixel_accuracy(seg, std::span(pool.train_set).first(seeds))));
    std::cout << (out / "segmenter.ckpt").string() << "\n";
}

struct Prepared {
    io::RunConfig cfg;
    std::vector<io::Sample> samples;
    io::SplitIndices splits;
    semisup::Segmenter seg;
};

Prepared prepare_data(const std::string& config, const std::string& manifest, int input_size,
                      const fs::path& segmenter) {
    Prepared p;
    p.cfg = config_from(config);
    p.samples = io::load_samples(io::load_manifest(manifest), input_size);
    p.splits = io::classification_splits(p.samples, p.cfg.val_fraction, p.cfg.train_seed);
    p.seg = io::load_segmenter(segmenter);
    if (p.seg.config().input_size != input_size) {
        throw ConfigError("segmenter input size " + std::to_string(p.seg.config().input_size) +
                          " differs from model input size " + std::to_string(input_size));
    }
    return p;
}

struct TrainArgs {
    std::string manifest;
    std::string config;
    std::string stage = "all";
    std::string out;
    std::string segmenter;
    std::string init;
};

void run_train(const TrainArgs& a) {
    const auto cfg = config_from(a.config);
    const fs::path out = a.out.empty() ? fs::path(cfg.output_dir) : fs::path(a.out);
    const fs::path seg_path = a.segmenter.empty() ? out / "segmenter.ckpt" : fs::path(a.segmenter);
    auto data = prepare_data(a.config, a.manifest, cfg.model.backbone.input_size, seg_path);
    const auto train = io::make_examples(data.samples, data.splits.train, data.seg);
    const auto val = io::make_examples(data.samples, data.splits.val, data.seg);
    log("train " + std::to_string(train.size()) + ", val " + std::to_string(val.size()));

    model::MultiStreamModel m(cfg.model);
    if (!a.init.empty()) {
        io::load_checkpoint_into(a.init, m);
    } else if (a.stage != "all" && a.stage != "I") {
        throw ValidationError("stage " + a.stage + " needs --init with the previous stage's checkpoint");
    }
    const auto proto = cfg.protocol();
    auto on_epoch = [](const std::string& stage, const trainer::EpochRecord& r) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "[%s] epoch %d lr %.4g train_loss %.4f val_loss %.4f val_acc %.4f",
                      stage.c_str(), r.epoch, r.learning_rate, r.train_loss, r.val_loss, r.val_accuracy);
        log(buf);
    };
    std::vector<trainer::StageResult> results;
    if (a.stage == "all") {
        results = trainer::run_protocol(m, train, val, proto, on_epoch);
    } else {
        const auto plan = trainer::StagePlan::from_name(a.stage, proto.epochs, proto.batch_size);
        results.push_back(
            trainer::run_stage(m, plan, train, val, proto.optimizer, proto.early_stop, proto.seed, on_epoch));
    }
    io::save_checkpoint(m, out / "model.ckpt");
    evalviz::write_text(out / "history.jsonl", evalviz::history_jsonl(results));
    evalviz::write_text(out / "config.ini", io::format_config(cfg));
    std::cout << (out / "model.ckpt").string() << "\n";
}

io::Split parse_split(const std::string& s) { return io::split_from_string(s); }

std::vector<std::size_t> indices_for(const io::SplitIndices& s, const std::string& split) {
    if (split == "all") {
        std::vector<std::size_t> all = s.train;
        all.insert(all.end(), s.val.begin(), s.val.end());
        all.insert(all.end(), s.test.begin(), s.test.end());
        std::sort(all.begin(), all.end());
        return all;
    }
    switch (parse_split(split)) {
        case io::Split::train: return s.train;
        case io::Split::val: return s.val;
        case io::Split::test: return s.test;
    }
    return {};
}

struct EvalArgs {
    std::string checkpoint;
    std::string manifest;
    std::string split = "test";
    std::string config;
    std::string segmenter;
    std::string out;
};

void run_eval(const EvalArgs& a) {
    const auto m = io::load_checkpoint(a.checkpoint);
    const fs::path seg_path = a.segmenter.empty() ? sibling(a.checkpoint, "segmenter.ckpt") : fs::path(a.segmenter);
    auto data = prepare_data(a.config, a.manifest, m.config().backbone.input_size, seg_path);
    const auto idx = indices_for(data.splits, a.split);
    const auto examples = io::make_examples(data.samples, idx, data.seg);
    const auto report = evalviz::metrics_report(evalviz::evaluate_model(m, examples, a.split));
    const fs::path out = a.out.empty() ? sibling(a.checkpoint, "metrics_" + a.split + ".json") : fs::path(a.out);
    evalviz::write_text(out, report);
    std::cout << report;
}

struct HeatmapArgs {
    std::string checkpoint;
    std::string image;
    std::optional<float> tau;
    std::string out = "heatmap";
};

void run_heatmap(const HeatmapArgs& a) {
    auto m = io::load_checkpoint(a.checkpoint);
    if (a.tau) m.set_tau(*a.tau);
    const int s = m.config().backbone.input_size;
    const auto raw = io::read_pgm(a.image);
    const auto img = (raw.height() == s && raw.width() == s) ? raw : vision::resize_bilinear(raw, s, s);
    const auto g = model::forward_global(m, img);
    const auto hc = model::heat_crop(g.activations, img, m.config().tau, s);
    const fs::path out(a.out);

    const auto& hm = hc.heatmap;
    io::write_pgm(out / "heatmap.pgm", vision::GrayImage(hm.height, hm.width, hm.values));
    io::write_mask_pgm(out / "mask.pgm", hc.mask);
    if (hc.region) io::write_mask_pgm(out / "region.pgm", *hc.region);
    io::write_pgm(out / "crop.pgm", hc.crop);
    const int positive = m.num_classes() == 2 ? 1 : 0;
    const auto cam = model::cam(g.activations, positive, m.branch(model::BranchName::global).head.weight.value);
    evalviz::render_cam_overlay(img, cam, out / "cam.ppm");
    const auto& b = hc.box;
    std::cout << "box rows " << b.row_min << "-" << b.row_max << " cols " << b.col_min << "-" << b.col_max
              << (hc.fallback ? " (fallback: empty region)" : "") << "\n";
}

struct EmbedArgs {
    std::string checkpoint;
    std::string manifest;
    std::string split = "test";
    std::string config;
    std::string segmenter;
    std::string out;
};

void run_embed(const EmbedArgs& a) {
    const auto m = io::load_checkpoint(a.checkpoint);
    const fs::path seg_path = a.segmenter.empty() ? sibling(a.checkpoint, "segmenter.ckpt") : fs::path(a.segmenter);
    auto data = prepare_data(a.config, a.manifest, m.config().backbone.input_size, seg_path);
    const auto idx = indices_for(data.splits, a.split);
    const auto examples = io::make_examples(data.samples, idx, data.seg);
    auto tcfg = data.cfg.tsne;
    const double limit = (static_cast<double>(examples.size()) - 1.0) / 3.0;
    if (tcfg.perplexity >= limit) {
        tcfg.perplexity = std::max(1.0, std::floor(limit));
        log("perplexity lowered to " + std::to_string(tcfg.perplexity) + " for " + std::to_string(examples.size()) +
            " points");
    }
    const auto feats = evalviz::fusion_features(m, examples);
    auto emb = evalviz::tsne_embed(feats, tcfg);
    emb.ids.clear();
    emb.labels.clear();
    for (const auto& ex : examples) {
        emb.ids.push_back(ex.id);
        emb.labels.push_back(ex.label);
    }
    const fs::path out = a.out.empty() ? sibling(a.checkpoint, "embedding.csv") : fs::path(a.out);
    evalviz::write_text(out, evalviz::embedding_csv(emb));
    log("t-SNE KL " + std::to_string(emb.initial_kl) + " -> " + std::to_string(emb.final_kl));
    std::cout << out.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Triplet-stream attention-fusion classifier"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    c_synth->add_option("--n", synth.cfg.n, "Number of labeled images (even)")->capture_default_str();
    c_synth->add_option("--size", synth.cfg.size, "Image side length")->capture_default_str();
    c_synth->add_option("--seed", synth.cfg.seed)->capture_default_str();
    c_synth->add_option("--unlabeled", synth.cfg.unlabeled, "Extra mask-less images")->capture_default_str();
    c_synth->add_option("--out", synth.out, "Output directory")->capture_default_str();

    SegmentArgs seg;
    auto* c_seg = app.add_subcommand("segment-pseudo", "Train the segmenter with pseudo-labeling");
    c_seg->add_option("--manifest", seg.manifest)->required();
    c_seg->add_option("--k", seg.k, "Images pseudo-labeled per round");
    c_seg->add_option("--epochs", seg.epochs, "Segmenter epochs per round");
    c_seg->add_option("--seed", seg.seed);
    c_seg->add_option("--config", seg.config);
    c_seg->add_option("--out", seg.out);

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "Run the staged training protocol or a single stage");
    c_train->add_option("--manifest", train.manifest)->required();
    c_train->add_option("--config", train.config);
    c_train->add_option("--stage", train.stage)
        ->check(CLI::IsMember({"all", "I", "II-heatmap", "II-infected", "III"}))
        ->capture_default_str();
    c_train->add_option("--out", train.out);
    c_train->add_option("--segmenter", train.segmenter);
    c_train->add_option("--init", train.init, "Checkpoint to start from");

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "Write a metrics report");
    c_eval->add_option("--checkpoint", ev.checkpoint)->required();
    c_eval->add_option("--manifest", ev.manifest)->required();
    c_eval->add_option("--split", ev.split)
        ->check(CLI::IsMember({"train", "val", "test", "all"}))
        ->capture_default_str();
    c_eval->add_option("--config", ev.config);
    c_eval->add_option("--segmenter", ev.segmenter);
    c_eval->add_option("--out", ev.out);

    HeatmapArgs hm;
    auto* c_hm = app.add_subcommand("heatmap", "Heat-map, region mask, crop and CAM overlay for one image");
    c_hm->add_option("--checkpoint", hm.checkpoint)->required();
    c_hm->add_option("--image", hm.image)->required();
    c_hm->add_option("--tau", hm.tau);
    c_hm->add_option("--out", hm.out)->capture_default_str();

    EmbedArgs em;
    auto* c_em = app.add_subcommand("embed", "3-D t-SNE of fusion features");
    c_em->add_option("--checkpoint", em.checkpoint)->required();
    c_em->add_option("--manifest", em.manifest)->required();
    c_em->add_option("--split", em.split)
        ->check(CLI::IsMember({"train", "val", "test", "all"}))
        ->capture_default_str();
    c_em->add_option("--config", em.config);
    c_em->add_option("--segmenter", em.segmenter);
    c_em->add_option("--out", em.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (*c_synth) run_synth(synth);
        if (*c_seg) run_segment(seg);
        if (*c_train) run_train(train);
        if (*c_eval) run_eval(ev);
        if (*c_hm) run_heatmap(hm);
        if (*c_em) run_embed(em);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kOk;
}
