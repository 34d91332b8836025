#include "attnfuse/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "attnfuse/errors.hpp"

namespace attnfuse::io {

void RunConfig::validate() const {
    model.validate();
    optimizer.validate();
    segmentation.segmenter.validate();
    if (epochs < 1) throw ConfigError("trainer.epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("trainer.batch_size must be at least 1");
    if (patience < 1) throw ConfigError("trainer.patience must be at least 1");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("trainer.val_fraction must be in (0,1)");
    if (segmentation.epochs_per_round < 1) throw ConfigError("segmenter.epochs_per_round must be at least 1");
    if (segmentation.k < 1) throw ConfigError("segmenter.k must be at least 1");
    if (!(tsne.perplexity > 0.0)) throw ConfigError("tsne.perplexity must be positive");
    if (tsne.iterations < 1) throw ConfigError("tsne.iterations must be at least 1");
    if (output_dir.empty()) throw ConfigError("output.dir must not be empty");
}

trainer::ProtocolConfig RunConfig::protocol() const {
    trainer::ProtocolConfig p;
    p.optimizer = optimizer;
    p.early_stop.patience = patience;
    p.epochs = epochs;
    p.batch_size = batch_size;
    p.seed = train_seed;
    p.infected_first = infected_first;
    return p;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key + ": cannot parse '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<int> parse_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::istringstream in(v);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(parse_number<int>(key, trim(tok)));
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

template <class T>
std::string num(T v) {
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

struct Key {
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define NUM_KEY(expr)                                                                                               \
    Key {                                                                                                           \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.expr = parse_number<decltype(c.expr)>(k, v); }, \
            [](const RunConfig& c) { return num(c.expr); }                                                          \
    }
#define BOOL_KEY(expr)                                                                           \
    Key {                                                                                        \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.expr = parse_bool(k, v); }, \
            [](const RunConfig& c) { return std::string(c.expr ? "true" : "false"); }            \
    }

// Ordered by section, then key, which is also the format_config order.
const std::map<std::string, std::map<std::string, Key>>& keys() {
    static const std::map<std::string, std::map<std::string, Key>> table{
        {"model",
         {{"input_size", NUM_KEY(model.backbone.input_size)},
          {"stage_channels",
           Key{[](RunConfig& c, const std::string& k, const std::string& v) {
                   c.model.backbone.stage_channels = parse_list(k, v);
               },
               [](const RunConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.model.backbone.stage_channels.size(); ++i)
                       s += (i ? "," : "") + std::to_string(c.model.backbone.stage_channels[i]);
                   return s;
               }}},
          {"blocks_per_stage", NUM_KEY(model.backbone.blocks_per_stage)},
          {"final_channels", NUM_KEY(model.backbone.final_channels)},
          {"input_mean", NUM_KEY(model.backbone.input_mean)},
          {"input_std", NUM_KEY(model.backbone.input_std)},
          {"num_classes", NUM_KEY(model.num_classes)},
          {"tau", NUM_KEY(model.tau)},
          {"seed", NUM_KEY(model.seed)}}},
        {"optimizer",
         {{"learning_rate", NUM_KEY(optimizer.learning_rate)},
          {"momentum", NUM_KEY(optimizer.momentum)},
          {"weight_decay", NUM_KEY(optimizer.weight_decay)},
          {"lr_decay_epoch", NUM_KEY(optimizer.lr_decay_epoch)},
          {"lr_decay_factor", NUM_KEY(optimizer.lr_decay_factor)},
          {"decay_bias", BOOL_KEY(optimizer.decay_bias)}}},
        {"trainer",
         {{"epochs", NUM_KEY(epochs)},
          {"batch_size", NUM_KEY(batch_size)},
          {"patience", NUM_KEY(patience)},
          {"seed", NUM_KEY(train_seed)},
          {"infected_first", BOOL_KEY(infected_first)},
          {"val_fraction", NUM_KEY(val_fraction)}}},
        {"segmenter",
         {{"base_channels", NUM_KEY(segmentation.segmenter.base_channels)},
          {"learning_rate", NUM_KEY(segmentation.segmenter.learning_rate)},
          {"momentum", NUM_KEY(segmentation.segmenter.momentum)},
          {"weight_decay", NUM_KEY(segmentation.segmenter.weight_decay)},
          {"batch_size", NUM_KEY(segmentation.segmenter.batch_size)},
          {"seed", NUM_KEY(segmentation.segmenter.seed)},
          {"input_mean", NUM_KEY(segmentation.segmenter.input_mean)},
          {"input_std", NUM_KEY(segmentation.segmenter.input_std)},
          {"positive_weight", NUM_KEY(segmentation.segmenter.positive_weight)},
          {"epochs_per_round", NUM_KEY(segmentation.epochs_per_round)},
          {"k", NUM_KEY(segmentation.k)}}},
        {"tsne",
         {{"perplexity", NUM_KEY(tsne.perplexity)},
          {"iterations", NUM_KEY(tsne.iterations)},
          {"early_exaggeration", NUM_KEY(tsne.early_exaggeration)},
          {"exaggeration_iterations", NUM_KEY(tsne.exaggeration_iterations)},
          {"learning_rate", NUM_KEY(tsne.learning_rate)},
          {"seed", NUM_KEY(tsne.seed)}}},
        {"output",
         {{"dir", Key{[](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; },
                      [](const RunConfig& c) { return c.output_dir; }}}}},
    };
    return table;
}

#undef NUM_KEY
#undef BOOL_KEY

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = "config line " + std::to_string(lineno) + ": ";
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!keys().contains(section)) throw ConfigError(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        if (section.empty()) throw ConfigError(where + "key outside of any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& sec = keys().at(section);
        const auto it = sec.find(key);
        if (it == sec.end()) throw ConfigError(where + "unknown key '" + section + "." + key + "'");
        try {
            it->second.set(cfg, section + "." + key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    // The segmenter always runs at the classifier's input size.
    cfg.segmentation.segmenter.input_size = cfg.model.backbone.input_size;
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string format_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& [section, sec] : keys()) {
        if (!out.empty()) out += "\n";
        out += "[" + section + "]\n";
        for (const auto& [key, k] : sec) out += key + " = " + k.get(cfg) + "\n";
    }
    return out;
}

}  // namespace attnfuse::io
