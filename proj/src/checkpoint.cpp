#include "attnfuse/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "attnfuse/errors.hpp"

namespace attnfuse::io {

namespace fs = std::filesystem;

static_assert(sizeof(float) == 4);

const std::string& CheckpointHeader::field(const std::string& key) const {
    for (const auto& [k, v] : fields)
        if (k == key) return v;
    throw ValidationError("checkpoint header has no '" + key + "' field");
}

namespace {

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::vector<int> parse_ints(const std::string& s, const std::string& what) {
    std::vector<int> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        int v = 0;
        const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size()) {
            throw ValidationError("checkpoint: bad integer list for " + what + ": '" + s + "'");
        }
        out.push_back(v);
    }
    return out;
}

int parse_int(const std::string& s, const std::string& what) {
    const auto v = parse_ints(s, what);
    if (v.size() != 1) throw ValidationError("checkpoint: bad integer for " + what + ": '" + s + "'");
    return v[0];
}

std::string float_text(float v) {
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

float parse_float(const std::string& s, const std::string& what) {
    float v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw ValidationError("checkpoint: bad number for " + what + ": '" + s + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw ValidationError("checkpoint: bad integer for " + what + ": '" + s + "'");
    }
    return v;
}

std::string table_text(const std::vector<TensorEntry>& t) {
    std::string s;
    for (const auto& e : t) s += "  " + e.name + " " + shape_string(e.shape) + "\n";
    return s;
}

std::vector<TensorEntry> table_of(std::span<const Parameter* const> params) {
    std::vector<TensorEntry> t;
    for (const auto* p : params) t.push_back({p->name, p->value.shape()});
    return t;
}

void write_file(const fs::path& path, const CheckpointHeader& h, std::span<const Parameter* const> params) {
    std::ostringstream head;
    head << "attnfuse-checkpoint\n";
    head << "format_version " << h.format_version << "\n";
    head << "kind " << h.kind << "\n";
    for (const auto& [k, v] : h.fields) head << k << " " << v << "\n";
    head << "tensors " << h.tensors.size() << "\n";
    for (const auto& e : h.tensors) head << "tensor " << e.name << " " << join_ints(e.shape) << "\n";
    head << "end_header\n";

    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    const std::string text = head.str();
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    std::vector<char> buf;
    for (const auto* p : params) {
        const auto data = p->value.data();
        buf.resize(data.size() * 4);
        for (std::size_t i = 0; i < data.size(); ++i) {
            std::uint32_t bits = std::bit_cast<std::uint32_t>(data[i]);
            for (int b = 0; b < 4; ++b) buf[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
        }
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

struct RawCheckpoint {
    CheckpointHeader header;
    std::vector<char> payload;
};

RawCheckpoint read_file(const fs::path& path, bool with_payload) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
    RawCheckpoint raw;
    auto& h = raw.header;
    std::string line;
    if (!std::getline(in, line) || line != "attnfuse-checkpoint") {
        throw ValidationError("'" + path.string() + "' is not a checkpoint file");
    }
    bool ended = false;
    std::size_t declared = 0;
    while (std::getline(in, line)) {
        if (line == "end_header") {
            ended = true;
            break;
        }
        const auto sp = line.find(' ');
        const std::string key = line.substr(0, sp);
        const std::string value = sp == std::string::npos ? "" : line.substr(sp + 1);
        if (key == "format_version") {
            h.format_version = parse_int(value, key);
        } else if (key == "kind") {
            h.kind = value;
        } else if (key == "tensors") {
            declared = static_cast<std::size_t>(parse_int(value, key));
        } else if (key == "tensor") {
            const auto sp2 = value.find(' ');
            if (sp2 == std::string::npos) throw ValidationError("checkpoint: malformed tensor line '" + line + "'");
            h.tensors.push_back({value.substr(0, sp2), parse_ints(value.substr(sp2 + 1), value.substr(0, sp2))});
        } else {
            h.fields.emplace_back(key, value);
        }
    }
    if (!ended) throw ValidationError("checkpoint '" + path.string() + "': header not terminated");
    if (h.format_version != kCheckpointVersion) {
        throw ValidationError("checkpoint format version " + std::to_string(h.format_version) + ", expected " +
                              std::to_string(kCheckpointVersion));
    }
    if (declared != h.tensors.size()) {
        throw ValidationError("checkpoint declares " + std::to_string(declared) + " tensors but lists " +
                              std::to_string(h.tensors.size()));
    }
    if (!with_payload) return raw;
    raw.payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    std::size_t expected = 0;
    for (const auto& e : h.tensors) expected += 4 * shape_numel(e.shape);
    if (raw.payload.size() != expected) {
        throw ValidationError("checkpoint '" + path.string() + "': payload is " + std::to_string(raw.payload.size()) +
                              " bytes, expected " + std::to_string(expected));
    }
    return raw;
}

void check_tables(const std::vector<TensorEntry>& file, const std::vector<TensorEntry>& model) {
    bool same = file.size() == model.size();
    for (std::size_t i = 0; same && i < file.size(); ++i) {
        same = file[i].name == model[i].name && file[i].shape == model[i].shape;
    }
    if (!same) {
        throw DimensionError("checkpoint shape table does not match the model\ncheckpoint:\n" + table_text(file) +
                             "model:\n" + table_text(model));
    }
}

void fill(const RawCheckpoint& raw, std::span<Parameter* const> params) {
    std::size_t off = 0;
    for (auto* p : params) {
        auto data = p->value.data();
        for (std::size_t i = 0; i < data.size(); ++i, off += 4) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw.payload[off + b])) << (8 * b);
            data[i] = std::bit_cast<float>(bits);
        }
        p->zero_grad();
        p->reset_momentum();
    }
}

std::vector<const Parameter*> as_const(const std::vector<Parameter*>& v) { return {v.begin(), v.end()}; }

model::ModelConfig model_config_of(const CheckpointHeader& h) {
    model::ModelConfig cfg;
    cfg.num_classes = parse_int(h.field("num_classes"), "num_classes");
    cfg.tau = parse_float(h.field("tau"), "tau");
    cfg.seed = parse_u64(h.field("seed"), "seed");
    cfg.backbone.stage_channels = parse_ints(h.field("stage_channels"), "stage_channels");
    cfg.backbone.blocks_per_stage = parse_int(h.field("blocks_per_stage"), "blocks_per_stage");
    cfg.backbone.final_channels = parse_int(h.field("final_channels"), "final_channels");
    cfg.backbone.input_size = parse_int(h.field("input_size"), "input_size");
    cfg.backbone.in_channels = parse_int(h.field("in_channels"), "in_channels");
    cfg.backbone.input_mean = parse_float(h.field("input_mean"), "input_mean");
    cfg.backbone.input_std = parse_float(h.field("input_std"), "input_std");
    return cfg;
}

}  // namespace

CheckpointHeader read_checkpoint_header(const fs::path& path) { return read_file(path, false).header; }

void save_checkpoint(const model::MultiStreamModel& m, const fs::path& path) {
    const auto& cfg = m.config();
    CheckpointHeader h;
    h.kind = "multistream";
    h.fields = {{"branches", "global,heatmap,infected,fusion"},
                {"num_classes", std::to_string(cfg.num_classes)},
                {"tau", float_text(cfg.tau)},
                {"seed", std::to_string(cfg.seed)},
                {"stage_channels", join_ints(cfg.backbone.stage_channels)},
                {"blocks_per_stage", std::to_string(cfg.backbone.blocks_per_stage)},
                {"final_channels", std::to_string(cfg.backbone.final_channels)},
                {"input_size", std::to_string(cfg.backbone.input_size)},
                {"in_channels", std::to_string(cfg.backbone.in_channels)},
                {"input_mean", float_text(cfg.backbone.input_mean)},
                {"input_std", float_text(cfg.backbone.input_std)}};
    const auto params = m.parameters();
    h.tensors = table_of(params);
    write_file(path, h, params);
}

void load_checkpoint_into(const fs::path& path, model::MultiStreamModel& m) {
    const auto raw = read_file(path, true);
    if (raw.header.kind != "multistream") {
        throw ValidationError("checkpoint '" + path.string() + "' holds a " + raw.header.kind + ", not a model");
    }
    const auto params = m.parameters();
    check_tables(raw.header.tensors, table_of(as_const(params)));
    fill(raw, params);
    m.set_tau(parse_float(raw.header.field("tau"), "tau"));
}

model::MultiStreamModel load_checkpoint(const fs::path& path) {
    const auto header = read_checkpoint_header(path);
    if (header.kind != "multistream") {
        throw ValidationError("checkpoint '" + path.string() + "' holds a " + header.kind + ", not a model");
    }
    model::MultiStreamModel m(model_config_of(header));
    load_checkpoint_into(path, m);
    return m;
}

void save_segmenter(const semisup::Segmenter& seg, const fs::path& path) {
    const auto& cfg = seg.config();
    CheckpointHeader h;
    h.kind = "segmenter";
    h.fields = {{"input_size", std::to_string(cfg.input_size)},
                {"base_channels", std::to_string(cfg.base_channels)},
                {"seed", std::to_string(cfg.seed)},
                {"input_mean", float_text(cfg.input_mean)},
                {"input_std", float_text(cfg.input_std)}};
    std::vector<const Parameter*> params;
    for (const auto& p : seg.params()) params.push_back(&p);
    h.tensors = table_of(params);
    write_file(path, h, params);
}

semisup::Segmenter load_segmenter(const fs::path& path) {
    const auto raw = read_file(path, true);
    if (raw.header.kind != "segmenter") {
        throw ValidationError("checkpoint '" + path.string() + "' holds a " + raw.header.kind + ", not a segmenter");
    }
    semisup::SegmenterConfig cfg;
    cfg.input_size = parse_int(raw.header.field("input_size"), "input_size");
    cfg.base_channels = parse_int(raw.header.field("base_channels"), "base_channels");
    cfg.seed = parse_u64(raw.header.field("seed"), "seed");
    cfg.input_mean = parse_float(raw.header.field("input_mean"), "input_mean");
    cfg.input_std = parse_float(raw.header.field("input_std"), "input_std");
    semisup::Segmenter seg(cfg);
    auto params = seg.parameters();
    check_tables(raw.header.tensors, table_of(as_const(params)));
    fill(raw, params);
    return seg;
}

}  // namespace attnfuse::io
