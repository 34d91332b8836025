#include "attnfuse/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "attnfuse/errors.hpp"

namespace attnfuse::io {

namespace fs = std::filesystem;

std::uint8_t quantize(float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

// Reads the next header token, skipping whitespace and '#' comments.
std::string token(std::istream& in, const fs::path& path) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    if (tok.empty()) throw IoError("'" + path.string() + "': truncated header");
    return tok;
}

struct Raster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bytes;
};

Raster read_netpbm(const fs::path& path, const std::string& magic, int channels) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    if (token(in, path) != magic) throw IoError("'" + path.string() + "' is not a " + magic + " file");
    Raster r;
    try {
        r.width = std::stoi(token(in, path));
        r.height = std::stoi(token(in, path));
        const int maxval = std::stoi(token(in, path));
        if (maxval != 255) throw IoError("'" + path.string() + "': only maxval 255 is supported");
    } catch (const std::logic_error&) {
        throw IoError("'" + path.string() + "': malformed header");
    }
    if (r.width <= 0 || r.height <= 0) throw IoError("'" + path.string() + "': bad dimensions");
    r.bytes.resize(static_cast<std::size_t>(r.width) * r.height * channels);
    in.read(reinterpret_cast<char*>(r.bytes.data()), static_cast<std::streamsize>(r.bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(r.bytes.size())) {
        throw IoError("'" + path.string() + "': truncated pixel data");
    }
    return r;
}

void write_netpbm(const fs::path& path, const std::string& magic, int width, int height,
                  const std::vector<std::uint8_t>& bytes) {
    auto out = open_out(path);
    out << magic << '\n' << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

void write_pgm(const fs::path& path, const vision::GrayImage& img) {
    std::vector<std::uint8_t> bytes(img.pixels().size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize(img.pixels()[i]);
    write_netpbm(path, "P5", img.width(), img.height(), bytes);
}

vision::GrayImage read_pgm(const fs::path& path) {
    const auto r = read_netpbm(path, "P5", 1);
    std::vector<float> px(r.bytes.size());
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<float>(r.bytes[i]) / 255.0f;
    return vision::GrayImage(r.height, r.width, std::move(px));
}

void write_mask_pgm(const fs::path& path, const vision::BinaryMask& mask) {
    std::vector<std::uint8_t> bytes(mask.bits().size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.bits()[i] ? 255 : 0;
    write_netpbm(path, "P5", mask.width(), mask.height(), bytes);
}

vision::BinaryMask read_mask_pgm(const fs::path& path) {
    const auto r = read_netpbm(path, "P5", 1);
    vision::BinaryMask m(r.height, r.width);
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x) m.set(y, x, r.bytes[static_cast<std::size_t>(y) * r.width + x] != 0);
    return m;
}

void write_ppm(const fs::path& path, const RgbImage& img) {
    if (img.rgb.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
        throw DimensionError("write_ppm: buffer does not match dimensions");
    }
    write_netpbm(path, "P6", img.width, img.height, img.rgb);
}

RgbImage read_ppm(const fs::path& path) {
    auto r = read_netpbm(path, "P6", 3);
    return RgbImage{r.height, r.width, std::move(r.bytes)};
}

}  // namespace attnfuse::io
