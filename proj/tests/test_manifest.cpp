#include <gtest/gtest.h>

#include <map>

#include "attnfuse/errors.hpp"
#include "attnfuse/manifest.hpp"
#include "support/temp_dir.hpp"

using namespace attnfuse;
using namespace attnfuse::io;

namespace {

std::string with_header(const std::string& body) { return std::string(kManifestHeader) + "\n" + body; }

}  // namespace

TEST(Manifest, ParsesUnlabeledRow) {
    const auto m = parse_manifest(with_header("img/a.png,1,,train,unlabeled\n"), "/data", false);
    ASSERT_EQ(m.rows.size(), 1u);
    const auto& r = m.rows[0];
    EXPECT_EQ(r.label, 1);
    EXPECT_FALSE(r.mask_path.has_value());
    EXPECT_EQ(r.split, Split::train);
    EXPECT_EQ(r.role, Role::unlabeled);
    EXPECT_EQ(r.resolved_image, std::filesystem::path("/data/img/a.png"));
}

TEST(Manifest, SeedMaskedNeedsMask) {
    try {
        parse_manifest(with_header("a.pgm,0,,train,labeled-only\nb.pgm,1,,train,seed-masked\n"), ".", false);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(Manifest, MalformedRowsNameTheLine) {
    for (const std::string bad : {"a.pgm,2,,train,unlabeled", "a.pgm,1,,dev,unlabeled", "a.pgm,1,,train",
                                  "a.pgm,1,,train,mystery", ",1,,train,unlabeled"}) {
        try {
            parse_manifest(with_header(bad + "\n"), ".", false);
            FAIL() << bad;
        } catch (const ValidationError& e) {
            EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
        }
    }
    EXPECT_THROW(parse_manifest("path,label\n", ".", false), ValidationError);
}

TEST(Manifest, LargeManifestKeepsCounts) {
    // 349 positives and 397 negatives spread over the three splits.
    std::string body;
    std::map<std::pair<std::string, int>, int> expected;
    const char* splits[] = {"train", "val", "test"};
    for (int i = 0; i < 746; ++i) {
        const int label = i < 349 ? 1 : 0;
        const std::string split = splits[i % 3];
        body += "img_" + std::to_string(i) + ".pgm," + std::to_string(label) + ",," + split + ",labeled-only\n";
        ++expected[{split, label}];
    }
    const auto m = parse_manifest(with_header(body), ".", false);
    ASSERT_EQ(m.rows.size(), 746u);
    std::map<std::pair<std::string, int>, int> got;
    for (const auto& r : m.rows) ++got[{to_string(r.split), r.label}];
    EXPECT_EQ(got, expected);
}

TEST(Manifest, RoundTripIsCanonical) {
    const std::string text = with_header(
        "images/a.pgm,1,masks/a.pgm,train,seed-masked\n"
        "images/b.pgm,0,,val,labeled-only\n"
        "images/c.pgm,1,,test,unlabeled\n");
    const auto m = parse_manifest(text, ".", false);
    EXPECT_EQ(format_manifest(m.rows), text);
}

TEST(Manifest, FileChecks) {
    TempDir dir("manifest");
    EXPECT_THROW(load_manifest(dir / "missing.csv"), IoError);
    write_file(dir / "m.csv", with_header("nope.pgm,0,,train,labeled-only\n"));
    EXPECT_THROW(load_manifest(dir / "m.csv"), ValidationError);
    write_file(dir / "nope.pgm", "x");
    const auto m = load_manifest(dir / "m.csv");
    EXPECT_EQ(m.rows[0].resolved_image, dir / "nope.pgm");
}
