#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "wdp/data.hpp"
#include "wdp/error.hpp"
#include "wdp/png_io.hpp"

namespace wdp::data {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("wdp_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Dataset tiny(const std::string& source, std::size_t n, std::size_t first_label = 0) {
    Dataset ds;
    for (std::size_t i = 0; i < n; ++i)
        ds.samples.push_back({"img" + std::to_string(i), Tensor({1, 2, 2}, 7.0), (first_label + i) % 3, source});
    return ds;
}

TEST(Manifest, EmptyManifestGivesEmptyDataset) {
    const auto dir = scratch_dir("empty");
    write_manifest(dir / "manifest.csv", {});
    EXPECT_TRUE(ingest_directory(dir).empty());
}

TEST(Ingest, ThreeLabeledFiles) {
    const auto dir = scratch_dir("three");
    std::vector<ManifestRow> rows;
    const char* classes[] = {"none", "gun", "knife"};
    for (int i = 0; i < 3; ++i) {
        Tensor img({1, 4, 5}, 10.0 * i);
        img.at(0, 1, 2) = 255;
        write_png(dir / ("f" + std::to_string(i) + ".png"), img);
        rows.push_back({"f" + std::to_string(i) + ".png", classes[i]});
    }
    write_manifest(dir / "manifest.csv", rows);
    const auto ds = ingest_directory(dir, dir / "manifest.csv", "WDD");
    ASSERT_EQ(ds.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(ds.samples[i].label, i);
        EXPECT_EQ(ds.samples[i].source, "WDD");
        EXPECT_EQ(ds.samples[i].image.shape(), (Shape{1, 4, 5}));
        EXPECT_EQ(ds.samples[i].image.at(0, 0, 0), 10.0 * i);
        EXPECT_EQ(ds.samples[i].image.at(0, 1, 2), 255.0);
    }
}

TEST(Ingest, RgbPngKeepsThreeChannels) {
    const auto dir = scratch_dir("rgb");
    Tensor img({3, 2, 2});
    img.at(0, 0, 0) = 255;
    img.at(2, 1, 1) = 9;
    write_png(dir / "c.png", img);
    EXPECT_EQ(read_png(dir / "c.png"), img);
}

TEST(Ingest, UnknownClassNamesTheClassAndFile) {
    const auto dir = scratch_dir("sword");
    write_png(dir / "a.png", Tensor({1, 2, 2}));
    write_manifest(dir / "manifest.csv", {{"a.png", "sword"}});
    try {
        ingest_directory(dir);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("sword"), std::string::npos);
        EXPECT_NE(msg.find("unregistered"), std::string::npos);
        EXPECT_NE(msg.find("a.png"), std::string::npos);
    }
}

TEST(Ingest, UnreadableImageNamesTheFile) {
    const auto dir = scratch_dir("broken");
    std::ofstream(dir / "bad.png") << "not a png";
    write_manifest(dir / "manifest.csv", {{"bad.png", "gun"}});
    try {
        ingest_directory(dir);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.png"), std::string::npos);
    }
}

TEST(Ingest, HeaderIsRequired) {
    const auto dir = scratch_dir("header");
    std::ofstream(dir / "manifest.csv") << "file,label\na.png,gun\n";
    EXPECT_THROW(ingest_directory(dir), DataError);
}

TEST(Merge, SizesAddUp) {
    const auto merged = merge_datasets({tiny("WDD", 5891), tiny("GD", 2078), tiny("GDD", 1422)});
    EXPECT_EQ(merged.size(), 9391u);
    EXPECT_EQ(merged.samples.front().id, "WDD/img0");
    EXPECT_EQ(merged.samples.back().id, "GDD/img1421");
}

TEST(Merge, SinglePartIsIdentity) {
    const auto part = tiny("WDD", 4);
    const auto merged = merge_datasets({part});
    ASSERT_EQ(merged.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(merged.samples[i].id, part.samples[i].id);
}

TEST(Merge, SharedRawIdsStayUnique) {
    const auto merged = merge_datasets({tiny("WDD", 2), tiny("GD", 2)});
    EXPECT_NO_THROW(merged.validate());
    EXPECT_EQ(merged.samples[0].id, "WDD/img0");
    EXPECT_EQ(merged.samples[2].id, "GD/img0");
}

TEST(Merge, ClassListMismatchThrows) {
    auto other = tiny("GD", 2);
    other.class_names = {"none", "weapon"};
    EXPECT_THROW(merge_datasets({tiny("WDD", 2), other}), DataError);
}

TEST(Merge, AssociativeUpToOrder) {
    const auto a = tiny("A", 3), b = tiny("B", 4), c = tiny("C", 5);
    const auto left = merge_datasets({a, b, c});
    EXPECT_EQ(left.size(), a.size() + b.size() + c.size());
}

TEST(Apportion, LargestRemainder) {
    EXPECT_EQ(apportion(3, {1.0 / 3, 1.0 / 3, 1.0 / 3}), (std::vector<std::size_t>{1, 1, 1}));
    EXPECT_EQ(apportion(1000, {0.34, 0.33, 0.33}), (std::vector<std::size_t>{340, 330, 330}));
    EXPECT_EQ(apportion(10, {0.25, 0.25, 0.5}), (std::vector<std::size_t>{3, 2, 5}));
    EXPECT_THROW(apportion(10, {0.5, 0.3, 0.1}), ConfigError);
}

TEST(Synth, OneSamplePerClass) {
    const auto ds = synth_generate({3, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 32, 1});
    EXPECT_EQ(ds.class_counts(), (std::vector<std::size_t>{1, 1, 1}));
}

TEST(Synth, ClassCountsFollowApportionment) {
    const auto ds = synth_generate({1000, {0.34, 0.33, 0.33}, 16, 2});
    EXPECT_EQ(ds.class_counts(), (std::vector<std::size_t>{340, 330, 330}));
}

TEST(Synth, DeterministicAndSeedSensitive) {
    const SynthOptions base{40, {0.4, 0.3, 0.3}, 32, 77};
    const auto a = synth_generate(base), b = synth_generate(base);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.samples[i].image, b.samples[i].image);

    for (std::uint64_t s = 0; s < 10; ++s) {
        auto opt = base;
        opt.seed = 1000 + s;
        const auto x = synth_generate(opt);
        opt.seed = 2000 + s;
        const auto y = synth_generate(opt);
        bool differs = false;
        for (std::size_t i = 0; i < x.size() && !differs; ++i) differs = !(x.samples[i].image == y.samples[i].image);
        EXPECT_TRUE(differs) << "seed pair " << s;
    }
}

TEST(Synth, ImagesAreGrayscaleBytesWithDrawnWeapons) {
    const auto ds = synth_generate({600, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 16, 3});
    for (const auto& s : ds.samples) {
        ASSERT_EQ(s.image.shape(), (Shape{1, 16, 16}));
        EXPECT_GE(s.image.min(), 0.0);
        EXPECT_LE(s.image.max(), 255.0);
        if (s.label != kNoWeapon) EXPECT_GT(s.image.max(), 128.0) << s.id;
    }
}

TEST(Synth, RejectsBadOptions) {
    EXPECT_THROW(synth_generate({10, {0.5, 0.3, 0.1}, 32, 0}), ConfigError);
    EXPECT_THROW(synth_generate({10, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 15, 0}), ConfigError);
    EXPECT_THROW(synth_generate({0, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 32, 0}), ConfigError);
}

TEST(Synth, ExportRoundTripsThroughIngest) {
    const auto dir = scratch_dir("export");
    const auto ds = synth_generate({12, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 20, 4});
    export_dataset(ds, dir);
    const auto back = ingest_directory(dir);
    ASSERT_EQ(back.size(), ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        EXPECT_EQ(back.samples[i].image, ds.samples[i].image);
        EXPECT_EQ(back.samples[i].label, ds.samples[i].label);
        EXPECT_EQ(back.samples[i].id, ds.samples[i].id + ".png");
    }
}

}  // namespace
}  // namespace wdp::data
