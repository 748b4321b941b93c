#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"
#include "wdp/png_io.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(WDP_CLI_PATH) + " " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    for (std::size_t n; (n = fread(buf.data(), 1, buf.size(), pipe)) > 0;) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("wdp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }

    fs::path write_config(const json& doc, const std::string& name = "config.json") {
        const auto p = dir / name;
        std::ofstream(p) << doc.dump(2);
        return p;
    }

    json small_config() const {
        return {{"data", {{"synth", {{"n", 60}, {"mix", {0.4, 0.3, 0.3}}, {"canvas", 32}, {"seed", 3}}}}},
                {"preprocess", {{"split_seed", 4}}},
                {"partition", {{"x", 2}, {"seed", 5}}},
                {"train", {{"epochs", 1}, {"batch_size", 8}, {"seed", 6}}},
                {"ensemble", {{"n", 2}}}};
    }

    std::string q(const fs::path& p) const { return "'" + p.string() + "'"; }

    fs::path dir;
};

TEST_F(Cli, SynthWritesPngsAndManifest) {
    json cfg{{"data", {{"synth", {{"n", 3}, {"mix", {1.0 / 3, 1.0 / 3, 1.0 / 3}}, {"seed", 1}}}}}};
    const auto r = run("synth --config " + q(write_config(cfg)) + " --out " + q(dir / "ds"));
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(json::parse(r.out).at("samples"), 3);
    std::size_t pngs = 0;
    for (const auto& e : fs::directory_iterator(dir / "ds")) pngs += e.path().extension() == ".png";
    EXPECT_EQ(pngs, 3u);
    const auto manifest = slurp(dir / "ds" / "manifest.csv");
    EXPECT_EQ(std::count(manifest.begin(), manifest.end(), '\n'), 4);
    EXPECT_EQ(manifest.rfind("filename,class\n", 0), 0u);
}

TEST_F(Cli, BadMixIsConfigError) {
    json cfg{{"data", {{"synth", {{"n", 3}, {"mix", {0.5, 0.3, 0.1}}}}}}};
    EXPECT_EQ(run("synth --config " + q(write_config(cfg)) + " --out " + q(dir / "ds")).code, 2);
}

TEST_F(Cli, ZeroEpochsIsConfigError) {
    auto cfg = small_config();
    cfg["train"]["epochs"] = 0;
    EXPECT_EQ(run("train --config " + q(write_config(cfg)) + " --model " + q(dir / "m.wdpm")).code, 2);
}

TEST_F(Cli, UnknownKeyAndMissingFile) {
    EXPECT_EQ(run("train --config " + q(write_config({{"trian", {}}})) + " --model " + q(dir / "m.wdpm")).code, 2);
    EXPECT_EQ(run("train --config " + q(dir / "absent.json") + " --model " + q(dir / "m.wdpm")).code, 2);
    EXPECT_EQ(run("predict --model " + q(dir / "absent.wdpm") + " --image " + q(dir / "x.png")).code, 3);
    EXPECT_EQ(run("bogus").code, 2);
}

TEST_F(Cli, TrainIsDeterministicAndWritesWdpm) {
    const auto cfg = write_config(small_config());
    const auto a = run("train --config " + q(cfg) + " --model " + q(dir / "a.wdpm") + " --plan " + q(dir / "plan.json"));
    ASSERT_EQ(a.code, 0);
    const auto b = run("train --config " + q(cfg) + " --model " + q(dir / "b.wdpm"));
    ASSERT_EQ(b.code, 0);
    const auto bytes = slurp(dir / "a.wdpm");
    EXPECT_EQ(bytes.substr(0, 4), "WDPM");
    EXPECT_EQ(bytes, slurp(dir / "b.wdpm"));

    const auto log = json::parse(slurp(dir / "a.wdpm.log.json"));
    EXPECT_EQ(log.at("models").size(), 2u);
    EXPECT_EQ(log.at("plan_digest"), json::parse(b.out).at("plan_digest"));
    EXPECT_EQ(json::parse(slurp(dir / "plan.json")).at("x"), 2);
}

TEST_F(Cli, TrainDirectorySourceNeedsData) {
    auto cfg = small_config();
    cfg["data"]["source"] = "directory";
    EXPECT_EQ(run("train --config " + q(write_config(cfg)) + " --model " + q(dir / "m.wdpm")).code, 2);
}

TEST_F(Cli, EvaluatePredictProfile) {
    auto cfg = small_config();
    cfg["train"]["epochs"] = 3;
    const auto cfg_path = write_config(cfg);
    ASSERT_EQ(run("synth --config " + q(cfg_path) + " --out " + q(dir / "ds")).code, 0);
    cfg["data"]["source"] = "directory";
    const auto dir_cfg = write_config(cfg, "dir.json");
    ASSERT_EQ(run("train --config " + q(dir_cfg) + " --data " + q(dir / "ds") + " --model " + q(dir / "m.wdpm")).code, 0);

    const auto train_eval = run("evaluate --model " + q(dir / "m.wdpm") + " --data " + q(dir / "ds") + " --config " +
                                q(dir_cfg) + " --split train");
    const auto test_eval = run("evaluate --model " + q(dir / "m.wdpm") + " --data " + q(dir / "ds") + " --config " +
                               q(dir_cfg) + " --split test");
    ASSERT_EQ(train_eval.code, 0);
    ASSERT_EQ(test_eval.code, 0);
    const auto tr = json::parse(train_eval.out), te = json::parse(test_eval.out);
    EXPECT_EQ(tr.at("samples"), 45);
    EXPECT_EQ(te.at("samples"), 15);
    EXPECT_EQ(tr.at("base_models").size(), 2u);
    EXPECT_TRUE(te.at("ensemble").contains("accuracy"));

    const auto table = run("evaluate --table --model " + q(dir / "m.wdpm") + " --data " + q(dir / "ds"));
    ASSERT_EQ(table.code, 0);
    EXPECT_NE(table.out.find("Sensitivity"), std::string::npos);

    const auto prof = run("profile --reps 1 --model " + q(dir / "m.wdpm") + " --data " + q(dir / "ds"));
    ASSERT_EQ(prof.code, 0);
    EXPECT_EQ(std::count(prof.out.begin(), prof.out.end(), '\n'), 4);
    EXPECT_EQ(prof.out.rfind("stage,mean_s,std_s,share\n", 0), 0u);
    EXPECT_EQ(run("profile --frames 2 --config " + q(dir_cfg) + " --model " + q(dir / "m.wdpm") + " --data " +
                  q(dir / "ds"))
                  .code,
              0);
    auto wrong_size = cfg;
    wrong_size["preprocess"]["target_size"] = 24;
    EXPECT_EQ(run("profile --config " + q(write_config(wrong_size, "w.json")) + " --model " + q(dir / "m.wdpm") +
                  " --data " + q(dir / "ds"))
                  .code,
              2);

    EXPECT_EQ(run("evaluate --model " + q(dir / "m.wdpm") + " --data " + q(dir / "nowhere")).code, 3);
    EXPECT_EQ(run("evaluate --split test --model " + q(dir / "m.wdpm") + " --data " + q(dir / "ds")).code, 2);
}

TEST_F(Cli, PredictOnBlackFrameWithFreshModel) {
    auto cfg = small_config();
    cfg["train"]["learning_rate"] = 1e-300;
    ASSERT_EQ(run("train --config " + q(write_config(cfg)) + " --model " + q(dir / "m.wdpm")).code, 0);
    wdp::write_png(dir / "black.png", wdp::Tensor({3, 32, 32}, 0.0));
    const auto r = run("predict --model " + q(dir / "m.wdpm") + " --image " + q(dir / "black.png"));
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);
    const auto doc = json::parse(r.out);
    EXPECT_GE(doc.at("confidence").get<double>(), 0.0);
    EXPECT_LE(doc.at("confidence").get<double>(), 1.0);
    EXPECT_EQ(doc.at("probabilities").size(), 3u);

    const auto cfg_path = write_config(cfg);
    EXPECT_EQ(run("predict --config " + q(cfg_path) + " --model " + q(dir / "m.wdpm") + " --image " +
                  q(dir / "black.png"))
                  .code,
              0);
    auto bad = cfg;
    bad["bogus"] = 1;
    EXPECT_EQ(run("predict --config " + q(write_config(bad, "bad.json")) + " --model " + q(dir / "m.wdpm") +
                  " --image " + q(dir / "black.png"))
                  .code,
              2);
}

}  // namespace
