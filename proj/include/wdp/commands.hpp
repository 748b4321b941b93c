#pragma once

// Implementation of the `wdp` subcommands. Each returns the process exit code
// and writes machine-readable output to `out`, diagnostics to `err`.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace wdp::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kConfig = 2, kData = 3, kNumeric = 4 };

struct TrainOptions {
    std::filesystem::path config;
    std::optional<std::filesystem::path> data_dir;  // synthesized in memory when absent and source is synth
    std::filesystem::path model_out;
    std::optional<std::filesystem::path> log_out;   // default <model_out>.log.json
    std::optional<std::filesystem::path> plan_out;
};

struct EvaluateOptions {
    std::filesystem::path model;
    std::filesystem::path data_dir;
    std::optional<std::filesystem::path> config;  // needed to select the train or test split
    std::string split = "all";                    // all | train | test
    bool table = false;
};

struct ProfileOptions {
    std::filesystem::path model;
    std::optional<std::filesystem::path> config;  // checked against the model when given
    std::filesystem::path data_dir;
    std::size_t repetitions = 1;
    std::size_t max_frames = 0;  // 0 = every sample
    bool json = false;
};

int cmd_synth(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::ostream& out,
              std::ostream& err);
int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& options, std::ostream& out, std::ostream& err);
int cmd_predict(const std::filesystem::path& model, const std::filesystem::path& image, std::ostream& out,
                std::ostream& err, const std::optional<std::filesystem::path>& config = std::nullopt);
int cmd_profile(const ProfileOptions& options, std::ostream& out, std::ostream& err);

}  // namespace wdp::cli
