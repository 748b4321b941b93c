#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wdp/data.hpp"
#include "wdp/network.hpp"
#include "wdp/preprocess.hpp"

namespace wdp {

// Reproducible description of a run. Every section is optional; unknown keys are rejected.
struct RunConfig {
    struct Data {
        std::string source = "synth";  // "synth" or "directory"
        data::SynthOptions synth;
    } data;
    preprocess::PreprocessConfig preprocess;
    struct Partition {
        std::size_t x = 5;
        std::optional<std::size_t> m;  // default floor(min class count / x)
        double rho = 0.10;
        std::uint64_t seed = 0;
    } partition;
    nn::TrainConfig train;
    bool parallel = true;
    struct Ensemble {
        std::size_t n = 5;
        std::vector<std::string> architectures;  // catalog names; empty = first n
    } ensemble;

    // Module preconditions that do not depend on the data.
    void validate() const;
    nlohmann::json to_json() const;
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace wdp
