#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "wdp/ensemble.hpp"

namespace wdp::pipeline {

// Wall-clock seconds per inference stage. Grayscale conversion is billed to normalization.
struct StageTimings {
    double normalization_s = 0.0;
    double scaling_s = 0.0;
    double detection_s = 0.0;

    double total() const { return normalization_s + scaling_s + detection_s; }
    // Fractions of total(); equal thirds if nothing was measured.
    std::array<double, 3> shares() const;
};

inline constexpr std::array<const char*, 3> kStageNames{"normalization", "scaling", "detection"};

struct PipelineResult {
    ensemble::Detection detection;
    StageTimings timings;
};

// Preprocess then ensemble inference on one raw frame. The detection equals detect(ensemble, frame).
PipelineResult run_pipeline(const ensemble::Ensemble& ensemble, const Tensor& raw_frame);

struct StageStats {
    double mean_s = 0.0;
    double std_s = 0.0;  // sample standard deviation; 0 for a single observation
};

struct ProfileReport {
    std::array<StageStats, 3> stages;  // kStageNames order
    std::array<double, 3> shares{};    // from the mean stage times
    std::vector<StageTimings> runs;    // frames x repetitions, frame-major
    std::size_t frames = 0;
    std::size_t repetitions = 0;
};

ProfileReport profile(const ensemble::Ensemble& ensemble, const std::vector<Tensor>& frames,
                      std::size_t repetitions);

// Header `stage,mean_s,std_s,share` and one row per stage.
std::string to_csv(const ProfileReport& report);
nlohmann::json to_json(const ProfileReport& report);

}  // namespace wdp::pipeline
