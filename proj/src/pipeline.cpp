#include "wdp/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "wdp/error.hpp"
#include "wdp/preprocess.hpp"

namespace wdp::pipeline {

std::array<double, 3> StageTimings::shares() const {
    const double t = total();
    if (!(t > 0.0)) return {1.0 / 3, 1.0 / 3, 1.0 / 3};
    return {normalization_s / t, scaling_s / t, detection_s / t};
}

PipelineResult run_pipeline(const ensemble::Ensemble& ensemble, const Tensor& raw_frame) {
    using Clock = std::chrono::steady_clock;
    const auto since = [](Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); };
    const auto tagged = [](const char* stage, const Error& e) {
        return DataError(std::string(stage) + " stage: " + e.what());
    };
    PipelineResult result;
    preprocess::Image image{raw_frame, preprocess::PixelRange::Byte};

    auto start = Clock::now();
    try {
        image = preprocess::normalize(preprocess::to_grayscale(image));
    } catch (const Error& e) {
        throw tagged(kStageNames[0], e);
    }
    result.timings.normalization_s = since(start);

    start = Clock::now();
    try {
        image = preprocess::resize(image, ensemble.input_size);
    } catch (const Error& e) {
        throw tagged(kStageNames[1], e);
    }
    result.timings.scaling_s = since(start);

    start = Clock::now();
    try {
        result.detection = ensemble::decide(ensemble::predict_proba(ensemble, image.pixels));
    } catch (const Error& e) {
        throw tagged(kStageNames[2], e);
    }
    result.timings.detection_s = since(start);
    return result;
}

ProfileReport profile(const ensemble::Ensemble& ensemble, const std::vector<Tensor>& frames,
                      std::size_t repetitions) {
    if (frames.empty()) throw DataError("profile needs at least one frame");
    if (repetitions < 1) throw ConfigError("profile repetitions must be >= 1");
    ProfileReport report;
    report.frames = frames.size();
    report.repetitions = repetitions;
    for (const auto& f : frames)
        for (std::size_t r = 0; r < repetitions; ++r) report.runs.push_back(run_pipeline(ensemble, f).timings);

    const double count = static_cast<double>(report.runs.size());
    const auto stage = [](const StageTimings& t, std::size_t k) {
        return k == 0 ? t.normalization_s : k == 1 ? t.scaling_s : t.detection_s;
    };
    for (std::size_t k = 0; k < 3; ++k) {
        double sum = 0.0;
        for (const auto& t : report.runs) sum += stage(t, k);
        const double mean = sum / count;
        double sq = 0.0;
        for (const auto& t : report.runs) sq += (stage(t, k) - mean) * (stage(t, k) - mean);
        report.stages[k] = {mean, report.runs.size() > 1 ? std::sqrt(sq / (count - 1.0)) : 0.0};
    }
    report.shares =
        StageTimings{report.stages[0].mean_s, report.stages[1].mean_s, report.stages[2].mean_s}.shares();
    return report;
}

std::string to_csv(const ProfileReport& report) {
    std::ostringstream out;
    out.precision(9);
    out << "stage,mean_s,std_s,share\n";
    for (std::size_t k = 0; k < 3; ++k)
        out << kStageNames[k] << ',' << report.stages[k].mean_s << ',' << report.stages[k].std_s << ','
            << report.shares[k] << '\n';
    return out.str();
}

nlohmann::json to_json(const ProfileReport& report) {
    nlohmann::json stages = nlohmann::json::array();
    for (std::size_t k = 0; k < 3; ++k)
        stages.push_back({{"stage", kStageNames[k]},
                          {"mean_s", report.stages[k].mean_s},
                          {"std_s", report.stages[k].std_s},
                          {"share", report.shares[k]}});
    return {{"frames", report.frames}, {"repetitions", report.repetitions}, {"stages", std::move(stages)}};
}

}  // namespace wdp::pipeline
