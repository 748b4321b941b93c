#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wdp/data.hpp"
#include "wdp/ensemble.hpp"

namespace wdp::metrics {

enum class Presence { NoWeapon, Weapon };

// none -> NoWeapon; every other class -> Weapon.
inline Presence binarize(std::size_t class_index) {
    return class_index == data::kNoWeapon ? Presence::NoWeapon : Presence::Weapon;
}

struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fp + fn + tn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const std::size_t> predictions, std::span<const std::size_t> labels);

// Empty when the denominator is zero ("undef" in reports), never coerced to 0.
using Metric = std::optional<double>;

Metric accuracy(const ConfusionMatrix& cm);     // (TP+TN)/(TP+TN+FP+FN)
Metric precision(const ConfusionMatrix& cm);    // TP/(TP+FP)
Metric sensitivity(const ConfusionMatrix& cm);  // TP/(TP+FN), a.k.a. recall

std::string format_metric(const Metric& m, int digits = 4);

struct MetricsReport {
    std::string name;
    ConfusionMatrix confusion;
    Metric accuracy;
    Metric precision;
    Metric sensitivity;
    double mean_inference_seconds = 0.0;
    std::size_t model_bytes = 0;
};

MetricsReport make_report(std::string name, const ConfusionMatrix& cm);

// Runs detect() on every test sample.
MetricsReport evaluate(const ensemble::Ensemble& ensemble, const data::Dataset& test);

// One report per base model (BM1..BMn, each evaluated on its own) followed by
// the ensemble. Frames are preprocessed once and shared by all columns.
std::vector<MetricsReport> evaluate_members(const ensemble::Ensemble& ensemble, const data::Dataset& test);

nlohmann::json to_json(const MetricsReport& report);
// Rows Accuracy / Precision / Sensitivity, one column per report.
std::string format_table(const std::vector<MetricsReport>& reports);

}  // namespace wdp::metrics
