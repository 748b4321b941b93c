#include "wdp/metrics.hpp"

#include <chrono>
#include <iomanip>
#include <sstream>

#include "wdp/error.hpp"
#include "wdp/preprocess.hpp"

namespace wdp::metrics {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Metric ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix confusion(std::span<const std::size_t> predictions, std::span<const std::size_t> labels) {
    if (predictions.size() != labels.size())
        throw ShapeError("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(labels.size()) + " labels");
    if (predictions.empty()) throw ShapeError("confusion needs at least one pair");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool predicted = binarize(predictions[i]) == Presence::Weapon;
        const bool actual = binarize(labels[i]) == Presence::Weapon;
        if (predicted && actual) ++cm.tp;
        else if (predicted) ++cm.fp;
        else if (actual) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

Metric accuracy(const ConfusionMatrix& cm) { return ratio(cm.tp + cm.tn, cm.total()); }
Metric precision(const ConfusionMatrix& cm) { return ratio(cm.tp, cm.tp + cm.fp); }
Metric sensitivity(const ConfusionMatrix& cm) { return ratio(cm.tp, cm.tp + cm.fn); }

std::string format_metric(const Metric& m, int digits) {
    if (!m) return "undef";
    std::ostringstream out;
    out << std::fixed << std::setprecision(digits) << *m;
    return out.str();
}

MetricsReport make_report(std::string name, const ConfusionMatrix& cm) {
    return {std::move(name), cm, accuracy(cm), precision(cm), sensitivity(cm), 0.0, 0};
}

MetricsReport evaluate(const ensemble::Ensemble& ensemble, const data::Dataset& test) {
    if (test.empty()) throw DataError("cannot evaluate on an empty test set");
    std::vector<std::size_t> predictions, labels;
    double elapsed = 0.0;
    for (const auto& s : test.samples) {
        const auto start = Clock::now();
        ensemble::Detection d;
        try {
            d = ensemble::detect(ensemble, s.image);
        } catch (const Error& e) {
            throw DataError("inference failed for sample '" + s.id + "': " + e.what());
        }
        elapsed += seconds_since(start);
        predictions.push_back(d.predicted_class);
        labels.push_back(s.label);
    }
    auto report = make_report("ensemble", confusion(predictions, labels));
    report.mean_inference_seconds = elapsed / static_cast<double>(test.size());
    report.model_bytes = ensemble::serialize_ensemble(ensemble).size();
    return report;
}

std::vector<MetricsReport> evaluate_members(const ensemble::Ensemble& ensemble, const data::Dataset& test) {
    if (test.empty()) throw DataError("cannot evaluate on an empty test set");
    const std::size_t n = ensemble.size();
    std::vector<std::vector<std::size_t>> predictions(n + 1);
    std::vector<double> member_time(n, 0.0);
    double preprocess_time = 0.0, aggregate_time = 0.0;
    std::vector<std::size_t> labels;
    for (const auto& s : test.samples) {
        preprocess::PreparedFrame frame;
        try {
            auto start = Clock::now();
            frame = preprocess::preprocess_frame(s.image, ensemble.input_size);
            preprocess_time += seconds_since(start);
        } catch (const Error& e) {
            throw DataError("inference failed for sample '" + s.id + "': " + e.what());
        }
        std::vector<Tensor> outputs;
        for (std::size_t i = 0; i < n; ++i) {
            const auto start = Clock::now();
            outputs.push_back(ensemble.models[i].predict(frame.input));
            member_time[i] += seconds_since(start);
            predictions[i].push_back(ensemble::decide(outputs.back()).predicted_class);
        }
        const auto start = Clock::now();
        predictions[n].push_back(ensemble::decide(ensemble::aggregate_mean(outputs)).predicted_class);
        aggregate_time += seconds_since(start);
        labels.push_back(s.label);
    }

    const double count = static_cast<double>(test.size());
    std::vector<MetricsReport> reports;
    double total_member_time = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = make_report(ensemble.models[i].descriptor.name, confusion(predictions[i], labels));
        r.mean_inference_seconds = (preprocess_time + member_time[i]) / count;
        ensemble::Ensemble single{{ensemble.models[i]}, ensemble.class_names, ensemble.input_size};
        r.model_bytes = ensemble::serialize_ensemble(single).size();
        total_member_time += member_time[i];
        reports.push_back(std::move(r));
    }
    auto k = make_report("κ", confusion(predictions[n], labels));
    k.mean_inference_seconds = (preprocess_time + total_member_time + aggregate_time) / count;
    k.model_bytes = ensemble::serialize_ensemble(ensemble).size();
    reports.push_back(std::move(k));
    return reports;
}

nlohmann::json to_json(const MetricsReport& report) {
    const auto metric = [](const Metric& m) -> nlohmann::json {
        if (m) return *m;
        return "undef";
    };
    return {{"name", report.name},
            {"confusion", {{"tp", report.confusion.tp}, {"fp", report.confusion.fp},
                           {"fn", report.confusion.fn}, {"tn", report.confusion.tn}}},
            {"accuracy", metric(report.accuracy)},
            {"precision", metric(report.precision)},
            {"sensitivity", metric(report.sensitivity)},
            {"mean_inference_seconds", report.mean_inference_seconds},
            {"model_bytes", report.model_bytes}};
}

std::string format_table(const std::vector<MetricsReport>& reports) {
    constexpr int label_width = 12;
    constexpr int col_width = 10;
    std::ostringstream out;
    const auto pad = [&](const std::string& text, int width) {
        // Width counts code points so the UTF-8 κ header lines up.
        int visible = 0;
        for (unsigned char ch : text) visible += (ch & 0xC0) != 0x80;
        out << text << std::string(static_cast<std::size_t>(std::max(1, width - visible)), ' ');
    };
    pad("Metrics", label_width);
    for (const auto& r : reports) pad(r.name, col_width);
    out << '\n';
    const std::pair<const char*, Metric MetricsReport::*> rows[] = {
        {"Accuracy", &MetricsReport::accuracy},
        {"Precision", &MetricsReport::precision},
        {"Sensitivity", &MetricsReport::sensitivity},
    };
    for (const auto& [label, field] : rows) {
        pad(label, label_width);
        for (const auto& r : reports) pad(format_metric(r.*field), col_width);
        out << '\n';
    }
    std::string text = out.str();
    // Trailing spaces are noise in diffs.
    std::string cleaned;
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
        line.erase(line.find_last_not_of(' ') + 1);
        cleaned += line + '\n';
    }
    return cleaned;
}

}  // namespace wdp::metrics
