#include <gtest/gtest.h>

#include <algorithm>

#include "wdp/error.hpp"
#include "wdp/metrics.hpp"
#include "wdp/rng.hpp"

namespace wdp::metrics {
namespace {

// Naive second counter: classify each pair by explicit presence flags.
ConfusionMatrix brute_force(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& label) {
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool said_weapon = pred[i] == 1 || pred[i] == 2;
        const bool is_weapon = label[i] == 1 || label[i] == 2;
        if (said_weapon && is_weapon) ++cm.tp;
        if (said_weapon && !is_weapon) ++cm.fp;
        if (!said_weapon && is_weapon) ++cm.fn;
        if (!said_weapon && !is_weapon) ++cm.tn;
    }
    return cm;
}

TEST(Binarize, Classes) {
    EXPECT_EQ(binarize(0), Presence::NoWeapon);
    EXPECT_EQ(binarize(1), Presence::Weapon);
    EXPECT_EQ(binarize(2), Presence::Weapon);
}

TEST(Confusion, AllCorrect) {
    std::vector<std::size_t> labels(10, 1);
    labels.insert(labels.end(), 10, 0);
    EXPECT_EQ(confusion(labels, labels), (ConfusionMatrix{10, 0, 0, 10}));
}

TEST(Confusion, AlwaysWeapon) {
    std::vector<std::size_t> labels(10, 2);
    labels.insert(labels.end(), 10, 0);
    const std::vector<std::size_t> preds(20, 1);
    EXPECT_EQ(confusion(preds, labels), (ConfusionMatrix{10, 10, 0, 0}));
}

TEST(Confusion, GunForKnifeIsStillATruePositive) {
    EXPECT_EQ(confusion(std::vector<std::size_t>{1}, std::vector<std::size_t>{2}), (ConfusionMatrix{1, 0, 0, 0}));
}

TEST(Confusion, MatchesBruteForceAndIsOrderFree) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SplitMix64 rng(seed);
        std::vector<std::size_t> pred(200), label(200);
        for (std::size_t i = 0; i < 200; ++i) {
            pred[i] = rng.below(3);
            label[i] = rng.below(3);
        }
        const auto cm = confusion(pred, label);
        EXPECT_EQ(cm, brute_force(pred, label));
        EXPECT_EQ(cm.total(), 200u);

        std::vector<std::size_t> order(200);
        for (std::size_t i = 0; i < 200; ++i) order[i] = i;
        rng.shuffle(std::span<std::size_t>(order));
        std::vector<std::size_t> p2, l2;
        for (auto i : order) {
            p2.push_back(pred[i]);
            l2.push_back(label[i]);
        }
        EXPECT_EQ(confusion(p2, l2), cm);
    }
}

TEST(Confusion, BadInput) {
    EXPECT_THROW(confusion(std::vector<std::size_t>{0, 1}, std::vector<std::size_t>{0}), ShapeError);
    EXPECT_THROW(confusion(std::vector<std::size_t>{}, std::vector<std::size_t>{}), ShapeError);
}

TEST(Formulas, Perfect) {
    const ConfusionMatrix cm{10, 0, 0, 10};
    EXPECT_EQ(accuracy(cm), 1.0);
    EXPECT_EQ(precision(cm), 1.0);
    EXPECT_EQ(sensitivity(cm), 1.0);
}

TEST(Formulas, HandComputed) {
    const ConfusionMatrix cm{50, 10, 5, 35};
    EXPECT_DOUBLE_EQ(*accuracy(cm), 0.85);
    EXPECT_DOUBLE_EQ(*precision(cm), 50.0 / 60.0);
    EXPECT_DOUBLE_EQ(*sensitivity(cm), 50.0 / 55.0);
}

TEST(Formulas, UndefinedIsNotZero) {
    const ConfusionMatrix cm{0, 0, 3, 7};
    EXPECT_FALSE(precision(cm).has_value());
    EXPECT_EQ(accuracy(cm), 0.7);
    EXPECT_EQ(sensitivity(cm), 0.0);
    EXPECT_EQ(format_metric(precision(cm)), "undef");
    EXPECT_FALSE(accuracy(ConfusionMatrix{}).has_value());
}

TEST(Formulas, RangeAndPerfectAccuracyLaw) {
    SplitMix64 rng(4);
    for (int i = 0; i < 500; ++i) {
        const ConfusionMatrix cm{rng.below(5), rng.below(5), rng.below(5), rng.below(5)};
        for (const auto& m : {accuracy(cm), precision(cm), sensitivity(cm)})
            if (m) {
                EXPECT_GE(*m, 0.0);
                EXPECT_LE(*m, 1.0);
            }
        if (cm.total() > 0) EXPECT_EQ(*accuracy(cm) == 1.0, cm.fp == 0 && cm.fn == 0);
    }
}

TEST(Report, RecomputableFromConfusion) {
    const auto r = make_report("x", {7, 2, 1, 9});
    EXPECT_EQ(r.accuracy, accuracy(r.confusion));
    EXPECT_EQ(r.precision, precision(r.confusion));
    EXPECT_EQ(r.sensitivity, sensitivity(r.confusion));
    const auto doc = to_json(r);
    EXPECT_EQ(doc.at("confusion").at("tp"), 7);
    EXPECT_EQ(doc.at("accuracy").get<double>(), *r.accuracy);
}

TEST(Report, JsonMarksUndefined) {
    const auto doc = to_json(make_report("x", {0, 0, 3, 7}));
    EXPECT_EQ(doc.at("precision"), "undef");
}

TEST(Report, TableLayout) {
    std::vector<MetricsReport> rows{make_report("BM1", {5, 1, 1, 3}), make_report("κ", {0, 0, 3, 7})};
    const auto table = format_table(rows);
    EXPECT_NE(table.find("Accuracy"), std::string::npos);
    EXPECT_NE(table.find("Precision"), std::string::npos);
    EXPECT_NE(table.find("Sensitivity"), std::string::npos);
    EXPECT_NE(table.find("BM1"), std::string::npos);
    EXPECT_NE(table.find("κ"), std::string::npos);
    EXPECT_NE(table.find("undef"), std::string::npos);
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
}

ensemble::Ensemble biased_to_none() {
    ensemble::Ensemble e;
    const auto d = ensemble::default_architectures(1, 3, 32)[0];
    auto m = ensemble::init_base_model(d, 3, 32, 1);
    auto& out = m.network.params()[m.network.params().size() - 2];
    for (auto& w : out.weight.data()) w = 0.0;
    out.bias = Tensor({3}, {5.0, 0.0, 0.0});
    e.models.push_back(std::move(m));
    return e;
}

TEST(Evaluate, AlwaysNoneOnNoneSet) {
    const auto ens = biased_to_none();
    data::Dataset test;
    for (int i = 0; i < 4; ++i) test.samples.push_back({"n" + std::to_string(i), Tensor({1, 32, 32}, 20.0 * i), 0, "T"});
    const auto r = evaluate(ens, test);
    EXPECT_EQ(r.confusion, (ConfusionMatrix{0, 0, 0, 4}));
    EXPECT_EQ(r.accuracy, 1.0);
    EXPECT_GT(r.mean_inference_seconds, 0.0);
    EXPECT_EQ(r.model_bytes, ensemble::serialize_ensemble(ens).size());
}

TEST(Evaluate, SingleSampleAndEmpty) {
    const auto ens = biased_to_none();
    data::Dataset test;
    test.samples.push_back({"g", Tensor({1, 32, 32}), 1, "T"});
    EXPECT_EQ(evaluate(ens, test).confusion.total(), 1u);
    EXPECT_EQ(evaluate(ens, test).confusion.fn, 1u);
    EXPECT_THROW(evaluate(ens, data::Dataset{}), DataError);
}

TEST(Evaluate, MembersThenEnsemble) {
    ensemble::Ensemble e;
    std::size_t i = 0;
    for (const auto& d : ensemble::default_architectures(3, 3, 32)) e.models.push_back(ensemble::init_base_model(d, 3, 32, i++));
    const auto test = data::synth_generate({9, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 32, 3});
    const auto reports = evaluate_members(e, test);
    ASSERT_EQ(reports.size(), 4u);
    EXPECT_EQ(reports[0].name, "BM1");
    EXPECT_EQ(reports[3].name, "κ");
    EXPECT_EQ(reports[3].confusion, evaluate(e, test).confusion);
}

}  // namespace
}  // namespace wdp::metrics
