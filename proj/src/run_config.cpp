#include "wdp/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <type_traits>

#include "wdp/error.hpp"

namespace wdp {

namespace {

void reject_unknown(const nlohmann::json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items())
        if (!keys.contains(key)) throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
}

template <typename T>
void read(const nlohmann::json& obj, const char* key, const std::string& where, T& into) {
    if (!obj.contains(key)) return;
    if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>)
        if (!obj.at(key).is_number_unsigned())
            throw ConfigError("field '" + where + "." + key + "' must be a non-negative integer");
    try {
        into = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("field '" + where + "." + key + "' has the wrong type");
    }
}

}  // namespace

void RunConfig::validate() const {
    if (data.source != "synth" && data.source != "directory")
        throw ConfigError("data.source must be 'synth' or 'directory'");
    if (data.synth.n < 1) throw ConfigError("data.synth.n must be >= 1");
    if (data.synth.canvas < 16) throw ConfigError("data.synth.canvas must be >= 16");
    if (data.synth.mix.size() != data::default_class_names().size())
        throw ConfigError("data.synth.mix needs one proportion per class");
    double total = 0.0;
    for (double m : data.synth.mix) {
        if (!(m >= 0.0)) throw ConfigError("data.synth.mix entries must be >= 0");
        total += m;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("data.synth.mix must sum to 1 (sums to " + std::to_string(total) + ")");
    preprocess.validate();
    if (partition.x < 1) throw ConfigError("partition.x must be >= 1");
    if (!(partition.rho >= 0.0 && partition.rho < 1.0)) throw ConfigError("partition.rho must lie in [0,1)");
    if (train.epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (!(train.learning_rate > 0.0) || !std::isfinite(train.learning_rate))
        throw ConfigError("train.learning_rate must be > 0");
    if (ensemble.n < 1) throw ConfigError("ensemble.n must be >= 1");
    if (!ensemble.architectures.empty() && ensemble.architectures.size() != ensemble.n)
        throw ConfigError("ensemble.architectures must list exactly ensemble.n names");
    if (partition.x != ensemble.n)
        throw ConfigError("partition.x (" + std::to_string(partition.x) + ") must equal ensemble.n (" +
                          std::to_string(ensemble.n) + "): one block per base model");
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json doc;
    doc["data"] = {{"source", data.source},
                   {"synth", {{"n", data.synth.n}, {"mix", data.synth.mix}, {"canvas", data.synth.canvas},
                              {"seed", data.synth.seed}}}};
    doc["preprocess"] = {{"target_size", preprocess.target_size},
                         {"split_ratio", preprocess.split_ratio},
                         {"split_seed", preprocess.split_seed}};
    doc["partition"] = {{"x", partition.x}, {"rho", partition.rho}, {"seed", partition.seed}};
    doc["partition"]["m"] = partition.m ? nlohmann::json(*partition.m) : nlohmann::json(nullptr);
    doc["train"] = {{"epochs", train.epochs},
                    {"batch_size", train.batch_size},
                    {"learning_rate", train.learning_rate},
                    {"seed", train.seed},
                    {"parallel", parallel}};
    doc["ensemble"] = {{"n", ensemble.n}, {"architectures", ensemble.architectures}};
    return doc;
}

RunConfig parse_run_config(const nlohmann::json& doc) {
    RunConfig cfg;
    reject_unknown(doc, "", {"data", "preprocess", "partition", "train", "ensemble"});
    if (doc.contains("data")) {
        const auto& d = doc["data"];
        reject_unknown(d, "data", {"source", "synth"});
        read(d, "source", "data", cfg.data.source);
        if (d.contains("synth")) {
            const auto& s = d["synth"];
            reject_unknown(s, "data.synth", {"n", "mix", "canvas", "seed"});
            read(s, "n", "data.synth", cfg.data.synth.n);
            read(s, "mix", "data.synth", cfg.data.synth.mix);
            read(s, "canvas", "data.synth", cfg.data.synth.canvas);
            read(s, "seed", "data.synth", cfg.data.synth.seed);
        }
    }
    if (doc.contains("preprocess")) {
        const auto& p = doc["preprocess"];
        reject_unknown(p, "preprocess", {"target_size", "split_ratio", "split_seed"});
        read(p, "target_size", "preprocess", cfg.preprocess.target_size);
        read(p, "split_ratio", "preprocess", cfg.preprocess.split_ratio);
        read(p, "split_seed", "preprocess", cfg.preprocess.split_seed);
    }
    if (doc.contains("partition")) {
        const auto& p = doc["partition"];
        reject_unknown(p, "partition", {"x", "m", "rho", "seed"});
        read(p, "x", "partition", cfg.partition.x);
        if (p.contains("m") && !p["m"].is_null()) {
            std::size_t m = 0;
            read(p, "m", "partition", m);
            cfg.partition.m = m;
        }
        read(p, "rho", "partition", cfg.partition.rho);
        read(p, "seed", "partition", cfg.partition.seed);
    }
    if (doc.contains("train")) {
        const auto& t = doc["train"];
        reject_unknown(t, "train", {"epochs", "batch_size", "learning_rate", "seed", "parallel"});
        read(t, "epochs", "train", cfg.train.epochs);
        read(t, "batch_size", "train", cfg.train.batch_size);
        read(t, "learning_rate", "train", cfg.train.learning_rate);
        read(t, "seed", "train", cfg.train.seed);
        read(t, "parallel", "train", cfg.parallel);
    }
    if (doc.contains("ensemble")) {
        const auto& e = doc["ensemble"];
        reject_unknown(e, "ensemble", {"n", "architectures"});
        read(e, "n", "ensemble", cfg.ensemble.n);
        read(e, "architectures", "ensemble", cfg.ensemble.architectures);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_run_config(doc);
}

}  // namespace wdp
