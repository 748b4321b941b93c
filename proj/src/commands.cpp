#include "wdp/commands.hpp"

#include <fstream>
#include <functional>
#include <iostream>

#include "wdp/data.hpp"
#include "wdp/ensemble.hpp"
#include "wdp/error.hpp"
#include "wdp/metrics.hpp"
#include "wdp/partition.hpp"
#include "wdp/pipeline.hpp"
#include "wdp/png_io.hpp"
#include "wdp/preprocess.hpp"
#include "wdp/run_config.hpp"

namespace wdp::cli {

namespace {

int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kNumeric;
    } catch (const Error& e) {
        err << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw DataError("failed writing '" + path.string() + "'");
}

std::vector<ensemble::ArchitectureDescriptor> select_architectures(const RunConfig& cfg, std::size_t num_classes) {
    if (cfg.ensemble.architectures.empty())
        return ensemble::default_architectures(cfg.ensemble.n, num_classes, cfg.preprocess.target_size);
    const auto catalog = ensemble::architecture_catalog(num_classes);
    std::vector<ensemble::ArchitectureDescriptor> chosen;
    for (const auto& name : cfg.ensemble.architectures) {
        const auto it = std::find_if(catalog.begin(), catalog.end(), [&](const auto& d) { return d.name == name; });
        if (it == catalog.end()) throw ConfigError("ensemble.architectures: unknown architecture '" + name + "'");
        it->validate(num_classes, cfg.preprocess.target_size);
        chosen.push_back(*it);
    }
    return chosen;
}

// An optional config on the inference commands must parse and agree with the model.
void check_config(const std::optional<RunConfig>& cfg, const ensemble::Ensemble& ens) {
    if (cfg && cfg->preprocess.target_size != ens.input_size)
        throw ConfigError("preprocess.target_size " + std::to_string(cfg->preprocess.target_size) +
                          " does not match the model input size " + std::to_string(ens.input_size));
}

}  // namespace

int cmd_synth(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::ostream& out,
              std::ostream& err) {
    return guarded(err, [&] {
        const auto cfg = load_run_config(config);
        const auto ds = data::synth_generate(cfg.data.synth);
        data::export_dataset(ds, out_dir);
        const auto counts = ds.class_counts();
        nlohmann::json summary{{"samples", ds.size()}, {"out_dir", out_dir.string()}};
        for (std::size_t c = 0; c < counts.size(); ++c) summary["class_counts"][ds.class_names[c]] = counts[c];
        out << summary.dump() << '\n';
        return kOk;
    });
}

int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto cfg = load_run_config(options.config);
        data::Dataset dataset;
        if (options.data_dir) {
            dataset = data::ingest_directory(*options.data_dir);
        } else if (cfg.data.source == "synth") {
            dataset = data::synth_generate(cfg.data.synth);
        } else {
            throw ConfigError("data.source is 'directory' but no --data directory was given");
        }
        const auto architectures = select_architectures(cfg, dataset.num_classes());
        const auto split = preprocess::train_test_split(dataset, cfg.preprocess.split_ratio, cfg.preprocess.split_seed);
        cfg.train.validate(split.train.size());
        const auto plan = partition::make_partition(split.train, cfg.partition.x, cfg.partition.m, cfg.partition.rho,
                                                    cfg.partition.seed);
        const auto ens = ensemble::train_ensemble(
            plan, architectures, split.train, cfg.preprocess.target_size, cfg.train,
            cfg.parallel ? ensemble::Execution::Parallel : ensemble::Execution::Serial);
        ensemble::save_ensemble(ens, options.model_out);

        nlohmann::json log{{"config", cfg.to_json()},
                           {"samples", dataset.size()},
                           {"train_size", split.train.size()},
                           {"test_size", split.test.size()},
                           {"plan_digest", partition::plan_digest(plan)},
                           {"model_file", options.model_out.filename().string()}};
        for (std::size_t i = 0; i < ens.size(); ++i) {
            const auto& m = ens.models[i];
            log["models"].push_back({{"name", m.descriptor.name},
                                     {"seed", m.meta.config.seed},
                                     {"block_index", m.meta.block_index},
                                     {"training_samples", plan.blocks[i].size() + plan.replication[i].size()},
                                     {"parameters", m.network.parameter_count()},
                                     {"final_loss", m.meta.final_loss}});
        }
        const auto log_path = options.log_out.value_or(std::filesystem::path(options.model_out.string() + ".log.json"));
        write_text(log_path, log.dump(2) + "\n");
        if (options.plan_out) write_text(*options.plan_out, partition::to_json(plan).dump() + "\n");
        out << log.dump() << '\n';
        return kOk;
    });
}

int cmd_evaluate(const EvaluateOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (options.split != "all" && options.split != "train" && options.split != "test")
            throw ConfigError("--split must be all, train or test");
        if (options.split != "all" && !options.config)
            throw ConfigError("--split " + options.split + " needs --config to reproduce the split");
        std::optional<RunConfig> cfg;
        if (options.config) cfg = load_run_config(*options.config);
        const auto ens = ensemble::load_ensemble(options.model);
        auto dataset = data::ingest_directory(options.data_dir);
        if (options.split != "all") {
            auto split = preprocess::train_test_split(dataset, cfg->preprocess.split_ratio, cfg->preprocess.split_seed);
            dataset = options.split == "train" ? std::move(split.train) : std::move(split.test);
        }
        const auto reports = metrics::evaluate_members(ens, dataset);
        if (options.table) {
            out << metrics::format_table(reports);
        } else {
            nlohmann::json doc{{"split", options.split}, {"samples", dataset.size()}};
            for (std::size_t i = 0; i + 1 < reports.size(); ++i) doc["base_models"].push_back(metrics::to_json(reports[i]));
            doc["ensemble"] = metrics::to_json(reports.back());
            out << doc.dump() << '\n';
        }
        return kOk;
    });
}

int cmd_predict(const std::filesystem::path& model, const std::filesystem::path& image, std::ostream& out,
                std::ostream& err, const std::optional<std::filesystem::path>& config) {
    return guarded(err, [&] {
        std::optional<RunConfig> cfg;
        if (config) cfg = load_run_config(*config);
        const auto ens = ensemble::load_ensemble(model);
        check_config(cfg, ens);
        const auto frame = read_png(image);
        const auto d = ensemble::detect(ens, frame);
        const nlohmann::json doc{{"weapon_present", d.weapon_present},
                                 {"predicted_class", ens.class_names.at(d.predicted_class)},
                                 {"class_index", d.predicted_class},
                                 {"confidence", d.confidence},
                                 {"probabilities", std::vector<double>(d.probabilities.data().begin(),
                                                                       d.probabilities.data().end())}};
        out << doc.dump() << '\n';
        return kOk;
    });
}

int cmd_profile(const ProfileOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (options.repetitions < 1) throw ConfigError("--reps must be >= 1");
        std::optional<RunConfig> cfg;
        if (options.config) cfg = load_run_config(*options.config);
        const auto ens = ensemble::load_ensemble(options.model);
        check_config(cfg, ens);
        const auto dataset = data::ingest_directory(options.data_dir);
        std::vector<Tensor> frames;
        for (const auto& s : dataset.samples) {
            if (options.max_frames && frames.size() == options.max_frames) break;
            frames.push_back(s.image);
        }
        const auto report = pipeline::profile(ens, frames, options.repetitions);
        if (options.json)
            out << pipeline::to_json(report).dump() << '\n';
        else
            out << pipeline::to_csv(report);
        return kOk;
    });
}

}  // namespace wdp::cli
