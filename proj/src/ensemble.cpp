#include "wdp/ensemble.hpp"

#include <bit>
#include <cstring>
#include <exception>
#include <fstream>
#include <iterator>
#include <thread>
#include <unordered_map>

#include "wdp/error.hpp"
#include "wdp/preprocess.hpp"

namespace wdp::ensemble {

using nn::LayerKind;
using nn::LayerSpec;

void ArchitectureDescriptor::validate(std::size_t num_classes, std::size_t input_size) const {
    if (name.empty()) throw ConfigError("architecture needs a name");
    if (hidden_layer_count() > kMaxHiddenLayers)
        throw ConfigError("architecture '" + name + "' has " + std::to_string(hidden_layer_count()) +
                          " hidden layers; the cap is " + std::to_string(kMaxHiddenLayers));
    if (layers.size() < 2 || layers[layers.size() - 2].kind != LayerKind::Dense ||
        layers[layers.size() - 2].units != num_classes || layers.back().kind != LayerKind::SoftmaxOutput)
        throw ConfigError("architecture '" + name + "' must end in Dense(" + std::to_string(num_classes) +
                          ") + SoftmaxOutput");
    try {
        nn::Network probe(layers, {1, input_size, input_size});
    } catch (const Error& e) {
        throw ConfigError("architecture '" + name + "' is invalid for input " + std::to_string(input_size) + ": " +
                          e.what());
    }
}

std::vector<ArchitectureDescriptor> architecture_catalog(std::size_t num_classes) {
    const auto conv = LayerSpec::conv;
    const auto pool = LayerSpec::maxpool;
    const auto relu = LayerSpec::relu();
    const auto flat = LayerSpec::flatten();
    const auto out = LayerSpec::dense(num_classes);
    const auto dense = LayerSpec::dense;
    const auto soft = LayerSpec::softmax_output();
    return {
        {"BM1", {conv(4, 3, 1, 1), relu, pool(2, 2), conv(16, 5, 1, 2), relu, pool(16, 16), out, soft}},
        {"BM2", {conv(8, 3, 1, 1), relu, pool(2, 2), conv(16, 5, 1, 2), relu, pool(16, 16), out, soft}},
        {"BM3", {conv(4, 5, 1, 2), relu, pool(2, 2), conv(16, 5, 1, 2), relu, pool(16, 16), out, soft}},
        {"BM4", {conv(8, 5, 1, 2), relu, pool(2, 2), conv(16, 5, 1, 2), relu, pool(16, 16), out, soft}},
        {"BM5", {conv(16, 3, 1, 1), relu, pool(2, 2), conv(16, 5, 1, 2), relu, pool(16, 16), out, soft}},
        {"BM6", {conv(16, 5, 1, 2), relu, pool(2, 2), conv(16, 3, 1, 1), relu, pool(4, 4), out, soft}},
        {"BM7", {conv(4, 5, 1, 2), relu, pool(4, 4), flat, dense(32), relu, out, soft}},
        {"BM8", {conv(8, 5, 1, 2), relu, pool(4, 4), flat, dense(64), relu, out, soft}},
    };
}

std::vector<ArchitectureDescriptor> default_architectures(std::size_t n, std::size_t num_classes,
                                                          std::size_t input_size) {
    auto catalog = architecture_catalog(num_classes);
    if (n < 1 || n > catalog.size())
        throw ConfigError("ensemble size " + std::to_string(n) + " outside the catalog range 1.." +
                          std::to_string(catalog.size()));
    catalog.resize(n);
    for (const auto& d : catalog) d.validate(num_classes, input_size);
    return catalog;
}

void Ensemble::validate() const {
    if (models.empty()) throw ConfigError("an ensemble needs at least one model");
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto& m = models[i];
        m.descriptor.validate(class_names.size(), input_size);
        if (m.network.input_shape() != Shape{1, input_size, input_size})
            throw ConfigError("model " + std::to_string(i) + " input shape differs from the ensemble's");
        if (m.network.layers() != m.descriptor.layers)
            throw ConfigError("model " + std::to_string(i) + " network does not match its descriptor");
        for (std::size_t j = 0; j < i; ++j) {
            if (models[j].descriptor.name == m.descriptor.name)
                throw ConfigError("duplicate architecture name '" + m.descriptor.name + "'");
            if (models[j].descriptor.layers == m.descriptor.layers)
                throw ConfigError("models " + std::to_string(j) + " and " + std::to_string(i) +
                                  " share an identical layer list");
        }
    }
}

BaseModel init_base_model(const ArchitectureDescriptor& descriptor, std::size_t num_classes, std::size_t input_size,
                          std::uint64_t seed) {
    descriptor.validate(num_classes, input_size);
    BaseModel m{descriptor, nn::Network(descriptor.layers, {1, input_size, input_size}), {}};
    m.network.initialize(seed);
    m.meta.config.seed = seed;
    return m;
}

BaseModel train_base_model(const ArchitectureDescriptor& descriptor, std::span<const nn::Example> examples,
                           const nn::TrainConfig& config, std::size_t num_classes, std::size_t input_size) {
    BaseModel m = init_base_model(descriptor, num_classes, input_size, config.seed);
    const auto result = nn::train(m.network, examples, config);
    m.meta.config = config;
    m.meta.final_loss = result.final_loss();
    return m;
}

Ensemble train_ensemble(const partition::PartitionPlan& plan, const std::vector<ArchitectureDescriptor>& descriptors,
                        const data::Dataset& train, std::size_t input_size, const nn::TrainConfig& config,
                        Execution execution) {
    if (descriptors.size() != plan.blocks.size())
        throw ConfigError("need one architecture per partition block (" + std::to_string(plan.blocks.size()) +
                          "), got " + std::to_string(descriptors.size()));
    const auto all_examples = preprocess::to_examples(train, input_size);
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < train.size(); ++i) index.emplace(train.samples[i].id, i);

    const std::size_t n = descriptors.size();
    std::vector<std::vector<nn::Example>> learner_sets(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto subset = partition::learner_training_set(plan, i, train);
        learner_sets[i].reserve(subset.size());
        for (const auto& s : subset.samples) learner_sets[i].push_back(all_examples[index.at(s.id)]);
        nn::TrainConfig cfg = config;
        cfg.seed = config.seed + i;
        cfg.validate(learner_sets[i].size());
    }

    std::vector<BaseModel> models(n);
    std::vector<std::exception_ptr> failures(n);
    const auto job = [&](std::size_t i) {
        try {
            nn::TrainConfig cfg = config;
            cfg.seed = config.seed + i;
            models[i] = train_base_model(descriptors[i], learner_sets[i], cfg, train.num_classes(), input_size);
            models[i].meta.block_index = i;
        } catch (...) {
            failures[i] = std::current_exception();
        }
    };
    if (execution == Execution::Parallel) {
        std::vector<std::jthread> workers;
        for (std::size_t i = 0; i < n; ++i) workers.emplace_back(job, i);
    } else {
        for (std::size_t i = 0; i < n; ++i) job(i);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!failures[i]) continue;
        try {
            std::rethrow_exception(failures[i]);
        } catch (const NumericError& e) {
            throw NumericError("model " + std::to_string(i + 1) + ": " + e.what());
        } catch (const Error& e) {
            throw Error("model " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    Ensemble ens{std::move(models), train.class_names, input_size};
    ens.validate();
    return ens;
}

Tensor aggregate_mean(std::span<const Tensor> member_outputs) {
    if (member_outputs.empty()) throw ConfigError("cannot aggregate zero model outputs");
    Tensor mean(member_outputs.front().shape());
    for (const auto& out : member_outputs) {
        if (out.shape() != mean.shape()) throw ShapeError("model outputs differ in shape");
        for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += out[c];
    }
    const double n = static_cast<double>(member_outputs.size());
    for (auto& v : mean.data()) v /= n;
    return mean;
}

std::vector<Tensor> member_probabilities(const Ensemble& ensemble, const Tensor& model_input) {
    const Shape expected{1, ensemble.input_size, ensemble.input_size};
    if (model_input.shape() != expected)
        throw ShapeError("ensemble expects input " + shape_string(expected) + ", got " +
                         shape_string(model_input.shape()));
    std::vector<Tensor> outs;
    outs.reserve(ensemble.size());
    for (const auto& m : ensemble.models) outs.push_back(m.predict(model_input));
    return outs;
}

Tensor predict_proba(const Ensemble& ensemble, const Tensor& model_input) {
    return aggregate_mean(member_probabilities(ensemble, model_input));
}

Detection decide(const Tensor& mean_probabilities) {
    if (mean_probabilities.empty()) throw ShapeError("empty probability vector");
    Detection d;
    for (std::size_t c = 1; c < mean_probabilities.size(); ++c)
        if (mean_probabilities[c] > mean_probabilities[d.predicted_class]) d.predicted_class = c;
    d.confidence = mean_probabilities[d.predicted_class];
    d.weapon_present = d.predicted_class != data::kNoWeapon;
    d.probabilities = mean_probabilities;
    return d;
}

Detection detect(const Ensemble& ensemble, const Tensor& raw_frame) {
    const auto frame = preprocess::preprocess_frame(raw_frame, ensemble.input_size);
    return decide(predict_proba(ensemble, frame.input));
}

// ---------------------------------------------------------------------------
// Persistence

nlohmann::json descriptor_to_json(const ArchitectureDescriptor& descriptor) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : descriptor.layers) {
        nlohmann::json j{{"kind", nn::to_string(l.kind)}};
        switch (l.kind) {
            case LayerKind::Conv:
                j["out_channels"] = l.out_channels;
                j["kernel_size"] = l.kernel_size;
                j["stride"] = l.stride;
                j["padding"] = l.padding;
                break;
            case LayerKind::MaxPool:
                j["window"] = l.window;
                j["stride"] = l.stride;
                break;
            case LayerKind::Dense: j["units"] = l.units; break;
            default: break;
        }
        layers.push_back(std::move(j));
    }
    return {{"name", descriptor.name}, {"layers", std::move(layers)}};
}

ArchitectureDescriptor descriptor_from_json(const nlohmann::json& doc) {
    ArchitectureDescriptor d;
    d.name = doc.at("name").get<std::string>();
    for (const auto& j : doc.at("layers")) {
        LayerSpec l;
        l.kind = nn::layer_kind_from_string(j.at("kind").get<std::string>());
        switch (l.kind) {
            case LayerKind::Conv:
                l.out_channels = j.at("out_channels").get<std::size_t>();
                l.kernel_size = j.at("kernel_size").get<std::size_t>();
                l.stride = j.at("stride").get<std::size_t>();
                l.padding = j.at("padding").get<std::size_t>();
                break;
            case LayerKind::MaxPool:
                l.window = j.at("window").get<std::size_t>();
                l.stride = j.at("stride").get<std::size_t>();
                break;
            case LayerKind::Dense: l.units = j.at("units").get<std::size_t>(); break;
            default: break;
        }
        d.layers.push_back(l);
    }
    return d;
}

namespace {

template <typename T>
void put_le(std::string& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::string_view bytes, std::size_t offset) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<T>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
    return v;
}

}  // namespace

std::string serialize_ensemble(const Ensemble& ensemble) {
    ensemble.validate();
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : ensemble.models) {
        nlohmann::json counts = nlohmann::json::array();
        for (const auto& p : m.network.params()) counts.push_back(p.size());
        auto j = descriptor_to_json(m.descriptor);
        j["seed"] = m.meta.config.seed;
        j["block_index"] = m.meta.block_index;
        j["epochs"] = m.meta.config.epochs;
        j["batch_size"] = m.meta.config.batch_size;
        j["learning_rate"] = m.meta.config.learning_rate;
        j["final_loss"] = m.meta.final_loss;
        j["parameter_counts"] = std::move(counts);
        models.push_back(std::move(j));
    }
    const nlohmann::json header{{"class_names", ensemble.class_names},
                                {"input_size", ensemble.input_size},
                                {"n", ensemble.size()},
                                {"models", std::move(models)}};
    const std::string text = header.dump();

    std::string out = "WDPM";
    put_le<std::uint32_t>(out, kFormatVersion);
    put_le<std::uint64_t>(out, text.size());
    out += text;
    for (const auto& m : ensemble.models)
        for (const auto& p : m.network.params())
            for (const auto* t : {&p.weight, &p.bias})
                for (double v : t->data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

Ensemble deserialize_ensemble(std::string_view bytes) {
    if (bytes.size() < 4 || bytes.substr(0, 4) != "WDPM") throw FormatError("bad magic");
    if (bytes.size() < kPreambleBytes) throw FormatError("truncated preamble");
    const auto version = get_le<std::uint32_t>(bytes, 4);
    if (version != kFormatVersion) throw FormatError("unsupported version " + std::to_string(version));
    const auto header_len = get_le<std::uint64_t>(bytes, 8);
    if (header_len > bytes.size() - kPreambleBytes) throw FormatError("truncated header");

    Ensemble ens;
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(kPreambleBytes, header_len));
        ens.class_names = header.at("class_names").get<std::vector<std::string>>();
        ens.input_size = header.at("input_size").get<std::size_t>();
        const auto n = header.at("n").get<std::size_t>();
        const auto& models = header.at("models");
        if (models.size() != n) throw FormatError("header lists " + std::to_string(models.size()) + " models, n = " +
                                                  std::to_string(n));
        for (const auto& j : models) {
            BaseModel m;
            m.descriptor = descriptor_from_json(j);
            m.network = nn::Network(m.descriptor.layers, {1, ens.input_size, ens.input_size});
            m.meta.config.seed = j.at("seed").get<std::uint64_t>();
            m.meta.config.epochs = j.at("epochs").get<std::size_t>();
            m.meta.config.batch_size = j.at("batch_size").get<std::size_t>();
            m.meta.config.learning_rate = j.at("learning_rate").get<double>();
            m.meta.block_index = j.at("block_index").get<std::size_t>();
            m.meta.final_loss = j.at("final_loss").get<double>();
            const auto counts = j.at("parameter_counts").get<std::vector<std::size_t>>();
            const auto& params = m.network.params();
            if (counts.size() != params.size()) throw FormatError("parameter_counts does not match the layer list");
            for (std::size_t l = 0; l < counts.size(); ++l)
                if (counts[l] != params[l].size())
                    throw FormatError("parameter count mismatch in model '" + m.descriptor.name + "' layer " +
                                      std::to_string(l));
            ens.models.push_back(std::move(m));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed header: ") + e.what());
    } catch (const FormatError&) {
        throw;
    } catch (const Error& e) {
        throw FormatError(std::string("invalid header: ") + e.what());
    }

    std::size_t total = 0;
    for (const auto& m : ens.models) total += m.network.parameter_count();
    const std::size_t blob_offset = kPreambleBytes + header_len;
    const std::size_t expected = blob_offset + 8 * total;
    if (bytes.size() < expected) throw FormatError("truncated parameter blob");
    if (bytes.size() > expected) throw FormatError("trailing bytes after parameter blob");

    std::size_t offset = blob_offset;
    for (auto& m : ens.models)
        for (auto& p : m.network.params())
            for (auto* t : {&p.weight, &p.bias})
                for (double& v : t->data()) {
                    v = std::bit_cast<double>(get_le<std::uint64_t>(bytes, offset));
                    offset += 8;
                }
    try {
        ens.validate();
    } catch (const Error& e) {
        throw FormatError(std::string("invalid ensemble: ") + e.what());
    }
    return ens;
}

void save_ensemble(const Ensemble& ensemble, const std::filesystem::path& path) {
    const auto bytes = serialize_ensemble(ensemble);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

Ensemble load_ensemble(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file '" + path.string() + "'");
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return deserialize_ensemble(bytes);
    } catch (const FormatError& e) {
        throw FormatError("cannot load '" + path.string() + "': " + e.what());
    }
}

}  // namespace wdp::ensemble
