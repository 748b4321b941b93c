#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wdp/data.hpp"
#include "wdp/network.hpp"
#include "wdp/partition.hpp"

namespace wdp::ensemble {

inline constexpr std::size_t kMaxHiddenLayers = 7;

struct ArchitectureDescriptor {
    std::string name;
    std::vector<nn::LayerSpec> layers;  // ends in Dense(num_classes), SoftmaxOutput

    // Every layer except the softmax output.
    std::size_t hidden_layer_count() const { return layers.empty() ? 0 : layers.size() - 1; }
    // Throws ConfigError if the cap, the output layer or the shape chain is violated.
    void validate(std::size_t num_classes, std::size_t input_size) const;

    friend bool operator==(const ArchitectureDescriptor&, const ArchitectureDescriptor&) = default;
};

// The fixed eight-entry catalog, each with at most seven hidden layers.
std::vector<ArchitectureDescriptor> architecture_catalog(std::size_t num_classes);
std::vector<ArchitectureDescriptor> default_architectures(std::size_t n, std::size_t num_classes,
                                                          std::size_t input_size);

struct TrainMeta {
    nn::TrainConfig config;
    std::size_t block_index = 0;
    double final_loss = 0.0;

    friend bool operator==(const TrainMeta&, const TrainMeta&) = default;
};

struct BaseModel {
    ArchitectureDescriptor descriptor;
    nn::Network network;
    TrainMeta meta;

    Tensor predict(const Tensor& input) const { return network.predict(input); }
    friend bool operator==(const BaseModel&, const BaseModel&) = default;
};

struct Ensemble {
    std::vector<BaseModel> models;
    std::vector<std::string> class_names = data::default_class_names();
    std::size_t input_size = 32;

    std::size_t size() const { return models.size(); }
    // n >= 1, shared input size and classes, pairwise distinct names and layer lists.
    void validate() const;
    friend bool operator==(const Ensemble&, const Ensemble&) = default;
};

// Untrained member with seeded Glorot initialization.
BaseModel init_base_model(const ArchitectureDescriptor& descriptor, std::size_t num_classes,
                          std::size_t input_size, std::uint64_t seed);

BaseModel train_base_model(const ArchitectureDescriptor& descriptor, std::span<const nn::Example> examples,
                           const nn::TrainConfig& config, std::size_t num_classes, std::size_t input_size);

enum class Execution { Serial, Parallel };

// Model i is trained on learner_training_set(plan, i) with seed config.seed + i.
// Jobs share nothing, so the result is the same for either execution mode.
Ensemble train_ensemble(const partition::PartitionPlan& plan, const std::vector<ArchitectureDescriptor>& descriptors,
                        const data::Dataset& train, std::size_t input_size, const nn::TrainConfig& config,
                        Execution execution = Execution::Parallel);

// (1/n) * sum of the vectors, accumulated in the given order.
Tensor aggregate_mean(std::span<const Tensor> member_outputs);

std::vector<Tensor> member_probabilities(const Ensemble& ensemble, const Tensor& model_input);
Tensor predict_proba(const Ensemble& ensemble, const Tensor& model_input);

struct Detection {
    bool weapon_present = false;
    std::size_t predicted_class = 0;
    double confidence = 0.0;
    Tensor probabilities;

    friend bool operator==(const Detection&, const Detection&) = default;
};

// argmax of the mean vector, ties to the lowest index; class 0 is "no weapon".
Detection decide(const Tensor& mean_probabilities);
// preprocess_frame, then predict_proba, then decide.
Detection detect(const Ensemble& ensemble, const Tensor& raw_frame);

// WDPM container: "WDPM" | u32 LE version | u64 LE header length | JSON header | f64 LE parameters.
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kPreambleBytes = 16;

nlohmann::json descriptor_to_json(const ArchitectureDescriptor& descriptor);
ArchitectureDescriptor descriptor_from_json(const nlohmann::json& doc);

std::string serialize_ensemble(const Ensemble& ensemble);
Ensemble deserialize_ensemble(std::string_view bytes);
void save_ensemble(const Ensemble& ensemble, const std::filesystem::path& path);
Ensemble load_ensemble(const std::filesystem::path& path);

}  // namespace wdp::ensemble
