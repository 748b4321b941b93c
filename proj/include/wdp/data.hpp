#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wdp/tensor.hpp"

namespace wdp::data {

// Registered classes, in label-index order.
inline const std::vector<std::string>& default_class_names() {
    static const std::vector<std::string> names{"none", "gun", "knife"};
    return names;
}

inline constexpr std::size_t kNoWeapon = 0;

struct Sample {
    std::string id;
    Tensor image;  // [1,H,W] or [3,H,W], values in [0,255]
    std::size_t label = 0;
    std::string source;
};

struct Dataset {
    std::vector<Sample> samples;
    std::vector<std::string> class_names = default_class_names();

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    std::size_t num_classes() const { return class_names.size(); }
    std::vector<std::size_t> class_counts() const;
    // Index of `name`; throws DataError naming it if unregistered.
    std::size_t class_index(const std::string& name) const;
    // Throws DataError on duplicate ids or out-of-range labels.
    void validate() const;
};

struct ManifestRow {
    std::string filename;
    std::string class_name;
};

// Parses a `filename,class` CSV (header required).
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);

// One sample per manifest row, in manifest order. Ids are the file names.
// `source` defaults to the directory name.
Dataset ingest_directory(const std::filesystem::path& dir, const std::filesystem::path& manifest,
                         const std::string& source = "");
Dataset ingest_directory(const std::filesystem::path& dir);

// Concatenates parts in order. With more than one part every id becomes
// "<source>/<id>"; a single part is returned unchanged.
Dataset merge_datasets(const std::vector<Dataset>& parts);

// Largest-remainder apportionment of n over the given proportions; ties go to the lower index.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& mix);

struct SynthOptions {
    std::size_t n = 2000;
    std::vector<double> mix{1.0 / 3, 1.0 / 3, 1.0 / 3};
    std::size_t canvas = 32;
    std::uint64_t seed = 0;
};

// Seeded surrogate dataset: uniform noise in [0,51] with a bright L-shape (gun),
// a thin elongated triangle (knife) or one to three filled discs (none).
Dataset synth_generate(const SynthOptions& options);

// Writes <id>.png for every sample plus manifest.csv, so the result round-trips through ingest_directory.
void export_dataset(const Dataset& dataset, const std::filesystem::path& out_dir);

}  // namespace wdp::data
