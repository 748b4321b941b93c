#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wdp/data.hpp"

namespace wdp::partition {

using IdSet = std::vector<std::string>;

// x disjoint class-covering blocks of the training set plus, for each learner,
// a replication set drawn from outside its own block.
struct PartitionPlan {
    std::vector<IdSet> blocks;
    std::vector<IdSet> replication;
    std::size_t x = 0;
    std::size_t per_class_min = 0;
    double replication_fraction = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(const PartitionPlan&, const PartitionPlan&) = default;
};

// floor(smallest class count / x)
std::size_t default_per_class_min(const data::Dataset& train, std::size_t x);

// Each class is shuffled (seeded) and dealt round-robin over the blocks, the
// dealing position carrying over from one class to the next. Replication set i
// has floor(rho * n) ids drawn without replacement from the ids outside block i.
PartitionPlan make_partition(const data::Dataset& train, std::size_t x, std::optional<std::size_t> per_class_min,
                             double rho, std::uint64_t seed);

// Samples of block `learner` (0-based) followed by its replication set.
data::Dataset learner_training_set(const PartitionPlan& plan, std::size_t learner, const data::Dataset& train);

struct PlanReport {
    bool disjoint = false;
    bool coverage = false;
    bool class_minimum = false;
    bool replication_disjoint = false;

    std::size_t duplicated_ids = 0;  // ids appearing in more than one block (or twice in one)
    std::size_t missing_ids = 0;     // training ids in no block
    std::size_t unknown_ids = 0;     // block or replication ids not in the training set
    std::size_t min_class_count = 0; // smallest per-class count over all blocks
    std::size_t replication_overlaps = 0;
    std::vector<std::size_t> block_sizes;

    bool ok() const { return disjoint && coverage && class_minimum && replication_disjoint; }
};

// Never throws; reports every check.
PlanReport validate_plan(const PartitionPlan& plan, const data::Dataset& train);

nlohmann::json to_json(const PartitionPlan& plan);
PartitionPlan plan_from_json(const nlohmann::json& doc);

// FNV-1a over the plan's canonical JSON text, as 16 hex digits.
std::string plan_digest(const PartitionPlan& plan);

}  // namespace wdp::partition
