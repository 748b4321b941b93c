#include "wdp/partition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "wdp/error.hpp"
#include "wdp/rng.hpp"

namespace wdp::partition {

std::size_t default_per_class_min(const data::Dataset& train, std::size_t x) {
    if (x == 0) throw ConfigError("partition.x must be >= 1");
    const auto counts = train.class_counts();
    return *std::min_element(counts.begin(), counts.end()) / x;
}

PartitionPlan make_partition(const data::Dataset& train, std::size_t x, std::optional<std::size_t> per_class_min,
                             double rho, std::uint64_t seed) {
    if (x < 1) throw ConfigError("partition.x must be >= 1");
    if (x > train.size())
        throw DataError("partition.x = " + std::to_string(x) + " exceeds the training-set size " +
                        std::to_string(train.size()));
    if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("partition.rho must lie in [0,1)");
    train.validate();

    PartitionPlan plan;
    plan.x = x;
    plan.per_class_min = per_class_min.value_or(default_per_class_min(train, x));
    plan.replication_fraction = rho;
    plan.seed = seed;

    const auto counts = train.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] < plan.per_class_min * x)
            throw DataError("class '" + train.class_names[c] + "' has " + std::to_string(counts[c]) +
                            " samples, fewer than per_class_min * x = " + std::to_string(plan.per_class_min * x));

    std::vector<std::vector<std::size_t>> by_class(counts.size());
    for (std::size_t i = 0; i < train.size(); ++i) by_class[train.samples[i].label].push_back(i);

    std::vector<std::vector<std::size_t>> blocks(x);
    std::size_t cursor = 0;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        SplitMix64 rng(derive_seed(seed, c + 1));
        rng.shuffle(std::span<std::size_t>(by_class[c]));
        for (auto idx : by_class[c]) {
            blocks[cursor].push_back(idx);
            cursor = (cursor + 1) % x;
        }
    }

    const auto rep_size = static_cast<std::size_t>(std::floor(rho * static_cast<double>(train.size()) + 1e-9));
    for (std::size_t b = 0; b < x; ++b) {
        IdSet ids;
        ids.reserve(blocks[b].size());
        for (auto idx : blocks[b]) ids.push_back(train.samples[idx].id);
        plan.blocks.push_back(std::move(ids));

        std::vector<bool> in_block(train.size(), false);
        for (auto idx : blocks[b]) in_block[idx] = true;
        std::vector<std::size_t> complement;
        for (std::size_t i = 0; i < train.size(); ++i)
            if (!in_block[i]) complement.push_back(i);
        if (rep_size > complement.size())
            throw DataError("replication set of " + std::to_string(rep_size) + " exceeds the " +
                            std::to_string(complement.size()) + " samples outside block " + std::to_string(b + 1));
        SplitMix64 rng(seed + b + 1);
        IdSet rep;
        rep.reserve(rep_size);
        for (std::size_t k = 0; k < rep_size; ++k) {
            const auto j = k + static_cast<std::size_t>(rng.below(complement.size() - k));
            std::swap(complement[k], complement[j]);
            rep.push_back(train.samples[complement[k]].id);
        }
        plan.replication.push_back(std::move(rep));
    }
    return plan;
}

data::Dataset learner_training_set(const PartitionPlan& plan, std::size_t learner, const data::Dataset& train) {
    if (learner >= plan.blocks.size() || learner >= plan.replication.size())
        throw ConfigError("learner index " + std::to_string(learner) + " out of range for a plan of " +
                          std::to_string(plan.blocks.size()) + " blocks");
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < train.size(); ++i) index.emplace(train.samples[i].id, i);

    data::Dataset out;
    out.class_names = train.class_names;
    std::unordered_set<std::string> taken;
    for (const auto* ids : {&plan.blocks[learner], &plan.replication[learner]})
        for (const auto& id : *ids) {
            const auto it = index.find(id);
            if (it == index.end()) throw DataError("plan references unknown sample id '" + id + "'");
            if (taken.insert(id).second) out.samples.push_back(train.samples[it->second]);
        }
    return out;
}

PlanReport validate_plan(const PartitionPlan& plan, const data::Dataset& train) {
    PlanReport r;
    std::unordered_map<std::string, std::size_t> label_of;
    for (const auto& s : train.samples) label_of.emplace(s.id, s.label);

    std::unordered_map<std::string, std::size_t> seen;  // id -> number of block occurrences
    std::size_t min_count = std::numeric_limits<std::size_t>::max();
    for (const auto& block : plan.blocks) {
        r.block_sizes.push_back(block.size());
        std::vector<std::size_t> per_class(train.num_classes(), 0);
        for (const auto& id : block) {
            if (++seen[id] == 2) ++r.duplicated_ids;
            const auto it = label_of.find(id);
            if (it == label_of.end()) {
                ++r.unknown_ids;
                continue;
            }
            if (it->second < per_class.size()) ++per_class[it->second];
        }
        for (auto c : per_class) min_count = std::min(min_count, c);
    }
    for (const auto& s : train.samples)
        if (!seen.contains(s.id)) ++r.missing_ids;
    r.min_class_count = plan.blocks.empty() ? 0 : min_count;

    for (std::size_t b = 0; b < plan.replication.size(); ++b) {
        std::unordered_set<std::string> block_ids;
        if (b < plan.blocks.size()) block_ids.insert(plan.blocks[b].begin(), plan.blocks[b].end());
        std::unordered_set<std::string> rep_seen;
        for (const auto& id : plan.replication[b]) {
            if (block_ids.contains(id) || !rep_seen.insert(id).second) ++r.replication_overlaps;
            if (!label_of.contains(id)) ++r.unknown_ids;
        }
    }

    r.disjoint = r.duplicated_ids == 0;
    r.coverage = r.missing_ids == 0 && r.unknown_ids == 0 && !plan.blocks.empty();
    r.class_minimum = !plan.blocks.empty() && r.min_class_count >= plan.per_class_min;
    r.replication_disjoint = r.replication_overlaps == 0 && plan.replication.size() == plan.blocks.size();
    return r;
}

nlohmann::json to_json(const PartitionPlan& plan) {
    return {{"x", plan.x},
            {"per_class_min", plan.per_class_min},
            {"replication_fraction", plan.replication_fraction},
            {"seed", plan.seed},
            {"blocks", plan.blocks},
            {"replication", plan.replication}};
}

PartitionPlan plan_from_json(const nlohmann::json& doc) {
    try {
        PartitionPlan plan;
        plan.x = doc.at("x").get<std::size_t>();
        plan.per_class_min = doc.at("per_class_min").get<std::size_t>();
        plan.replication_fraction = doc.at("replication_fraction").get<double>();
        plan.seed = doc.at("seed").get<std::uint64_t>();
        plan.blocks = doc.at("blocks").get<std::vector<IdSet>>();
        plan.replication = doc.at("replication").get<std::vector<IdSet>>();
        if (plan.blocks.size() != plan.x || plan.replication.size() != plan.x)
            throw DataError("plan lists do not match x");
        return plan;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed partition plan: ") + e.what());
    }
}

std::string plan_digest(const PartitionPlan& plan) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : to_json(plan).dump()) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace wdp::partition
