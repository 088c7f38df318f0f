#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fewshot/dataset.hpp"

namespace fewshot {

struct EpisodeSpec {
    int n_way = 5;
    int k_shot = 5;
    int n_query = 2;
    /// Classes with fewer eligible records than this are rejected when a
    /// pool view is built. 2 is the floor: support and query must each get
    /// at least one distinct base record.
    int min_class_size = 2;

    bool operator==(const EpisodeSpec&) const = default;
};

/// One support/query element: a base record plus, when the record is a
/// reused base filled in by augmentation, the seed for that augmentation.
struct EpisodeItem {
    std::string record_id;
    std::optional<uint64_t> aug_seed;

    bool operator==(const EpisodeItem&) const = default;
};

struct LabeledItem {
    EpisodeItem item;
    int label = 0; // local label, index into Episode::classes

    bool operator==(const LabeledItem&) const = default;
};

struct Episode {
    std::vector<std::string> classes; // global names, size n_way
    std::vector<LabeledItem> support; // n_way * k_shot, class-major
    std::vector<LabeledItem> query;   // n_way * n_query, class-major

    bool operator==(const Episode&) const = default;
};

/// Eligible record ids per class for one split, aligned with `classes`.
struct PoolView {
    std::vector<std::string> classes;
    std::vector<std::vector<std::string>> ids; // per class, deterministic order
};

/// Restricts the pool to records assigned to `split`, dropping classes that
/// fall under spec.min_class_size. Throws DataError if fewer than
/// spec.n_way classes survive.
PoolView make_pool_view(const ClassPool& pool, const SplitAssignment& assignment,
                        Split split, const EpisodeSpec& spec);

/// Draws one balanced episode. Classes are drawn uniformly without
/// replacement; within a class, k_shot + n_query distinct records are drawn
/// without replacement when the class is large enough. A class with fewer
/// records keeps support and query base-disjoint by giving support the
/// first min(k_shot, m-1) shuffled records and query the rest, reusing
/// bases round-robin with fresh augmentation seeds from the episode
/// generator. Throws DataError naming any class with fewer than 2 records.
Episode sample_episode(const PoolView& view, const EpisodeSpec& spec, uint64_t seed);

/// Reproducible, restartable episode sequence: episode i of a stream is
/// sample_episode(view, spec, derive_seed(master_seed, i)).
struct EpisodeStream {
    EpisodeSpec spec;
    uint64_t master_seed = 0;
    int count = 0;

    Episode episode(const PoolView& view, int index) const;
};

/// Number of episodes in which each pool class appears. Classes absent from
/// every episode report 0.
std::map<std::string, int> class_frequency_audit(const std::vector<Episode>& episodes,
                                                 const std::vector<std::string>& pool_classes);

/// One episode as a single JSON line (class names plus support/query
/// id + augmentation-seed pairs), the wire format of `sample-episodes`.
std::string episode_to_json_line(const Episode& ep);

/// Comparison baseline: draws episode classes *weighted by class frequency*
/// (successive draws without replacement, probability proportional to the
/// remaining classes' record counts). Demonstrates the majority-class bias
/// that uniform episode sampling removes.
std::vector<std::string> naive_frequency_weighted_classes(
    const std::vector<std::string>& classes, const std::vector<int>& counts,
    int n_way, uint64_t seed);

} // namespace fewshot
