#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace fewshot {

struct ImageRecord {
    std::string id;
    std::string path; // relative to the manifest's directory
    std::set<std::string> labels;

    bool operator==(const ImageRecord&) const = default;
};

struct DatasetManifest {
    std::vector<ImageRecord> records; // manifest row order
    std::map<std::string, int> class_counts;
    std::filesystem::path base_dir; // directory the manifest was loaded from

    const ImageRecord* find(const std::string& id) const;
    std::filesystem::path resolve_path(const ImageRecord& rec) const {
        return base_dir / rec.path;
    }
};

/// The classes selected for episodic use and, per class, the ids of records
/// carrying exactly one positive label among those classes.
struct ClassPool {
    std::vector<std::string> classes; // descending count, name tie-break
    std::map<std::string, std::vector<std::string>> eligible;
    int excluded_multi_positive = 0; // records dropped for having >= 2 selected labels
};

enum class Split { train, val, test };

const char* to_string(Split s);
Split split_from_string(const std::string& s);

struct SplitAssignment {
    std::map<std::string, Split> split; // record id -> split
    uint64_t seed = 0;
    std::array<double, 3> ratios{0.7, 0.1, 0.2};
};

/// Parses a CSV manifest with header `ID,path,<class>...` and 0/1 label
/// cells. Row order is preserved; class_counts[c] is the number of records
/// whose label set contains c (zero-count classes included). Throws
/// DataError naming the offending row on duplicate ids, non-binary cells,
/// or column count mismatches.
DatasetManifest load_manifest(const std::filesystem::path& csv_path);

/// The k most frequent classes (descending count, ascending name on ties).
/// eligible[c] keeps manifest order and excludes records with two or more
/// positive labels among the selected classes. Throws DataError when fewer
/// than k classes have a nonzero count.
ClassPool select_top_k(const DatasetManifest& manifest, int k);

/// Deterministic per-class stratified split. Each class's eligible ids are
/// shuffled by a generator seeded from (seed, class name) and cut into
/// train/val/test with largest-remainder rounding (ties on the fractional
/// remainder go to the earlier split). Throws DataError when a class cannot
/// give at least one record to every split with a positive ratio, and
/// ConfigError when the ratios are invalid.
SplitAssignment split_stratified(const ClassPool& pool,
                                 const std::array<double, 3>& ratios,
                                 uint64_t seed);

/// Largest-remainder rounding of `total` into parts proportional to
/// `ratios`; parts sum to total exactly.
std::array<int, 3> largest_remainder_counts(int total, const std::array<double, 3>& ratios);

// JSON (de)serialization, schema:
//   {"seed":..., "ratios":[...], "assignments":{"id":"train"|"val"|"test"}}
std::string split_to_json(const SplitAssignment& s);
SplitAssignment split_from_json(const std::string& json_text);

std::string pool_to_json(const ClassPool& pool, const DatasetManifest& manifest);
ClassPool pool_from_json(const std::string& json_text);

} // namespace fewshot
