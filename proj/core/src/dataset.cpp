#include "fewshot/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fewshot/error.hpp"
#include "fewshot/rng.hpp"
#include "json_util.hpp"

namespace fewshot {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) cells.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace

const ImageRecord* DatasetManifest::find(const std::string& id) const {
    for (const auto& r : records)
        if (r.id == id) return &r;
    return nullptr;
}

const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw DataError("unknown split name: " + s);
}

DatasetManifest load_manifest(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw DataError("manifest file not found: " + csv_path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError("manifest is empty: " + csv_path.string());

    auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "ID" || header[1] != "path")
        throw DataError("malformed manifest header (expected `ID,path,<class>...`): " +
                        csv_path.string());

    std::vector<std::string> class_names(header.begin() + 2, header.end());
    {
        std::set<std::string> seen;
        for (const auto& c : class_names) {
            if (c.empty()) throw DataError("empty class name in manifest header");
            if (!seen.insert(c).second) throw DataError("duplicate class column: " + c);
        }
    }

    DatasetManifest manifest;
    manifest.base_dir = csv_path.has_parent_path() ? csv_path.parent_path()
                                                   : std::filesystem::path(".");
    for (const auto& c : class_names) manifest.class_counts[c] = 0;

    std::set<std::string> ids;
    int row = 1; // header is row 1
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw DataError("row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " cells, got " +
                            std::to_string(cells.size()));
        ImageRecord rec;
        rec.id = cells[0];
        rec.path = cells[1];
        if (rec.id.empty()) throw DataError("row " + std::to_string(row) + ": empty ID");
        if (rec.path.empty()) throw DataError("row " + std::to_string(row) + ": empty path");
        if (!ids.insert(rec.id).second)
            throw DataError("row " + std::to_string(row) + ": duplicate ID `" + rec.id + "`");
        for (size_t i = 0; i < class_names.size(); ++i) {
            const std::string& cell = cells[i + 2];
            if (cell == "1") {
                rec.labels.insert(class_names[i]);
                ++manifest.class_counts[class_names[i]];
            } else if (cell != "0") {
                throw DataError("row " + std::to_string(row) + ": label cell for `" +
                                class_names[i] + "` must be 0 or 1, got `" + cell + "`");
            }
        }
        manifest.records.push_back(std::move(rec));
    }
    return manifest;
}

ClassPool select_top_k(const DatasetManifest& manifest, int k) {
    if (k <= 0) throw ConfigError("top_k must be positive");

    std::vector<std::pair<std::string, int>> nonempty;
    for (const auto& [name, count] : manifest.class_counts)
        if (count >= 1) nonempty.emplace_back(name, count);
    if (static_cast<int>(nonempty.size()) < k)
        throw DataError("requested top " + std::to_string(k) + " classes but only " +
                        std::to_string(nonempty.size()) + " have at least one record");

    std::sort(nonempty.begin(), nonempty.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    ClassPool pool;
    for (int i = 0; i < k; ++i) pool.classes.push_back(nonempty[i].first);
    std::set<std::string> selected(pool.classes.begin(), pool.classes.end());
    for (const auto& c : pool.classes) pool.eligible[c] = {};

    for (const auto& rec : manifest.records) {
        std::string only;
        int positives = 0;
        for (const auto& label : rec.labels) {
            if (selected.count(label)) {
                ++positives;
                only = label;
            }
        }
        if (positives == 1)
            pool.eligible[only].push_back(rec.id);
        else if (positives >= 2)
            ++pool.excluded_multi_positive;
    }
    // sorted ids make the pool independent of manifest row order
    for (auto& [cls, ids] : pool.eligible) std::sort(ids.begin(), ids.end());
    return pool;
}

std::array<int, 3> largest_remainder_counts(int total, const std::array<double, 3>& ratios) {
    std::array<int, 3> counts{};
    std::array<double, 3> rem{};
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        double raw = ratios[i] * total;
        counts[i] = static_cast<int>(std::floor(raw));
        rem[i] = raw - counts[i];
        assigned += counts[i];
    }
    // remainders within 1e-9 count as tied, and ties go to the earlier
    // split; exact decimal ratios often land epsilon-apart in binary
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return rem[a] > rem[b] + 1e-9; });
    for (int left = total - assigned, i = 0; left > 0; --left, ++i) counts[order[i]] += 1;
    return counts;
}

SplitAssignment split_stratified(const ClassPool& pool, const std::array<double, 3>& ratios,
                                 uint64_t seed) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("split ratios must sum to 1, got " + std::to_string(sum));
    for (double r : ratios)
        if (r < 0.0) throw ConfigError("split ratios must be non-negative");

    SplitAssignment out;
    out.seed = seed;
    out.ratios = ratios;

    for (const auto& [cls, ids] : pool.eligible) {
        const int n = static_cast<int>(ids.size());
        auto counts = largest_remainder_counts(n, ratios);
        for (int i = 0; i < 3; ++i)
            if (ratios[i] > 0.0 && counts[i] == 0)
                throw DataError("class `" + cls + "` has too few records (" + std::to_string(n) +
                                ") to populate every split");

        // per-class shuffle keyed only by (seed, class name)
        Rng rng(mix64(seed ^ fnv1a64(cls)));
        std::vector<int> idx;
        sample_indices_without_replacement(rng, ids.size(), ids.size(), idx);

        int cursor = 0;
        for (int s = 0; s < 3; ++s) {
            for (int i = 0; i < counts[s]; ++i, ++cursor)
                out.split[ids[idx[cursor]]] = static_cast<Split>(s);
        }
    }
    return out;
}

std::string split_to_json(const SplitAssignment& s) {
    json j;
    j["seed"] = s.seed;
    j["ratios"] = s.ratios;
    json assignments = json::object();
    for (const auto& [id, sp] : s.split) assignments[id] = to_string(sp);
    j["assignments"] = std::move(assignments);
    return j.dump(2) + "\n";
}

SplitAssignment split_from_json(const std::string& json_text) {
    json j = detail::parse_json(json_text, "splits");
    return detail::with_json_errors("splits", [&] {
        SplitAssignment s;
        s.seed = j.at("seed").get<uint64_t>();
        auto r = j.at("ratios");
        if (!r.is_array() || r.size() != 3)
            throw DataError("splits json: ratios must have 3 entries");
        for (int i = 0; i < 3; ++i) s.ratios[i] = r[i].get<double>();
        for (const auto& [id, sp] : j.at("assignments").items())
            s.split[id] = split_from_string(sp.get<std::string>());
        return s;
    });
}

std::string pool_to_json(const ClassPool& pool, const DatasetManifest& manifest) {
    json j;
    j["format_version"] = 1;
    j["classes"] = pool.classes;
    json counts = json::object();
    for (const auto& c : pool.classes) {
        auto it = manifest.class_counts.find(c);
        counts[c] = it == manifest.class_counts.end() ? 0 : it->second;
    }
    j["counts"] = std::move(counts);
    j["excluded_multi_positive"] = pool.excluded_multi_positive;
    json eligible = json::object();
    for (const auto& [cls, ids] : pool.eligible) eligible[cls] = ids;
    j["eligible"] = std::move(eligible);
    return j.dump(2) + "\n";
}

ClassPool pool_from_json(const std::string& json_text) {
    json j = detail::parse_json(json_text, "pool");
    return detail::with_json_errors("pool", [&] {
        ClassPool pool;
        pool.classes = j.at("classes").get<std::vector<std::string>>();
        pool.excluded_multi_positive = j.value("excluded_multi_positive", 0);
        for (const auto& [cls, ids] : j.at("eligible").items())
            pool.eligible[cls] = ids.get<std::vector<std::string>>();
        return pool;
    });
}

} // namespace fewshot
