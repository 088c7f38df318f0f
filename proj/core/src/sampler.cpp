#include "fewshot/sampler.hpp"

#include <algorithm>

#include <json.hpp>

#include "fewshot/error.hpp"
#include "fewshot/rng.hpp"
#include "json_util.hpp"

namespace fewshot {

PoolView make_pool_view(const ClassPool& pool, const SplitAssignment& assignment, Split split,
                        const EpisodeSpec& spec) {
    const int min_size = std::max(2, spec.min_class_size);
    PoolView view;
    for (const auto& cls : pool.classes) {
        auto it = pool.eligible.find(cls);
        if (it == pool.eligible.end()) continue;
        std::vector<std::string> kept;
        for (const auto& id : it->second) {
            auto sp = assignment.split.find(id);
            if (sp != assignment.split.end() && sp->second == split) kept.push_back(id);
        }
        if (static_cast<int>(kept.size()) >= min_size) {
            view.classes.push_back(cls);
            view.ids.push_back(std::move(kept));
        }
    }
    if (static_cast<int>(view.classes.size()) < spec.n_way)
        throw DataError(std::string("split `") + to_string(split) + "` has only " +
                        std::to_string(view.classes.size()) + " usable classes, need " +
                        std::to_string(spec.n_way));
    return view;
}

Episode sample_episode(const PoolView& view, const EpisodeSpec& spec, uint64_t seed) {
    if (spec.n_way < 1 || spec.k_shot < 1 || spec.n_query < 1)
        throw ConfigError("episode spec fields must be positive");
    if (static_cast<int>(view.classes.size()) < spec.n_way)
        throw DataError("pool has " + std::to_string(view.classes.size()) +
                        " classes, need " + std::to_string(spec.n_way));

    Rng rng(seed);
    std::vector<size_t> class_pick;
    sample_indices_without_replacement(rng, view.classes.size(),
                                       static_cast<size_t>(spec.n_way), class_pick);

    Episode ep;
    const int need = spec.k_shot + spec.n_query;
    for (int local = 0; local < spec.n_way; ++local) {
        const auto& cls = view.classes[class_pick[local]];
        const auto& ids = view.ids[class_pick[local]];
        const int m = static_cast<int>(ids.size());
        ep.classes.push_back(cls);
        if (m < 2)
            throw DataError("class `" + cls + "` has " + std::to_string(m) +
                            " record(s); support and query need disjoint bases (minimum 2)");

        std::vector<size_t> draw;
        sample_indices_without_replacement(rng, ids.size(),
                                           static_cast<size_t>(std::min(m, need)), draw);

        if (m >= need) {
            for (int j = 0; j < spec.k_shot; ++j)
                ep.support.push_back({{ids[draw[j]], std::nullopt}, local});
            for (int j = 0; j < spec.n_query; ++j)
                ep.query.push_back({{ids[draw[spec.k_shot + j]], std::nullopt}, local});
            continue;
        }

        // Too few records: support takes the first min(k_shot, m-1) distinct
        // bases, query the rest; both reuse bases round-robin with fresh
        // augmentation seeds, keeping support and query id-disjoint.
        const int s_base = std::min(spec.k_shot, m - 1);
        const int q_base = m - s_base;
        for (int j = 0; j < spec.k_shot; ++j) {
            const auto& id = ids[draw[j % s_base]];
            if (j < s_base)
                ep.support.push_back({{id, std::nullopt}, local});
            else
                ep.support.push_back({{id, rng.next_u64()}, local});
        }
        for (int j = 0; j < spec.n_query; ++j) {
            const auto& id = ids[draw[s_base + (j % q_base)]];
            if (j < q_base)
                ep.query.push_back({{id, std::nullopt}, local});
            else
                ep.query.push_back({{id, rng.next_u64()}, local});
        }
    }
    return ep;
}

Episode EpisodeStream::episode(const PoolView& view, int index) const {
    return sample_episode(view, spec, derive_seed(master_seed, static_cast<uint64_t>(index)));
}

std::map<std::string, int> class_frequency_audit(const std::vector<Episode>& episodes,
                                                 const std::vector<std::string>& pool_classes) {
    std::map<std::string, int> counts;
    for (const auto& cls : pool_classes) counts[cls] = 0;
    for (const auto& ep : episodes)
        for (const auto& cls : ep.classes) ++counts[cls];
    return counts;
}

std::vector<std::string> naive_frequency_weighted_classes(const std::vector<std::string>& classes,
                                                          const std::vector<int>& counts,
                                                          int n_way, uint64_t seed) {
    if (classes.size() != counts.size())
        throw ConfigError("naive sampler: classes and counts must align");
    if (n_way > static_cast<int>(classes.size()))
        throw DataError("naive sampler: n_way exceeds class count");

    Rng rng(seed);
    std::vector<size_t> remaining(classes.size());
    for (size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;

    std::vector<std::string> picked;
    for (int d = 0; d < n_way; ++d) {
        int64_t total = 0;
        for (size_t i : remaining) total += counts[i];
        if (total <= 0) throw DataError("naive sampler: remaining classes have no records");
        int64_t r = static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(total)));
        size_t chosen = remaining.back();
        for (size_t pos = 0; pos < remaining.size(); ++pos) {
            r -= counts[remaining[pos]];
            if (r < 0) {
                chosen = remaining[pos];
                remaining.erase(remaining.begin() + static_cast<ptrdiff_t>(pos));
                break;
            }
        }
        picked.push_back(classes[chosen]);
    }
    return picked;
}

std::string episode_to_json_line(const Episode& ep) {
    nlohmann::json j;
    j["classes"] = ep.classes;
    auto items = [](const std::vector<LabeledItem>& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& li : v) {
            nlohmann::json e;
            e["id"] = li.item.record_id;
            e["label"] = li.label;
            if (li.item.aug_seed)
                e["aug_seed"] = *li.item.aug_seed;
            else
                e["aug_seed"] = nullptr;
            arr.push_back(std::move(e));
        }
        return arr;
    };
    j["support"] = items(ep.support);
    j["query"] = items(ep.query);
    return j.dump();
}

} // namespace fewshot
