#include "fewshot/pipeline.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fewshot/error.hpp"
#include "fewshot/image_io.hpp"
#include "fewshot/preprocess.hpp"
#include "json_util.hpp"

namespace fewshot {

ImageStore ImageStore::from_manifest(const DatasetManifest& manifest) {
    ImageStore store;
    for (const auto& rec : manifest.records) store.paths_[rec.id] = manifest.resolve_path(rec);
    return store;
}

void ImageStore::put(const std::string& id, RasterImage img) {
    cache_[id] = std::move(img);
}

const RasterImage& ImageStore::get(const std::string& id) const {
    auto hit = cache_.find(id);
    if (hit != cache_.end()) return hit->second;
    auto it = paths_.find(id);
    if (it == paths_.end()) throw DataError("unknown record id: " + id);
    cache_[id] = load_image(it->second);
    return cache_[id];
}

ImageTensor ImagePipeline::to_tensor(const RasterImage& base,
                                     std::optional<uint64_t> aug_seed) const {
    if (aug_seed) {
        RasterImage augmented = augment(base, aug, *aug_seed);
        return normalize(resize_bilinear(augmented, target_w, target_h));
    }
    return normalize(resize_bilinear(base, target_w, target_h));
}

Vec EncoderEmbedder::embed_item(const EpisodeItem& item) const {
    ImageTensor t = pipeline_.to_tensor(store_->get(item.record_id), item.aug_seed);
    return embed(*params_, t, EmbedMode::infer()).embedding;
}

void ExternalEmbeddingStore::insert(const std::string& id, Vec embedding) {
    if (embedding.empty()) throw DataError("empty embedding for id `" + id + "`");
    if (dim_ == 0)
        dim_ = static_cast<int>(embedding.size());
    else if (static_cast<int>(embedding.size()) != dim_)
        throw DataError("embedding for id `" + id + "` has dimension " +
                        std::to_string(embedding.size()) + ", expected " + std::to_string(dim_));
    if (!embeddings_.emplace(id, std::move(embedding)).second)
        throw DataError("duplicate embedding id `" + id + "`");
}

Vec ExternalEmbeddingStore::embed_item(const EpisodeItem& item) const {
    auto it = embeddings_.find(item.record_id);
    if (it == embeddings_.end())
        throw DataError("no imported embedding for record id `" + item.record_id + "`");
    return it->second;
}

ExternalEmbeddingStore ExternalEmbeddingStore::from_csv(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw DataError("embeddings file not found: " + csv_path.string());

    auto split_line = [](const std::string& line) {
        std::vector<std::string> cells;
        std::string cur;
        std::stringstream ss(line);
        while (std::getline(ss, cur, ',')) {
            while (!cur.empty() && (cur.back() == '\r' || cur.back() == ' ')) cur.pop_back();
            cells.push_back(cur);
        }
        return cells;
    };

    std::string line;
    if (!std::getline(in, line)) throw DataError("embeddings file is empty");
    auto header = split_line(line);
    if (header.size() < 2 || header[0] != "id")
        throw DataError("embeddings header must be `id,e0,...`");
    const size_t dim = header.size() - 1;
    for (size_t i = 0; i < dim; ++i)
        if (header[i + 1] != "e" + std::to_string(i))
            throw DataError("embeddings header column " + std::to_string(i + 1) +
                            " must be e" + std::to_string(i));

    ExternalEmbeddingStore store;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != dim + 1)
            throw DataError("row " + std::to_string(row) + ": expected " +
                            std::to_string(dim + 1) + " cells, got " +
                            std::to_string(cells.size()));
        Vec e(dim);
        for (size_t i = 0; i < dim; ++i) {
            try {
                size_t pos = 0;
                e[i] = std::stod(cells[i + 1], &pos);
                if (pos != cells[i + 1].size()) throw std::invalid_argument("trailing junk");
            } catch (const std::exception&) {
                throw DataError("row " + std::to_string(row) + ": cell `" + cells[i + 1] +
                                "` is not a number");
            }
        }
        try {
            store.insert(cells[0], std::move(e));
        } catch (const DataError& err) {
            throw DataError("row " + std::to_string(row) + ": " + err.what());
        }
    }
    if (store.size() == 0) throw DataError("embeddings file has no data rows");
    return store;
}

std::string ExternalEmbeddingStore::to_json() const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["dim"] = dim_;
    nlohmann::json m = nlohmann::json::object();
    for (const auto& [id, e] : embeddings_) m[id] = e;
    j["embeddings"] = std::move(m);
    return j.dump() + "\n";
}

ExternalEmbeddingStore ExternalEmbeddingStore::from_json(const std::string& json_text) {
    auto j = detail::parse_json(json_text, "embedding store");
    return detail::with_json_errors("embedding store", [&] {
        ExternalEmbeddingStore store;
        for (const auto& [id, e] : j.at("embeddings").items())
            store.insert(id, e.get<Vec>());
        const int declared = j.at("dim").get<int>();
        if (store.size() > 0 && store.dim() != declared)
            throw DataError("embedding store: dim field does not match data");
        return store;
    });
}

} // namespace fewshot
