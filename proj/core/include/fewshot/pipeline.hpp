#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "fewshot/augment.hpp"
#include "fewshot/dataset.hpp"
#include "fewshot/encoder.hpp"
#include "fewshot/image.hpp"
#include "fewshot/sampler.hpp"

namespace fewshot {

/// Decoded images by record id. Disk-backed stores decode lazily and cache;
/// tests and the synthetic path can preload with put().
class ImageStore {
public:
    ImageStore() = default;

    static ImageStore from_manifest(const DatasetManifest& manifest);

    void put(const std::string& id, RasterImage img);

    /// Throws DataError for unknown ids or unreadable files.
    const RasterImage& get(const std::string& id) const;

private:
    std::map<std::string, std::filesystem::path> paths_;
    mutable std::map<std::string, RasterImage> cache_;
};

/// base image -> (augment when the item carries a seed) -> bilinear resize
/// to the encoder input -> [0,1] tensor.
struct ImagePipeline {
    AugSpec aug;
    int target_w = 32;
    int target_h = 32;

    ImageTensor to_tensor(const RasterImage& base, std::optional<uint64_t> aug_seed) const;
};

/// Anything that can turn an episode item into an embedding vector.
class ItemEmbedder {
public:
    virtual ~ItemEmbedder() = default;
    virtual Vec embed_item(const EpisodeItem& item) const = 0;
};

/// Encoder in infer mode behind the image pipeline.
class EncoderEmbedder : public ItemEmbedder {
public:
    EncoderEmbedder(const ImageStore& store, ImagePipeline pipeline, const EncoderParams& params)
        : store_(&store), pipeline_(std::move(pipeline)), params_(&params) {}

    Vec embed_item(const EpisodeItem& item) const override;

private:
    const ImageStore* store_;
    ImagePipeline pipeline_;
    const EncoderParams* params_;
};

/// Embeddings imported from an external encoder, keyed by record id.
/// Augmentation seeds are ignored: an item always maps to its base record's
/// embedding.
class ExternalEmbeddingStore : public ItemEmbedder {
public:
    ExternalEmbeddingStore() = default;

    int dim() const { return dim_; }
    size_t size() const { return embeddings_.size(); }
    bool contains(const std::string& id) const { return embeddings_.count(id) > 0; }
    void insert(const std::string& id, Vec embedding);

    Vec embed_item(const EpisodeItem& item) const override;

    /// Parses CSV with header `id,e0,...,e{m-1}`. Throws DataError naming
    /// the row on dimension mismatches, duplicates, or non-numeric cells.
    static ExternalEmbeddingStore from_csv(const std::filesystem::path& csv_path);

    std::string to_json() const;
    static ExternalEmbeddingStore from_json(const std::string& json_text);

private:
    std::map<std::string, Vec> embeddings_;
    int dim_ = 0;
};

} // namespace fewshot
