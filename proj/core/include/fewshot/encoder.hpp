#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fewshot/image.hpp"
#include "fewshot/linalg.hpp"

namespace fewshot {

enum class EncoderVariant { random_projection, mlp };

const char* to_string(EncoderVariant v);
EncoderVariant encoder_variant_from_string(const std::string& s);

/// Shape and initialization recipe for an encoder.
struct EncoderConfig {
    EncoderVariant variant = EncoderVariant::mlp;
    int input_w = 32, input_h = 32, input_c = 3;
    std::vector<int> hidden_sizes{128}; // mlp only
    int embed_dim = 64;
    double dropout_prob = 0.1; // mlp only
    uint64_t init_seed = 0;

    int input_dim() const { return input_w * input_h * input_c; }
    bool operator==(const EncoderConfig&) const = default;
};

/// Weights of an encoder plus the preprocessing fingerprint the weights
/// were trained against (input downsample size and the standardization the
/// mlp applies to tensors before the first affine layer).
///
/// mlp forward: standardize -> (affine -> ReLU -> dropout)* -> affine.
/// Dropout is inverted (masks are 0 or 1/(1-p)), so inference applies no
/// rescale. random_projection forward: flatten -> fixed Gaussian matrix,
/// applied to the raw [0,1] tensor with no standardization; it has no
/// trainable parameters.
struct EncoderParams {
    EncoderVariant variant = EncoderVariant::mlp;
    int input_w = 0, input_h = 0, input_c = 0;
    std::vector<Matrix> weights;
    std::vector<Vec> biases; // empty for random_projection
    double dropout_prob = 0.0;
    double standardize_mean = 0.5;
    double standardize_scale = 2.0;

    int input_dim() const { return input_w * input_h * input_c; }
    int embed_dim() const { return weights.empty() ? 0 : weights.back().rows; }
    size_t parameter_count() const;

    bool operator==(const EncoderParams&) const = default;
};

/// He-uniform fan-in weights and zero biases for the mlp; a seeded Gaussian
/// matrix scaled by 1/sqrt(input_dim) for random_projection. All draws come
/// from Rng(config.init_seed).
EncoderParams init_encoder(const EncoderConfig& config);

struct EmbedMode {
    bool train = false;
    uint64_t dropout_seed = 0;

    static EmbedMode infer() { return {false, 0}; }
    static EmbedMode training(uint64_t seed) { return {true, seed}; }
};

/// Everything backward() needs from one forward pass: the standardized
/// input, per-layer pre-activations and activations, and the dropout masks
/// (0 or 1/(1-p)) that were applied.
struct ForwardTrace {
    Vec input;
    std::vector<Vec> pre_activations;
    std::vector<Vec> activations; // post ReLU+dropout, per hidden layer
    std::vector<Vec> dropout_masks;
};

struct EmbedResult {
    Vec embedding;
    ForwardTrace trace; // populated only in train mode
};

/// Maps a tensor matching the params' input dims to an embedding. In train
/// mode the dropout masks are a pure function of (params' shapes, seed) and
/// the trace is recorded; in infer mode dropout is disabled. Throws
/// DataError on shape mismatch, NumericError on non-finite parameters.
EmbedResult embed(const EncoderParams& params, const ImageTensor& x, const EmbedMode& mode);

struct EncoderGrads {
    std::vector<Matrix> d_weights;
    std::vector<Vec> d_biases;

    static EncoderGrads zeros_like(const EncoderParams& params);
    void accumulate(const EncoderGrads& other);
    bool all_finite() const;
};

/// Exact reverse-mode gradients for a batch of train-mode traces:
/// d_embeddings[i] is dL/d(embedding of trace i). Gradients are summed over
/// the batch. random_projection has no trainable parameters, so its
/// gradient is empty. Throws DataError on trace/params mismatch.
EncoderGrads backward(const EncoderParams& params,
                      std::span<const ForwardTrace> traces,
                      std::span<const Vec> d_embeddings);

/// Versioned JSON checkpoint holding the variant tag, shapes, flat weight
/// arrays (64-bit reals, exact round-trip), dropout probability, and the
/// preprocessing fingerprint.
std::string encoder_to_json(const EncoderParams& params);
EncoderParams encoder_from_json(const std::string& json_text);
void save_checkpoint(const EncoderParams& params, const std::filesystem::path& path);
EncoderParams load_checkpoint(const std::filesystem::path& path);

} // namespace fewshot
