#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "fewshot/augment.hpp"
#include "fewshot/encoder.hpp"
#include "fewshot/proto.hpp"
#include "fewshot/sampler.hpp"
#include "fewshot/trainer.hpp"

namespace fewshot {

/// One experiment, end to end. Serialized as versioned JSON; every field
/// has a default, and validation reports the dotted path of a bad field.
struct RunConfig {
    std::filesystem::path manifest;
    int top_k = 10;
    std::array<double, 3> split_ratios{0.7, 0.1, 0.2};
    uint64_t split_seed = 0;
    AugSpec augment;
    EpisodeSpec episode;
    TrainConfig train;
    EncoderConfig encoder;
    SimilarityMetric metric = SimilarityMetric::cosine;
    double temperature = 10.0;
    std::filesystem::path out_dir = "runs/default";
};

std::string run_config_to_json(const RunConfig& cfg);

/// Parses and validates. Unknown keys are rejected; invalid values throw
/// ConfigError naming the field (e.g. "train.epochs must be positive").
RunConfig run_config_from_json(const std::string& json_text);

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

/// Field-level checks shared by the JSON path and programmatic construction.
void validate_run_config(const RunConfig& cfg);

} // namespace fewshot
