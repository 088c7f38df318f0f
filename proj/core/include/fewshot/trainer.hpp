#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fewshot/encoder.hpp"
#include "fewshot/pipeline.hpp"
#include "fewshot/proto.hpp"
#include "fewshot/sampler.hpp"

namespace fewshot {

struct TrainConfig {
    int epochs = 50;
    int episodes_per_epoch = 1000;
    int val_episodes = 600;
    EpisodeSpec spec;
    double lr0 = 1e-3;
    double decay_factor = 0.5;
    int decay_every = 20;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double grad_clip = 0.0; // 0 disables clipping
    bool resample_val = false;
    uint64_t seed = 0;
};

/// lr0 * decay_factor^floor(epoch / decay_every), epoch 0-based.
double lr_at_epoch(const TrainConfig& cfg, int epoch);

struct AdamState {
    std::vector<Matrix> m_w, v_w;
    std::vector<Vec> m_b, v_b;
    int64_t t = 0;

    static AdamState zeros_like(const EncoderParams& params);
};

/// One bias-corrected Adam update, in place:
///   t += 1; m = b1*m + (1-b1)*g; v = b2*v + (1-b2)*g^2
///   theta -= lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps)
/// Throws NumericError on non-finite gradients.
void adam_step(EncoderParams& params, const EncoderGrads& grads, AdamState& state,
               double lr, double beta1, double beta2, double epsilon);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0; // arithmetic mean of episode losses
    double val_accuracy = 0.0;
    double lr = 0.0;
};

struct TrainLog {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val_accuracy = 0.0;
};

std::string train_log_to_json(const TrainLog& log);

/// Everything train() reads besides the config: data, preprocessing,
/// encoder recipe and episodic objective.
struct TrainData {
    const ClassPool* pool = nullptr;
    const SplitAssignment* assignment = nullptr;
    const ImageStore* images = nullptr;
    ImagePipeline pipeline;
    EncoderConfig encoder;
    SimilarityMetric metric = SimilarityMetric::cosine;
    double temperature = 10.0;
};

struct TrainResult {
    TrainLog log;
    EncoderParams best_params;
    EncoderParams last_params;
};

/// Episodic training. For each epoch, streams cfg.episodes_per_epoch
/// episodes from the train split (one global stream indexed across epochs,
/// master seed derive_seed(cfg.seed, 1)), runs
/// preprocess -> embed(train) -> prototypes -> logits -> loss -> backward
/// -> adam_step per episode, then measures accuracy on the validation
/// stream (master seed derive_seed(cfg.seed, 2); fixed across epochs unless
/// cfg.resample_val, in which case epoch e uses
/// derive_seed(derive_seed(cfg.seed, 2), e)). A checkpoint is kept whenever
/// validation accuracy strictly improves (first best wins ties). When
/// out_dir is non-empty, best.ckpt, last.ckpt and train_log.json are
/// written there.
///
/// Per-item dropout seeds are derive_seed(episode_seed ^ 0xD60F, item
/// index), making runs bit-reproducible for a fixed config and seed.
TrainResult train(const TrainConfig& cfg, const TrainData& data,
                  const std::filesystem::path& out_dir);

/// Mean over episodes of (correct queries / total queries) with dropout
/// disabled.
double validate(const EncoderParams& params, const TrainData& data,
                const PoolView& view, const EpisodeStream& stream);

} // namespace fewshot
