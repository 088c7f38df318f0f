#include "fewshot/trainer.hpp"

#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "fewshot/error.hpp"
#include "fewshot/image_io.hpp"
#include "fewshot/rng.hpp"

namespace fewshot {

namespace {

constexpr uint64_t kTrainStreamTag = 1;
constexpr uint64_t kValStreamTag = 2;
constexpr uint64_t kDropoutSalt = 0xD60F;

struct EpisodeBatch {
    std::vector<std::vector<Vec>> support_by_class; // per local label
    std::vector<Vec> query_embeddings;
    std::vector<int> query_labels;
    std::vector<ForwardTrace> traces; // support items first, then queries
};

EpisodeBatch embed_episode(const EncoderParams& params, const TrainData& data,
                           const Episode& ep, bool train_mode, uint64_t episode_seed) {
    EpisodeBatch batch;
    batch.support_by_class.resize(ep.classes.size());

    uint64_t item_index = 0;
    for (const auto& li : ep.support) {
        ImageTensor t = data.pipeline.to_tensor(data.images->get(li.item.record_id),
                                                li.item.aug_seed);
        EmbedMode mode = train_mode
                             ? EmbedMode::training(derive_seed(episode_seed ^ kDropoutSalt,
                                                               item_index))
                             : EmbedMode::infer();
        EmbedResult r = embed(params, t, mode);
        batch.support_by_class[li.label].push_back(std::move(r.embedding));
        if (train_mode) batch.traces.push_back(std::move(r.trace));
        ++item_index;
    }
    for (const auto& li : ep.query) {
        ImageTensor t = data.pipeline.to_tensor(data.images->get(li.item.record_id),
                                                li.item.aug_seed);
        EmbedMode mode = train_mode
                             ? EmbedMode::training(derive_seed(episode_seed ^ kDropoutSalt,
                                                               item_index))
                             : EmbedMode::infer();
        EmbedResult r = embed(params, t, mode);
        batch.query_embeddings.push_back(std::move(r.embedding));
        batch.query_labels.push_back(li.label);
        if (train_mode) batch.traces.push_back(std::move(r.trace));
        ++item_index;
    }
    return batch;
}

void adam_update(std::vector<double>& theta, const std::vector<double>& g,
                 std::vector<double>& m, std::vector<double>& v, double lr, double beta1,
                 double beta2, double eps, double bc1, double bc2) {
    for (size_t i = 0; i < theta.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        theta[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

double grad_l2_norm(const EncoderGrads& g) {
    double sq = 0.0;
    for (const auto& w : g.d_weights)
        for (double x : w.a) sq += x * x;
    for (const auto& b : g.d_biases)
        for (double x : b) sq += x * x;
    return std::sqrt(sq);
}

void scale_grads(EncoderGrads& g, double s) {
    for (auto& w : g.d_weights)
        for (double& x : w.a) x *= s;
    for (auto& b : g.d_biases)
        for (double& x : b) x *= s;
}

} // namespace

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
    if (epoch < 0) throw ConfigError("epoch must be >= 0");
    return cfg.lr0 * std::pow(cfg.decay_factor, epoch / cfg.decay_every);
}

AdamState AdamState::zeros_like(const EncoderParams& params) {
    AdamState s;
    for (const auto& w : params.weights) {
        s.m_w.emplace_back(w.rows, w.cols);
        s.v_w.emplace_back(w.rows, w.cols);
    }
    for (const auto& b : params.biases) {
        s.m_b.emplace_back(b.size(), 0.0);
        s.v_b.emplace_back(b.size(), 0.0);
    }
    return s;
}

void adam_step(EncoderParams& params, const EncoderGrads& grads, AdamState& state, double lr,
               double beta1, double beta2, double epsilon) {
    if (grads.d_weights.size() != params.weights.size() ||
        grads.d_biases.size() != params.biases.size())
        throw DataError("adam_step: gradient shapes do not match parameters");
    if (!grads.all_finite()) throw NumericError("adam_step: non-finite gradient");

    state.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (size_t l = 0; l < params.weights.size(); ++l)
        adam_update(params.weights[l].a, grads.d_weights[l].a, state.m_w[l].a, state.v_w[l].a,
                    lr, beta1, beta2, epsilon, bc1, bc2);
    for (size_t l = 0; l < params.biases.size(); ++l)
        adam_update(params.biases[l], grads.d_biases[l], state.m_b[l], state.v_b[l], lr, beta1,
                    beta2, epsilon, bc1, bc2);
}

std::string train_log_to_json(const TrainLog& log) {
    nlohmann::json j;
    j["format_version"] = 1;
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : log.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"train_loss", e.train_loss},
                          {"val_accuracy", e.val_accuracy},
                          {"lr", e.lr}});
    }
    j["epochs"] = std::move(epochs);
    j["best_epoch"] = log.best_epoch;
    j["best_val_accuracy"] = log.best_val_accuracy;
    return j.dump(2) + "\n";
}

double validate(const EncoderParams& params, const TrainData& data, const PoolView& view,
                const EpisodeStream& stream) {
    if (stream.count <= 0) return 0.0;
    double acc_sum = 0.0;
    for (int i = 0; i < stream.count; ++i) {
        Episode ep = stream.episode(view, i);
        EpisodeBatch batch = embed_episode(params, data, ep, false, 0);
        PrototypeSet protos = compute_prototypes(batch.support_by_class, ep.classes);
        int correct = 0;
        for (size_t q = 0; q < batch.query_embeddings.size(); ++q) {
            auto [label, scores] = classify(batch.query_embeddings[q], protos, data.metric);
            if (label == batch.query_labels[q]) ++correct;
        }
        acc_sum += static_cast<double>(correct) / static_cast<double>(ep.query.size());
    }
    return acc_sum / stream.count;
}

TrainResult train(const TrainConfig& cfg, const TrainData& data,
                  const std::filesystem::path& out_dir) {
    if (cfg.epochs < 0 || cfg.episodes_per_epoch < 1)
        throw ConfigError("train: epochs must be >= 0 and episodes_per_epoch >= 1");
    if (!data.pool || !data.assignment || !data.images)
        throw ConfigError("train: incomplete TrainData");

    PoolView train_view = make_pool_view(*data.pool, *data.assignment, Split::train, cfg.spec);
    PoolView val_view = make_pool_view(*data.pool, *data.assignment, Split::val, cfg.spec);

    EncoderParams params = init_encoder(data.encoder);
    AdamState adam = AdamState::zeros_like(params);

    const uint64_t train_master = derive_seed(cfg.seed, kTrainStreamTag);
    const uint64_t val_master = derive_seed(cfg.seed, kValStreamTag);

    TrainResult result;
    result.best_params = params;
    result.last_params = params;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at_epoch(cfg, epoch);
        double loss_sum = 0.0;

        for (int e = 0; e < cfg.episodes_per_epoch; ++e) {
            const uint64_t global_index =
                static_cast<uint64_t>(epoch) * cfg.episodes_per_epoch + e;
            const uint64_t ep_seed = derive_seed(train_master, global_index);
            Episode ep = sample_episode(train_view, cfg.spec, ep_seed);

            EpisodeBatch batch = embed_episode(params, data, ep, true, ep_seed);
            PrototypeSet protos = compute_prototypes(batch.support_by_class, ep.classes);
            EpisodeLogits logits =
                compute_logits(batch.query_embeddings, protos, data.metric, data.temperature);
            auto [loss, d_logits] = episode_loss(logits, batch.query_labels);
            if (!std::isfinite(loss))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", episode " + std::to_string(e));
            loss_sum += loss;

            EmbeddingGrads eg =
                loss_backward_to_embeddings(batch.support_by_class, batch.query_embeddings,
                                            protos, data.metric, data.temperature, d_logits);

            // d_embeddings in trace order: support (class-major) then queries
            std::vector<Vec> d_embeddings;
            d_embeddings.reserve(batch.traces.size());
            {
                std::vector<size_t> member_cursor(ep.classes.size(), 0);
                for (const auto& li : ep.support)
                    d_embeddings.push_back(eg.d_support[li.label][member_cursor[li.label]++]);
            }
            for (auto& dq : eg.d_query) d_embeddings.push_back(std::move(dq));

            EncoderGrads grads = backward(params, batch.traces, d_embeddings);
            if (cfg.grad_clip > 0.0) {
                const double n = grad_l2_norm(grads);
                if (n > cfg.grad_clip) scale_grads(grads, cfg.grad_clip / n);
            }
            adam_step(params, grads, adam, lr, cfg.beta1, cfg.beta2, cfg.epsilon);
        }

        const uint64_t epoch_val_master =
            cfg.resample_val ? derive_seed(val_master, static_cast<uint64_t>(epoch)) : val_master;
        EpisodeStream val_stream{cfg.spec, epoch_val_master, cfg.val_episodes};
        const double val_acc = validate(params, data, val_view, val_stream);

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / cfg.episodes_per_epoch;
        stats.val_accuracy = val_acc;
        stats.lr = lr;
        result.log.epochs.push_back(stats);

        if (result.log.best_epoch < 0 || val_acc > result.log.best_val_accuracy) {
            result.log.best_epoch = epoch;
            result.log.best_val_accuracy = val_acc;
            result.best_params = params;
        }
    }
    result.last_params = params;

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        save_checkpoint(result.best_params, out_dir / "best.ckpt");
        save_checkpoint(result.last_params, out_dir / "last.ckpt");
        write_file_atomic(out_dir / "train_log.json", train_log_to_json(result.log));
    }
    return result;
}

} // namespace fewshot
