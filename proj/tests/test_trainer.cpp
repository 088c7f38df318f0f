#include <doctest.h>

#include <cmath>

#include "fewshot/error.hpp"
#include "fewshot/synthetic.hpp"
#include "fewshot/trainer.hpp"
#include "support/fixtures.hpp"

using namespace fewshot;

namespace {

TrainConfig quick_config() {
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.episodes_per_epoch = 2;
    cfg.val_episodes = 2;
    cfg.seed = 42;
    return cfg;
}

SyntheticConfig small_synth() {
    SyntheticConfig s;
    s.num_classes = 10;
    s.majority_classes = 10;
    s.majority_count = 20;
    s.minority_count = 20;
    s.image_size = 16;
    s.seed = 7;
    return s;
}

EncoderConfig small_encoder() {
    EncoderConfig e;
    e.input_w = 16;
    e.input_h = 16;
    e.input_c = 3;
    e.hidden_sizes = {16};
    e.embed_dim = 8;
    e.dropout_prob = 0.1;
    e.init_seed = 5;
    return e;
}

struct Workbench {
    SyntheticDataset ds;
    ClassPool pool;
    SplitAssignment assignment;
    TrainData data;

    explicit Workbench(const SyntheticConfig& synth, const EncoderConfig& enc) {
        ds = make_synthetic_dataset(synth);
        pool = select_top_k(ds.manifest, synth.num_classes);
        assignment = split_stratified(pool, {0.7, 0.1, 0.2}, 3);
        data.pool = &pool;
        data.assignment = &assignment;
        data.images = &ds.images;
        data.pipeline.target_w = enc.input_w;
        data.pipeline.target_h = enc.input_h;
        data.encoder = enc;
    }
};

} // namespace

TEST_CASE("learning rate schedule follows the closed form") {
    TrainConfig cfg;
    CHECK(lr_at_epoch(cfg, 0) == 1e-3);
    CHECK(lr_at_epoch(cfg, 19) == 1e-3);
    CHECK(lr_at_epoch(cfg, 20) == 5e-4);
    CHECK(lr_at_epoch(cfg, 40) == 2.5e-4);
    for (int e = 0; e <= 200; ++e)
        CHECK(lr_at_epoch(cfg, e) == cfg.lr0 * std::pow(cfg.decay_factor, e / cfg.decay_every));
}

namespace {

EncoderParams scalar_params(double theta) {
    EncoderParams p;
    p.variant = EncoderVariant::mlp;
    p.input_w = 1;
    p.input_h = 1;
    p.input_c = 1;
    p.weights.push_back(Matrix(1, 1, theta));
    return p;
}

EncoderGrads scalar_grads(double g) {
    EncoderGrads grads;
    grads.d_weights.push_back(Matrix(1, 1, g));
    return grads;
}

} // namespace

TEST_CASE("adam leaves parameters alone under zero gradients") {
    auto p = scalar_params(0.75);
    auto s = AdamState::zeros_like(p);
    adam_step(p, scalar_grads(0.0), s, 0.1, 0.9, 0.999, 1e-8);
    CHECK(p.weights[0](0, 0) == 0.75);
    CHECK(s.t == 1);
}

TEST_CASE("first adam step moves by ~lr when bias corrections cancel") {
    auto p = scalar_params(0.0);
    auto s = AdamState::zeros_like(p);
    adam_step(p, scalar_grads(1.0), s, 0.1, 0.9, 0.999, 1e-8);
    // m_hat = v_hat = 1 at t=1, so the step is -lr/(1+eps)
    CHECK(p.weights[0](0, 0) == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("two adam steps match an independent scalar oracle") {
    const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 1.0;

    // ten-line scalar oracle
    double theta = 0.3, m = 0.0, v = 0.0;
    for (int t = 1; t <= 2; ++t) {
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        double mh = m / (1 - std::pow(b1, t));
        double vh = v / (1 - std::pow(b2, t));
        theta -= lr * mh / (std::sqrt(vh) + eps);
    }

    auto p = scalar_params(0.3);
    auto s = AdamState::zeros_like(p);
    adam_step(p, scalar_grads(g), s, lr, b1, b2, eps);
    adam_step(p, scalar_grads(g), s, lr, b1, b2, eps);
    CHECK(p.weights[0](0, 0) == doctest::Approx(theta).epsilon(1e-12));
}

TEST_CASE("adam rejects non-finite gradients") {
    auto p = scalar_params(0.0);
    auto s = AdamState::zeros_like(p);
    CHECK_THROWS_AS(adam_step(p, scalar_grads(std::nan("")), s, 0.1, 0.9, 0.999, 1e-8),
                    NumericError);
}

TEST_CASE("training smoke run produces logs and checkpoints") {
    Workbench wb(small_synth(), small_encoder());
    fixtures::TempDir tmp("train");

    auto result = train(quick_config(), wb.data, tmp.path());
    CHECK(result.log.epochs.size() == 1);
    CHECK(result.log.best_epoch == 0);
    CHECK(std::filesystem::exists(tmp.path() / "best.ckpt"));
    CHECK(std::filesystem::exists(tmp.path() / "last.ckpt"));
    CHECK(std::filesystem::exists(tmp.path() / "train_log.json"));
    CHECK(std::isfinite(result.log.epochs[0].train_loss));
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
    Workbench wb(small_synth(), small_encoder());
    fixtures::TempDir tmp_a("train_a"), tmp_b("train_b");

    auto a = train(quick_config(), wb.data, tmp_a.path());
    auto b = train(quick_config(), wb.data, tmp_b.path());

    CHECK(train_log_to_json(a.log) == train_log_to_json(b.log));
    CHECK(a.last_params == b.last_params);
    CHECK(fixtures::read_text(tmp_a.path() / "best.ckpt") ==
          fixtures::read_text(tmp_b.path() / "best.ckpt"));
    CHECK(fixtures::read_text(tmp_a.path() / "last.ckpt") ==
          fixtures::read_text(tmp_b.path() / "last.ckpt"));
}

TEST_CASE("zero learning rate leaves parameters at initialization") {
    Workbench wb(small_synth(), small_encoder());
    auto cfg = quick_config();
    cfg.lr0 = 0.0;
    // lr0 = 0 fails config validation on purpose, so drive the invariant
    // through lr_at_epoch's inputs instead: decay to zero is not possible,
    // train() itself accepts the struct directly.
    auto result = train(cfg, wb.data, "");
    CHECK(result.last_params == init_encoder(wb.data.encoder));
}

TEST_CASE("loss on a frozen episode is non-increasing under small steps") {
    auto synth = small_synth();
    auto enc = small_encoder();
    enc.dropout_prob = 0.0;
    Workbench wb(synth, enc);

    PoolView view = make_pool_view(wb.pool, wb.assignment, Split::train, EpisodeSpec{});
    Episode ep = sample_episode(view, EpisodeSpec{}, 2024);

    EncoderParams params = init_encoder(enc);
    AdamState state = AdamState::zeros_like(params);

    auto episode_pass = [&](bool apply_step, double& loss_out) {
        std::vector<ForwardTrace> traces;
        std::vector<std::vector<Vec>> support(ep.classes.size());
        std::vector<Vec> queries;
        std::vector<int> labels;
        for (const auto& li : ep.support) {
            auto t = wb.data.pipeline.to_tensor(wb.ds.images.get(li.item.record_id),
                                                li.item.aug_seed);
            auto r = embed(params, t, EmbedMode::training(0));
            support[li.label].push_back(r.embedding);
            traces.push_back(std::move(r.trace));
        }
        for (const auto& li : ep.query) {
            auto t = wb.data.pipeline.to_tensor(wb.ds.images.get(li.item.record_id),
                                                li.item.aug_seed);
            auto r = embed(params, t, EmbedMode::training(0));
            queries.push_back(r.embedding);
            labels.push_back(li.label);
            traces.push_back(std::move(r.trace));
        }
        auto protos = compute_prototypes(support, ep.classes);
        auto logits = compute_logits(queries, protos, SimilarityMetric::cosine, 10.0);
        auto [loss, d_logits] = episode_loss(logits, labels);
        loss_out = loss;
        if (!apply_step) return;
        auto eg = loss_backward_to_embeddings(support, queries, protos, SimilarityMetric::cosine,
                                              10.0, d_logits);
        std::vector<Vec> d_embs;
        std::vector<size_t> cursor(ep.classes.size(), 0);
        for (const auto& li : ep.support)
            d_embs.push_back(eg.d_support[li.label][cursor[li.label]++]);
        for (auto& d : eg.d_query) d_embs.push_back(std::move(d));
        auto grads = backward(params, traces, d_embs);
        adam_step(params, grads, state, 1e-4, 0.9, 0.999, 1e-8);
    };

    double prev;
    episode_pass(true, prev);
    for (int step = 1; step < 50; ++step) {
        double loss;
        episode_pass(true, loss);
        CHECK(loss <= prev + 1e-6);
        prev = loss;
    }
}

TEST_CASE("fixed validation stream repeats across epochs, resampling varies it") {
    Workbench wb(small_synth(), small_encoder());
    auto cfg = quick_config();
    cfg.lr0 = 0.0; // frozen parameters isolate the validation stream
    cfg.epochs = 3;
    cfg.episodes_per_epoch = 1;
    cfg.val_episodes = 4;

    auto fixed = train(cfg, wb.data, "");
    CHECK(fixed.log.epochs[0].val_accuracy == fixed.log.epochs[1].val_accuracy);
    CHECK(fixed.log.epochs[0].val_accuracy == fixed.log.epochs[2].val_accuracy);

    cfg.resample_val = true;
    auto resampled = train(cfg, wb.data, "");
    bool any_differ = resampled.log.epochs[0].val_accuracy !=
                          resampled.log.epochs[1].val_accuracy ||
                      resampled.log.epochs[1].val_accuracy !=
                          resampled.log.epochs[2].val_accuracy;
    CHECK(any_differ);
}

TEST_CASE("training runs under the euclidean metric too") {
    Workbench wb(small_synth(), small_encoder());
    wb.data.metric = SimilarityMetric::euclidean;
    auto result = train(quick_config(), wb.data, "");
    CHECK(result.log.epochs.size() == 1);
    CHECK(std::isfinite(result.log.epochs[0].train_loss));
    CHECK(result.log.epochs[0].val_accuracy >= 0.0);
}

TEST_CASE("gradient clipping changes the trajectory") {
    Workbench wb(small_synth(), small_encoder());
    auto cfg = quick_config();
    auto plain = train(cfg, wb.data, "");
    cfg.grad_clip = 1e-4; // far below typical gradient norms, so it must bind
    auto clipped = train(cfg, wb.data, "");
    CHECK(plain.last_params != clipped.last_params);
}

TEST_CASE("train log json is well formed") {
    TrainLog log;
    log.epochs.push_back({0, 1.5, 0.4, 1e-3});
    log.best_epoch = 0;
    log.best_val_accuracy = 0.4;
    auto j = train_log_to_json(log);
    CHECK(j.find("\"best_epoch\": 0") != std::string::npos);
    CHECK(j.find("\"epochs\"") != std::string::npos);
}
