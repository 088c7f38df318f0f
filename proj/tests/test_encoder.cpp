#include <doctest.h>

#include <cmath>

#include "fewshot/encoder.hpp"
#include "fewshot/error.hpp"
#include "support/fixtures.hpp"

using namespace fewshot;

namespace {

ImageTensor tensor_filled(int w, int h, int c, double v) {
    ImageTensor t(w, h, c, v);
    return t;
}

ImageTensor random_tensor(int w, int h, int c, uint64_t seed) {
    ImageTensor t(w, h, c);
    Rng rng(seed);
    for (auto& v : t.data) v = rng.next_double();
    return t;
}

EncoderConfig tiny_mlp(double dropout = 0.0) {
    EncoderConfig cfg;
    cfg.variant = EncoderVariant::mlp;
    cfg.input_w = 4;
    cfg.input_h = 4;
    cfg.input_c = 3;
    cfg.hidden_sizes = {8};
    cfg.embed_dim = 5;
    cfg.dropout_prob = dropout;
    cfg.init_seed = 21;
    return cfg;
}

} // namespace

TEST_CASE("zero weights give a zero embedding") {
    auto params = init_encoder(tiny_mlp());
    for (auto& w : params.weights) w.a.assign(w.a.size(), 0.0);
    auto r = embed(params, random_tensor(4, 4, 3, 1), EmbedMode::infer());
    for (double v : r.embedding) CHECK(v == 0.0);
}

TEST_CASE("random projection of a one-pixel gray image is half a column") {
    EncoderConfig cfg;
    cfg.variant = EncoderVariant::random_projection;
    cfg.input_w = 1;
    cfg.input_h = 1;
    cfg.input_c = 1;
    cfg.embed_dim = 6;
    cfg.init_seed = 3;
    auto params = init_encoder(cfg);
    REQUIRE(params.weights.size() == 1);
    REQUIRE(params.weights[0].cols == 1);

    auto r = embed(params, tensor_filled(1, 1, 1, 0.5), EmbedMode::infer());
    for (int i = 0; i < 6; ++i)
        CHECK(r.embedding[i] == doctest::Approx(params.weights[0](i, 0) * 0.5).epsilon(1e-15));
}

TEST_CASE("dropout probability zero makes train and infer agree") {
    auto params = init_encoder(tiny_mlp(0.0));
    auto x = random_tensor(4, 4, 3, 2);
    auto train = embed(params, x, EmbedMode::training(9));
    auto infer = embed(params, x, EmbedMode::infer());
    CHECK(train.embedding == infer.embedding);
    CHECK(train.trace.activations.size() == 1); // trace recorded in train mode
    CHECK(infer.trace.activations.empty());
}

TEST_CASE("dropout masks are pure functions of the seed") {
    auto params = init_encoder(tiny_mlp(0.5));
    auto x = random_tensor(4, 4, 3, 5);
    auto a = embed(params, x, EmbedMode::training(1234));
    auto b = embed(params, x, EmbedMode::training(1234));
    auto c = embed(params, x, EmbedMode::training(1235));
    CHECK(a.embedding == b.embedding);
    CHECK(a.trace.dropout_masks == b.trace.dropout_masks);
    CHECK(a.trace.dropout_masks != c.trace.dropout_masks);

    // masks are 0 or 1/(1-p)
    for (double m : a.trace.dropout_masks[0]) CHECK((m == 0.0 || m == 2.0));
}

TEST_CASE("embed validates input shape") {
    auto params = init_encoder(tiny_mlp());
    CHECK_THROWS_AS(embed(params, random_tensor(5, 4, 3, 1), EmbedMode::infer()), DataError);
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
    auto params = init_encoder(tiny_mlp(0.1));
    auto x = random_tensor(4, 4, 3, 7);
    auto r = embed(params, x, EmbedMode::training(4));
    std::vector<ForwardTrace> traces{r.trace};
    std::vector<Vec> d{Vec(5, 0.0)};
    auto grads = backward(params, traces, d);
    for (const auto& w : grads.d_weights)
        for (double v : w.a) CHECK(v == 0.0);
    for (const auto& b : grads.d_biases)
        for (double v : b) CHECK(v == 0.0);
}

TEST_CASE("single affine layer gradient is the outer product") {
    EncoderConfig cfg;
    cfg.variant = EncoderVariant::mlp;
    cfg.input_w = 3;
    cfg.input_h = 1;
    cfg.input_c = 1;
    cfg.hidden_sizes = {}; // input -> embedding directly
    cfg.embed_dim = 2;
    cfg.init_seed = 8;
    auto params = init_encoder(cfg);

    auto x = random_tensor(3, 1, 1, 3);
    auto r = embed(params, x, EmbedMode::training(0));
    Vec g{0.25, -1.5};
    std::vector<ForwardTrace> traces{r.trace};
    std::vector<Vec> d{g};
    auto grads = backward(params, traces, d);

    for (int row = 0; row < 2; ++row) {
        CHECK(grads.d_biases[0][row] == g[row]);
        for (int col = 0; col < 3; ++col) {
            double x_std = (x.data[col] - params.standardize_mean) * params.standardize_scale;
            CHECK(grads.d_weights[0](row, col) == doctest::Approx(g[row] * x_std).epsilon(1e-15));
        }
    }
}

TEST_CASE("backward matches finite differences through ReLU and dropout") {
    // loss = sum(embedding); dropout masks are seed-frozen so the FD
    // perturbation sees the same network
    auto cfg = tiny_mlp(0.25);
    auto params = init_encoder(cfg);
    auto x = random_tensor(4, 4, 3, 11);
    const uint64_t drop_seed = 77;

    auto loss_of = [&](const EncoderParams& p) {
        auto r = embed(p, x, EmbedMode::training(drop_seed));
        double s = 0.0;
        for (double v : r.embedding) s += v;
        return s;
    };

    auto r = embed(params, x, EmbedMode::training(drop_seed));
    std::vector<ForwardTrace> traces{r.trace};
    std::vector<Vec> d{Vec(r.embedding.size(), 1.0)};
    auto grads = backward(params, traces, d);

    const double eps = 1e-6;
    for (size_t l = 0; l < params.weights.size(); ++l) {
        for (size_t i = 0; i < params.weights[l].a.size(); i += 7) { // stride keeps it quick
            EncoderParams p = params;
            p.weights[l].a[i] += eps;
            double up = loss_of(p);
            p.weights[l].a[i] -= 2 * eps;
            double down = loss_of(p);
            double fd = (up - down) / (2 * eps);
            CHECK(grads.d_weights[l].a[i] ==
                  doctest::Approx(fd).epsilon(1e-6).scale(std::max(1.0, std::abs(fd))));
        }
    }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    fixtures::TempDir tmp("ckpt");
    auto params = init_encoder(tiny_mlp(0.1));
    save_checkpoint(params, tmp.path() / "a.ckpt");
    auto loaded = load_checkpoint(tmp.path() / "a.ckpt");
    CHECK(loaded == params);
    CHECK(encoder_to_json(loaded) == encoder_to_json(params));
}

TEST_CASE("checkpoint loading validates content") {
    fixtures::TempDir tmp("ckpt");
    CHECK_THROWS_AS(load_checkpoint(tmp.path() / "missing.ckpt"), DataError);
    fixtures::write_text(tmp.path() / "bad.ckpt", "{\"format_version\": 9}");
    CHECK_THROWS_AS(load_checkpoint(tmp.path() / "bad.ckpt"), DataError);
    fixtures::write_text(tmp.path() / "junk.ckpt", "not json");
    CHECK_THROWS_AS(load_checkpoint(tmp.path() / "junk.ckpt"), DataError);
}

TEST_CASE("default initialization gives finite nonzero embeddings") {
    auto params = init_encoder(tiny_mlp(0.0));
    for (uint64_t s : {1ull, 2ull, 3ull}) {
        auto r = embed(params, random_tensor(4, 4, 3, s), EmbedMode::infer());
        double norm_sq = 0.0;
        for (double v : r.embedding) {
            CHECK(std::isfinite(v));
            norm_sq += v * v;
        }
        CHECK(norm_sq > 0.0);
    }
}

TEST_CASE("initialization is deterministic per seed") {
    auto a = init_encoder(tiny_mlp(0.1));
    auto b = init_encoder(tiny_mlp(0.1));
    CHECK(a == b);
    auto cfg = tiny_mlp(0.1);
    cfg.init_seed = 22;
    CHECK(init_encoder(cfg) != a);
}
