#include <benchmark/benchmark.h>

#include "fewshot/clahe.hpp"
#include "fewshot/encoder.hpp"
#include "fewshot/preprocess.hpp"
#include "fewshot/proto.hpp"
#include "fewshot/rng.hpp"
#include "fewshot/sampler.hpp"
#include "fewshot/synthetic.hpp"

using namespace fewshot;

namespace {

RasterImage bench_image(int size, int channels) {
    RasterImage img(size, size, channels);
    Rng rng(1);
    for (auto& v : img.data) v = static_cast<uint8_t>(rng.next_below(256));
    return img;
}

void BM_ClaheGray(benchmark::State& state) {
    auto img = bench_image(static_cast<int>(state.range(0)), 1);
    ClaheConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(clahe(img, cfg));
    state.SetItemsProcessed(state.iterations() * img.pixel_count());
}
BENCHMARK(BM_ClaheGray)->Arg(256)->Arg(1024);

void BM_ClaheColor(benchmark::State& state) {
    auto img = bench_image(static_cast<int>(state.range(0)), 3);
    ClaheConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(clahe(img, cfg));
    state.SetItemsProcessed(state.iterations() * img.pixel_count());
}
BENCHMARK(BM_ClaheColor)->Arg(256)->Arg(1024);

void BM_ResizeBilinear(benchmark::State& state) {
    auto img = bench_image(2048, 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(resize_bilinear(img, static_cast<int>(state.range(0)),
                                                 static_cast<int>(state.range(0))));
}
BENCHMARK(BM_ResizeBilinear)->Arg(224)->Arg(32);

void BM_EmbedForward(benchmark::State& state) {
    EncoderConfig cfg;
    cfg.init_seed = 3;
    auto params = init_encoder(cfg);
    ImageTensor x(32, 32, 3);
    Rng rng(2);
    for (auto& v : x.data) v = rng.next_double();
    for (auto _ : state) benchmark::DoNotOptimize(embed(params, x, EmbedMode::infer()));
}
BENCHMARK(BM_EmbedForward);

void BM_EmbedBackward(benchmark::State& state) {
    EncoderConfig cfg;
    cfg.init_seed = 3;
    auto params = init_encoder(cfg);
    ImageTensor x(32, 32, 3);
    Rng rng(2);
    for (auto& v : x.data) v = rng.next_double();

    std::vector<ForwardTrace> traces;
    std::vector<Vec> d_embs;
    for (int i = 0; i < 35; ++i) {
        traces.push_back(embed(params, x, EmbedMode::training(i)).trace);
        d_embs.emplace_back(static_cast<size_t>(cfg.embed_dim), 0.01);
    }
    for (auto _ : state) benchmark::DoNotOptimize(backward(params, traces, d_embs));
}
BENCHMARK(BM_EmbedBackward);

void BM_SampleEpisode(benchmark::State& state) {
    PoolView view;
    for (int c = 0; c < 10; ++c) {
        view.classes.push_back("c" + std::to_string(c));
        view.ids.emplace_back();
        for (int i = 0; i < 200; ++i)
            view.ids.back().push_back(view.classes.back() + "_" + std::to_string(i));
    }
    EpisodeSpec spec;
    uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(sample_episode(view, spec, seed++));
}
BENCHMARK(BM_SampleEpisode);

void BM_ClassifyQuery(benchmark::State& state) {
    Rng rng(4);
    PrototypeSet protos;
    for (int c = 0; c < 5; ++c) {
        Vec p(64);
        for (auto& v : p) v = rng.uniform(-1.0, 1.0);
        protos.prototypes.push_back(std::move(p));
        protos.class_names.push_back(std::to_string(c));
    }
    Vec q(64);
    for (auto& v : q) v = rng.uniform(-1.0, 1.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(classify(q, protos, SimilarityMetric::cosine));
}
BENCHMARK(BM_ClassifyQuery);

void BM_SyntheticImage(benchmark::State& state) {
    SyntheticConfig cfg;
    uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(synthetic_image(cfg, 3, seed++));
}
BENCHMARK(BM_SyntheticImage);

} // namespace

BENCHMARK_MAIN();
