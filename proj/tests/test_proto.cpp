#include <doctest.h>

#include <cmath>

#include "fewshot/error.hpp"
#include "fewshot/proto.hpp"
#include "fewshot/rng.hpp"

using namespace fewshot;

namespace {

Vec random_vec(Rng& rng, size_t dim) {
    Vec v(dim);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

// brute-force elementwise mean, summed in reverse order
Vec oracle_mean(const std::vector<Vec>& vs) {
    Vec m(vs[0].size(), 0.0);
    for (auto it = vs.rbegin(); it != vs.rend(); ++it)
        for (size_t i = 0; i < m.size(); ++i) m[i] += (*it)[i];
    for (auto& x : m) x /= static_cast<double>(vs.size());
    return m;
}

// independent double-loop nearest-prototype oracle
int oracle_classify(const Vec& q, const std::vector<Vec>& protos, SimilarityMetric metric) {
    int best = -1;
    double best_score = 0.0;
    for (size_t c = 0; c < protos.size(); ++c) {
        double score;
        if (metric == SimilarityMetric::cosine) {
            double dot = 0, nq = 0, np = 0;
            for (size_t i = 0; i < q.size(); ++i) {
                dot += q[i] * protos[c][i];
                nq += q[i] * q[i];
                np += protos[c][i] * protos[c][i];
            }
            score = dot / (std::sqrt(nq) * std::sqrt(np));
        } else {
            double d2 = 0;
            for (size_t i = 0; i < q.size(); ++i)
                d2 += (q[i] - protos[c][i]) * (q[i] - protos[c][i]);
            score = -d2;
        }
        if (best < 0 || score > best_score) {
            best = static_cast<int>(c);
            best_score = score;
        }
    }
    return best;
}

} // namespace

TEST_CASE("prototype of a single support is that embedding") {
    auto protos = compute_prototypes({{Vec{1.0, 2.0, 3.0}}}, {"only"});
    CHECK(protos.prototypes[0] == Vec{1.0, 2.0, 3.0});
}

TEST_CASE("prototype is the arithmetic mean") {
    auto protos = compute_prototypes({{Vec{1.0, 0.0}, Vec{0.0, 1.0}}}, {"c"});
    CHECK(protos.prototypes[0] == Vec{0.5, 0.5});
}

TEST_CASE("prototype matches the brute-force mean oracle on random vectors") {
    Rng rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Vec> members;
        for (int i = 0; i < 5; ++i) members.push_back(random_vec(rng, 64));
        auto protos = compute_prototypes({members}, {"c"});
        auto expect = oracle_mean(members);
        for (size_t i = 0; i < 64; ++i)
            CHECK(protos.prototypes[0][i] == doctest::Approx(expect[i]).epsilon(1e-15));
    }
}

TEST_CASE("prototype order follows episode class order and permutation barely matters") {
    Rng rng(2);
    std::vector<Vec> members;
    for (int i = 0; i < 7; ++i) members.push_back(random_vec(rng, 16));
    auto a = compute_prototypes({members}, {"c"});
    std::vector<Vec> shuffled{members[3], members[0], members[6], members[2],
                              members[5], members[1], members[4]};
    auto b = compute_prototypes({shuffled}, {"c"});
    for (size_t i = 0; i < 16; ++i)
        CHECK(a.prototypes[0][i] == doctest::Approx(b.prototypes[0][i]).epsilon(1e-12));
}

TEST_CASE("compute_prototypes rejects empty classes and ragged dims") {
    CHECK_THROWS_AS(compute_prototypes({{}}, {"c"}), DataError);
    CHECK_THROWS_AS(compute_prototypes({{Vec{1.0, 2.0}, Vec{1.0}}}, {"c"}), DataError);
}

TEST_CASE("cosine similarity basics") {
    CHECK(cosine_similarity({3.0, 4.0}, {3.0, 4.0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_similarity({1.0, 0.0}, {0.0, 1.0}) == 0.0);
    CHECK(cosine_similarity({1.0, 1.0}, {2.0, 2.0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_similarity({1.0, 0.0}, {-1.0, 0.0}) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK_THROWS_AS(cosine_similarity({0.0, 0.0}, {1.0, 0.0}), NumericError);
    CHECK_THROWS_AS(cosine_similarity({1.0, 0.0}, {0.0, 0.0}), NumericError);
}

TEST_CASE("classify picks the nearest prototype") {
    PrototypeSet protos;
    protos.class_names = {"a", "b", "c"};
    protos.prototypes = {Vec{1.0, 0.0}, Vec{0.0, 1.0}, Vec{0.7, 0.7}};

    SUBCASE("query equal to a prototype") {
        auto [label, scores] = classify(Vec{0.7, 0.7}, protos, SimilarityMetric::cosine);
        CHECK(label == 2);
        CHECK(scores[2] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("geometry") {
        auto [label, scores] = classify(Vec{0.9, 0.1}, protos, SimilarityMetric::cosine);
        CHECK(label == 0);
    }
    SUBCASE("scale invariance of the decision") {
        Vec q{0.4, 0.25};
        auto [l1, s1] = classify(q, protos, SimilarityMetric::cosine);
        Vec scaled{q[0] * 73.0, q[1] * 73.0};
        auto [l2, s2] = classify(scaled, protos, SimilarityMetric::cosine);
        CHECK(l1 == l2);
    }
    SUBCASE("ties break to the lowest label") {
        PrototypeSet tie;
        tie.class_names = {"a", "b"};
        tie.prototypes = {Vec{1.0, 0.0}, Vec{1.0, 0.0}};
        auto [label, scores] = classify(Vec{0.5, 0.5}, tie, SimilarityMetric::cosine);
        CHECK(label == 0);
    }
}

TEST_CASE("classify agrees with the double-loop oracle on random episodes") {
    Rng rng(3);
    for (int ep = 0; ep < 20; ++ep) {
        std::vector<Vec> protos_raw;
        for (int c = 0; c < 5; ++c) protos_raw.push_back(random_vec(rng, 64));
        PrototypeSet protos;
        protos.prototypes = protos_raw;
        protos.class_names = {"0", "1", "2", "3", "4"};
        for (int q = 0; q < 10; ++q) {
            Vec query = random_vec(rng, 64);
            for (auto metric : {SimilarityMetric::cosine, SimilarityMetric::euclidean}) {
                auto [label, scores] = classify(query, protos, metric);
                CHECK(label == oracle_classify(query, protos_raw, metric));
                for (size_t c = 0; c < 5; ++c) {
                    double oracle_score =
                        metric == SimilarityMetric::cosine
                            ? cosine_similarity(query, protos_raw[c])
                            : -[&] {
                                  double d2 = 0;
                                  for (size_t i = 0; i < query.size(); ++i)
                                      d2 += (query[i] - protos_raw[c][i]) *
                                            (query[i] - protos_raw[c][i]);
                                  return d2;
                              }();
                    CHECK(scores[c] == doctest::Approx(oracle_score).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("euclidean and cosine agree on unit-norm instances") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        PrototypeSet protos;
        protos.class_names = {"0", "1", "2", "3"};
        for (int c = 0; c < 4; ++c) {
            Vec v = random_vec(rng, 8);
            double n = std::sqrt(dot(v, v));
            for (auto& x : v) x /= n;
            protos.prototypes.push_back(v);
        }
        Vec q = random_vec(rng, 8);
        double n = std::sqrt(dot(q, q));
        for (auto& x : q) x /= n;

        auto [lc, sc] = classify(q, protos, SimilarityMetric::cosine);
        auto [le, se] = classify(q, protos, SimilarityMetric::euclidean);
        CHECK(lc == le);
    }
}

TEST_CASE("uniform logits lose ln(n_way)") {
    EpisodeLogits logits;
    logits.temperature = 10.0;
    logits.values = Matrix(4, 5, 0.37); // any constant row is uniform
    auto [loss, d] = episode_loss(logits, {0, 1, 2, 3});
    CHECK(loss == doctest::Approx(std::log(5.0)).epsilon(1e-12));

    // gradient rows: (softmax - onehot) / n_queries
    for (int q = 0; q < 4; ++q)
        for (int c = 0; c < 5; ++c) {
            double expect = (0.2 - (c == q ? 1.0 : 0.0)) / 4.0;
            CHECK(d(q, c) == doctest::Approx(expect).epsilon(1e-12));
        }
}

TEST_CASE("saturated correct logit drives the loss to zero") {
    EpisodeLogits logits;
    logits.values = Matrix(1, 5, 0.0);
    logits.values(0, 2) = 200.0;
    auto [loss, d] = episode_loss(logits, {2});
    CHECK(loss < 1e-12);
}

TEST_CASE("episode_loss validates labels") {
    EpisodeLogits logits;
    logits.values = Matrix(2, 3, 0.0);
    CHECK_THROWS_AS(episode_loss(logits, {0}), DataError);
    CHECK_THROWS_AS(episode_loss(logits, {0, 3}), DataError);
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(23);
    Matrix m(6, 5);
    for (auto& v : m.a) v = rng.uniform(-30.0, 30.0);
    for (int q = 0; q < 6; ++q) {
        Vec p = softmax_row(m, q);
        double sum = 0;
        for (double v : p) sum += v;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("d_logits of episode_loss matches finite differences") {
    Rng rng(29);
    Matrix z(10, 5);
    for (auto& v : z.a) v = rng.uniform(-3.0, 3.0);
    std::vector<int> labels;
    for (int q = 0; q < 10; ++q) labels.push_back(static_cast<int>(rng.next_below(5)));

    EpisodeLogits logits;
    logits.values = z;
    auto [loss, d] = episode_loss(logits, labels);

    const double eps = 1e-6;
    for (int q = 0; q < 10; ++q) {
        for (int c = 0; c < 5; ++c) {
            EpisodeLogits up = logits, down = logits;
            up.values(q, c) += eps;
            down.values(q, c) -= eps;
            double fd =
                (episode_loss(up, labels).first - episode_loss(down, labels).first) / (2 * eps);
            CHECK(d(q, c) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("zero d_logits produce zero embedding gradients") {
    Rng rng(31);
    std::vector<std::vector<Vec>> support(3);
    for (auto& cls : support)
        for (int i = 0; i < 2; ++i) cls.push_back(random_vec(rng, 6));
    std::vector<Vec> queries{random_vec(rng, 6), random_vec(rng, 6)};
    auto protos = compute_prototypes(support, {"a", "b", "c"});

    Matrix d_logits(2, 3, 0.0);
    auto grads = loss_backward_to_embeddings(support, queries, protos, SimilarityMetric::cosine,
                                             10.0, d_logits);
    for (const auto& cls : grads.d_support)
        for (const auto& g : cls)
            for (double v : g) CHECK(v == 0.0);
    for (const auto& g : grads.d_query)
        for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("cosine gradient w.r.t. the query is orthogonal to the query") {
    Rng rng(37);
    Vec q = random_vec(rng, 12);
    std::vector<std::vector<Vec>> support{{q}}; // prototype aligned with q
    auto protos = compute_prototypes(support, {"a"});

    Matrix d_logits(1, 1);
    d_logits(0, 0) = 1.0;
    auto grads = loss_backward_to_embeddings(support, {q}, protos, SimilarityMetric::cosine, 1.0,
                                             d_logits);
    CHECK(std::abs(dot(grads.d_query[0], q)) < 1e-12);
}

TEST_CASE("embedding gradients match finite differences") {
    Rng rng(41);
    const int n_way = 3, k_shot = 2, n_query = 4, dim = 6;
    const double temperature = 10.0;

    for (auto metric : {SimilarityMetric::cosine, SimilarityMetric::euclidean}) {
        std::vector<std::vector<Vec>> support(n_way);
        for (auto& cls : support)
            for (int i = 0; i < k_shot; ++i) cls.push_back(random_vec(rng, dim));
        std::vector<Vec> queries;
        std::vector<int> labels;
        for (int q = 0; q < n_query; ++q) {
            queries.push_back(random_vec(rng, dim));
            labels.push_back(static_cast<int>(rng.next_below(n_way)));
        }

        auto loss_of = [&](const std::vector<std::vector<Vec>>& sup,
                           const std::vector<Vec>& qs) {
            auto protos = compute_prototypes(sup, {"a", "b", "c"});
            auto logits = compute_logits(qs, protos, metric, temperature);
            return episode_loss(logits, labels).first;
        };

        auto protos = compute_prototypes(support, {"a", "b", "c"});
        auto logits = compute_logits(queries, protos, metric, temperature);
        auto [loss, d_logits] = episode_loss(logits, labels);
        auto grads = loss_backward_to_embeddings(support, queries, protos, metric, temperature,
                                                 d_logits);

        const double eps = 1e-5;
        auto check_fd = [&](double analytic, double fd) {
            const double rel =
                std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-6});
            CHECK(rel < 1e-4);
        };

        for (int c = 0; c < n_way; ++c)
            for (int m = 0; m < k_shot; ++m)
                for (int i = 0; i < dim; ++i) {
                    auto sup = support;
                    sup[c][m][i] += eps;
                    double up = loss_of(sup, queries);
                    sup[c][m][i] -= 2 * eps;
                    double down = loss_of(sup, queries);
                    check_fd(grads.d_support[c][m][i], (up - down) / (2 * eps));
                }
        for (int q = 0; q < n_query; ++q)
            for (int i = 0; i < dim; ++i) {
                auto qs = queries;
                qs[q][i] += eps;
                double up = loss_of(support, qs);
                qs[q][i] -= 2 * eps;
                double down = loss_of(support, qs);
                check_fd(grads.d_query[q][i], (up - down) / (2 * eps));
            }
    }
}
