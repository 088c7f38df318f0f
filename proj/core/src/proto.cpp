#include "fewshot/proto.hpp"

#include <algorithm>
#include <cmath>

#include "fewshot/error.hpp"

namespace fewshot {

namespace {

double norm(const Vec& v) { return std::sqrt(dot(v, v)); }

} // namespace

const char* to_string(SimilarityMetric m) {
    return m == SimilarityMetric::cosine ? "cosine" : "euclidean";
}

SimilarityMetric metric_from_string(const std::string& s) {
    if (s == "cosine") return SimilarityMetric::cosine;
    if (s == "euclidean") return SimilarityMetric::euclidean;
    throw ConfigError("unknown similarity metric: " + s);
}

PrototypeSet compute_prototypes(const std::vector<std::vector<Vec>>& support_embeddings,
                                const std::vector<std::string>& class_names) {
    if (support_embeddings.size() != class_names.size())
        throw DataError("compute_prototypes: class name count does not match embeddings");

    PrototypeSet protos;
    protos.class_names = class_names;
    size_t dim = 0;
    for (size_t c = 0; c < support_embeddings.size(); ++c) {
        const auto& members = support_embeddings[c];
        if (members.empty())
            throw DataError("compute_prototypes: class `" + class_names[c] +
                            "` has no support embeddings");
        if (dim == 0) dim = members[0].size();
        Vec mean(dim, 0.0);
        for (const auto& e : members) {
            if (e.size() != dim)
                throw DataError("compute_prototypes: embedding dimension mismatch in class `" +
                                class_names[c] + "`");
            for (size_t i = 0; i < dim; ++i) mean[i] += e[i];
        }
        const double inv = 1.0 / static_cast<double>(members.size());
        for (auto& v : mean) v *= inv;
        protos.prototypes.push_back(std::move(mean));
    }
    return protos;
}

double cosine_similarity(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DataError("cosine_similarity: dimension mismatch");
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0)
        throw NumericError("cosine_similarity: zero-norm vector");
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double similarity(const Vec& query, const Vec& prototype, SimilarityMetric metric) {
    if (metric == SimilarityMetric::cosine) return cosine_similarity(query, prototype);
    if (query.size() != prototype.size()) throw DataError("similarity: dimension mismatch");
    double d2 = 0.0;
    for (size_t i = 0; i < query.size(); ++i) {
        double d = query[i] - prototype[i];
        d2 += d * d;
    }
    return -d2;
}

std::pair<int, Vec> classify(const Vec& query_embedding, const PrototypeSet& protos,
                             SimilarityMetric metric) {
    if (protos.prototypes.empty()) throw DataError("classify: empty prototype set");
    Vec scores(protos.prototypes.size());
    for (size_t c = 0; c < protos.prototypes.size(); ++c)
        scores[c] = similarity(query_embedding, protos.prototypes[c], metric);
    int best = 0;
    for (size_t c = 1; c < scores.size(); ++c)
        if (scores[c] > scores[best]) best = static_cast<int>(c); // ties keep the lowest label
    return {best, std::move(scores)};
}

EpisodeLogits compute_logits(const std::vector<Vec>& query_embeddings, const PrototypeSet& protos,
                             SimilarityMetric metric, double temperature) {
    if (temperature <= 0.0) throw ConfigError("temperature must be positive");
    EpisodeLogits out;
    out.temperature = temperature;
    out.values = Matrix(static_cast<int>(query_embeddings.size()), protos.n_way());
    for (size_t q = 0; q < query_embeddings.size(); ++q)
        for (int c = 0; c < protos.n_way(); ++c)
            out.values(static_cast<int>(q), c) =
                temperature * similarity(query_embeddings[q], protos.prototypes[c], metric);
    return out;
}

Vec softmax_row(const Matrix& logits, int row) {
    Vec p(static_cast<size_t>(logits.cols));
    double mx = logits(row, 0);
    for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, logits(row, c));
    double sum = 0.0;
    for (int c = 0; c < logits.cols; ++c) {
        p[c] = std::exp(logits(row, c) - mx);
        sum += p[c];
    }
    for (auto& v : p) v /= sum;
    return p;
}

std::pair<double, Matrix> episode_loss(const EpisodeLogits& logits,
                                       const std::vector<int>& true_local_labels) {
    const Matrix& z = logits.values;
    if (static_cast<int>(true_local_labels.size()) != z.rows)
        throw DataError("episode_loss: one label per query row required");

    const int n_queries = z.rows;
    Matrix d(z.rows, z.cols);
    double loss = 0.0;
    for (int q = 0; q < n_queries; ++q) {
        int label = true_local_labels[q];
        if (label < 0 || label >= z.cols)
            throw DataError("episode_loss: label " + std::to_string(label) + " out of range");
        Vec p = softmax_row(z, q);
        loss += -std::log(std::max(p[label], 1e-300));
        for (int c = 0; c < z.cols; ++c)
            d(q, c) = (p[c] - (c == label ? 1.0 : 0.0)) / n_queries;
    }
    return {loss / n_queries, std::move(d)};
}

EmbeddingGrads loss_backward_to_embeddings(const std::vector<std::vector<Vec>>& support_embeddings,
                                           const std::vector<Vec>& query_embeddings,
                                           const PrototypeSet& protos, SimilarityMetric metric,
                                           double temperature, const Matrix& d_logits) {
    if (d_logits.rows != static_cast<int>(query_embeddings.size()) ||
        d_logits.cols != protos.n_way())
        throw DataError("loss_backward_to_embeddings: d_logits shape mismatch");

    const size_t dim = query_embeddings.empty() ? 0 : query_embeddings[0].size();
    EmbeddingGrads grads;
    grads.d_query.assign(query_embeddings.size(), Vec(dim, 0.0));
    std::vector<Vec> d_protos(protos.prototypes.size(), Vec(dim, 0.0));

    for (size_t q = 0; q < query_embeddings.size(); ++q) {
        const Vec& qv = query_embeddings[q];
        for (int c = 0; c < protos.n_way(); ++c) {
            const double g = temperature * d_logits(static_cast<int>(q), c);
            if (g == 0.0) continue;
            const Vec& pv = protos.prototypes[c];
            if (metric == SimilarityMetric::cosine) {
                const double nq = norm(qv);
                const double np = norm(pv);
                if (nq == 0.0 || np == 0.0)
                    throw NumericError("loss_backward_to_embeddings: zero-norm vector");
                const double s = dot(qv, pv);
                const double inv = 1.0 / (nq * np);
                const double sq = s / (nq * nq);
                const double sp = s / (np * np);
                for (size_t i = 0; i < dim; ++i) {
                    grads.d_query[q][i] += g * inv * (pv[i] - sq * qv[i]);
                    d_protos[c][i] += g * inv * (qv[i] - sp * pv[i]);
                }
            } else {
                for (size_t i = 0; i < dim; ++i) {
                    const double diff = qv[i] - pv[i];
                    grads.d_query[q][i] += g * (-2.0 * diff);
                    d_protos[c][i] += g * (2.0 * diff);
                }
            }
        }
    }

    // prototype mean: every support member receives dL/dp / K
    grads.d_support.resize(support_embeddings.size());
    for (size_t c = 0; c < support_embeddings.size(); ++c) {
        const size_t k = support_embeddings[c].size();
        grads.d_support[c].assign(k, Vec(dim, 0.0));
        const double inv_k = 1.0 / static_cast<double>(k);
        for (size_t m = 0; m < k; ++m)
            for (size_t i = 0; i < dim; ++i)
                grads.d_support[c][m][i] = d_protos[c][i] * inv_k;
    }
    return grads;
}

} // namespace fewshot
