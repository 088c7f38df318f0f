#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fewshot/linalg.hpp"

namespace fewshot {

enum class SimilarityMetric { cosine, euclidean };

const char* to_string(SimilarityMetric m);
SimilarityMetric metric_from_string(const std::string& s);

/// Class centroids in embedding space, parallel to their global class names.
struct PrototypeSet {
    std::vector<Vec> prototypes;
    std::vector<std::string> class_names;

    int n_way() const { return static_cast<int>(prototypes.size()); }
};

/// tau-scaled similarity matrix, one row per query, one column per class.
struct EpisodeLogits {
    Matrix values; // n_query_total x n_way
    double temperature = 1.0;
};

/// p_c = mean of the class's support embeddings, in episode class order.
/// Throws DataError on an empty class or mismatched dimensions.
PrototypeSet compute_prototypes(const std::vector<std::vector<Vec>>& support_embeddings,
                                const std::vector<std::string>& class_names);

/// a.b / (|a||b|), clamped to [-1,1]. Throws NumericError if either norm is
/// zero; never silently returns 0.
double cosine_similarity(const Vec& a, const Vec& b);

/// Similarity of a query to one prototype under `metric`: the cosine, or
/// the negated squared euclidean distance (so argmax always ranks best
/// first).
double similarity(const Vec& query, const Vec& prototype, SimilarityMetric metric);

/// Nearest-prototype decision. Returns (argmax local label, score vector);
/// ties break to the lowest label.
std::pair<int, Vec> classify(const Vec& query_embedding, const PrototypeSet& protos,
                             SimilarityMetric metric);

/// logits[q][c] = temperature * similarity(query q, prototype c).
EpisodeLogits compute_logits(const std::vector<Vec>& query_embeddings,
                             const PrototypeSet& protos, SimilarityMetric metric,
                             double temperature);

/// Row-wise softmax with max subtraction.
Vec softmax_row(const Matrix& logits, int row);

/// Mean over queries of -log softmax(logits)[label], and its gradient
/// d_logits = (softmax - onehot) / n_queries. Throws DataError on an
/// out-of-range label.
std::pair<double, Matrix> episode_loss(const EpisodeLogits& logits,
                                       const std::vector<int>& true_local_labels);

struct EmbeddingGrads {
    std::vector<std::vector<Vec>> d_support; // mirrors support layout
    std::vector<Vec> d_query;
};

/// Chain rule from d_logits back to the episode's embeddings.
///
/// Cosine path, with s = q.p, nq = |q|, np = |p|:
///   d cos/dq = p/(nq*np) - s*q/(nq^3*np)
///   d cos/dp = q/(nq*np) - s*p/(np^3*nq)
/// Euclidean path (logit = -tau*|q-p|^2):
///   d/dq = -2*tau*(q-p),  d/dp = +2*tau*(q-p)
/// Prototype gradients flow to every support member: dL/d support_i =
/// (1/K_c) dL/dp_c. Throws NumericError on a zero-norm vector in the
/// cosine path.
EmbeddingGrads loss_backward_to_embeddings(const std::vector<std::vector<Vec>>& support_embeddings,
                                           const std::vector<Vec>& query_embeddings,
                                           const PrototypeSet& protos,
                                           SimilarityMetric metric, double temperature,
                                           const Matrix& d_logits);

} // namespace fewshot
