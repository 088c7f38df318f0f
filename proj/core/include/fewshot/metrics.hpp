#pragma once

#include <string>
#include <utility>
#include <vector>

namespace fewshot {

/// Square multi-class confusion matrix; rows are true classes, columns
/// predicted.
struct ConfusionMatrix {
    std::vector<std::string> classes;
    std::vector<std::vector<int64_t>> counts;

    explicit ConfusionMatrix(std::vector<std::string> cls = {});
    void add(int true_idx, int predicted_idx, int64_t n = 1);
    int64_t total() const;
    int64_t diagonal() const;
    int index_of(const std::string& cls) const; // -1 when absent

    bool operator==(const ConfusionMatrix&) const = default;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double specificity = 0.0;
    // Zero-denominator cells report 0 with the matching flag cleared.
    bool precision_defined = true;
    bool recall_defined = true;
    bool f1_defined = true;
    bool specificity_defined = true;

    bool operator==(const ClassMetrics&) const = default;
};

struct ClassificationReport {
    std::vector<std::string> classes;
    std::vector<ClassMetrics> per_class;
    double macro_f1 = 0.0; // unweighted mean of per-class f1

    bool operator==(const ClassificationReport&) const = default;
};

/// One-vs-rest precision/recall/F1/specificity per class, plus macro F1.
ClassificationReport classification_report(const ConfusionMatrix& cm);

enum class CurveKind { pr, roc };

const char* to_string(CurveKind k);

struct CurvePoints {
    CurveKind kind = CurveKind::pr;
    std::vector<std::pair<double, double>> points; // PR: (recall, precision); ROC: (fpr, tpr)
    double summary = 0.0;                          // AP or AUC

    bool operator==(const CurvePoints&) const = default;
};

struct ScoredLabel {
    double score = 0.0;
    bool positive = false;
};

/// Precision-recall curve over descending score thresholds; tied scores
/// collapse into a single threshold. Summary is the step-wise average
/// precision sum((R_i - R_{i-1}) * P_i). Throws DataError unless the input
/// has at least one positive and one negative.
CurvePoints pr_curve(const std::vector<ScoredLabel>& scores);

/// ROC curve with (0,0) and (1,1) endpoints and trapezoidal AUC; tied
/// scores collapse into one threshold, which yields the Mann-Whitney tie
/// correction. Same precondition as pr_curve.
CurvePoints roc_curve(const std::vector<ScoredLabel>& scores);

} // namespace fewshot
