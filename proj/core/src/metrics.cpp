#include "fewshot/metrics.hpp"

#include <algorithm>

#include "fewshot/error.hpp"

namespace fewshot {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> cls) : classes(std::move(cls)) {
    counts.assign(classes.size(), std::vector<int64_t>(classes.size(), 0));
}

void ConfusionMatrix::add(int true_idx, int predicted_idx, int64_t n) {
    counts.at(true_idx).at(predicted_idx) += n;
}

int64_t ConfusionMatrix::total() const {
    int64_t t = 0;
    for (const auto& row : counts)
        for (int64_t v : row) t += v;
    return t;
}

int64_t ConfusionMatrix::diagonal() const {
    int64_t t = 0;
    for (size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
    return t;
}

int ConfusionMatrix::index_of(const std::string& cls) const {
    for (size_t i = 0; i < classes.size(); ++i)
        if (classes[i] == cls) return static_cast<int>(i);
    return -1;
}

ClassificationReport classification_report(const ConfusionMatrix& cm) {
    if (cm.classes.empty()) throw DataError("classification_report: empty confusion matrix");

    const size_t n = cm.classes.size();
    const int64_t total = cm.total();
    ClassificationReport report;
    report.classes = cm.classes;

    double f1_sum = 0.0;
    for (size_t c = 0; c < n; ++c) {
        int64_t tp = cm.counts[c][c];
        int64_t fn = 0, fp = 0;
        for (size_t j = 0; j < n; ++j) {
            if (j == c) continue;
            fn += cm.counts[c][j];
            fp += cm.counts[j][c];
        }
        int64_t tn = total - tp - fn - fp;

        ClassMetrics m;
        if (tp + fp > 0)
            m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        else
            m.precision_defined = false;
        if (tp + fn > 0)
            m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
        else
            m.recall_defined = false;
        if (m.precision + m.recall > 0.0)
            m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        else
            m.f1_defined = false;
        if (tn + fp > 0)
            m.specificity = static_cast<double>(tn) / static_cast<double>(tn + fp);
        else
            m.specificity_defined = false;

        f1_sum += m.f1;
        report.per_class.push_back(m);
    }
    report.macro_f1 = f1_sum / static_cast<double>(n);
    return report;
}

const char* to_string(CurveKind k) { return k == CurveKind::pr ? "pr" : "roc"; }

namespace {

struct ThresholdCounts {
    double threshold;
    int64_t tp; // cumulative at-or-above this threshold
    int64_t fp;
};

// Cumulative positive/negative counts per distinct score, descending.
std::vector<ThresholdCounts> threshold_sweep(const std::vector<ScoredLabel>& scores,
                                             int64_t& n_pos, int64_t& n_neg) {
    n_pos = n_neg = 0;
    std::vector<ScoredLabel> sorted = scores;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });

    std::vector<ThresholdCounts> sweep;
    int64_t tp = 0, fp = 0;
    size_t i = 0;
    while (i < sorted.size()) {
        const double t = sorted[i].score;
        while (i < sorted.size() && sorted[i].score == t) {
            if (sorted[i].positive)
                ++tp;
            else
                ++fp;
            ++i;
        }
        sweep.push_back({t, tp, fp});
    }
    if (!sweep.empty()) {
        n_pos = sweep.back().tp;
        n_neg = sweep.back().fp;
    }
    return sweep;
}

void require_both_classes(int64_t n_pos, int64_t n_neg, const char* what) {
    if (n_pos == 0 || n_neg == 0)
        throw DataError(std::string(what) + ": need at least one positive and one negative score");
}

} // namespace

CurvePoints pr_curve(const std::vector<ScoredLabel>& scores) {
    int64_t n_pos = 0, n_neg = 0;
    auto sweep = threshold_sweep(scores, n_pos, n_neg);
    require_both_classes(n_pos, n_neg, "pr_curve");

    CurvePoints out;
    out.kind = CurveKind::pr;
    double ap = 0.0;
    double prev_recall = 0.0;
    for (const auto& s : sweep) {
        const double recall = static_cast<double>(s.tp) / static_cast<double>(n_pos);
        const double precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
        out.points.emplace_back(recall, precision);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    out.summary = ap;
    return out;
}

CurvePoints roc_curve(const std::vector<ScoredLabel>& scores) {
    int64_t n_pos = 0, n_neg = 0;
    auto sweep = threshold_sweep(scores, n_pos, n_neg);
    require_both_classes(n_pos, n_neg, "roc_curve");

    CurvePoints out;
    out.kind = CurveKind::roc;
    out.points.emplace_back(0.0, 0.0);
    double auc = 0.0;
    double prev_fpr = 0.0, prev_tpr = 0.0;
    for (const auto& s : sweep) {
        const double tpr = static_cast<double>(s.tp) / static_cast<double>(n_pos);
        const double fpr = static_cast<double>(s.fp) / static_cast<double>(n_neg);
        out.points.emplace_back(fpr, tpr);
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    out.summary = auc;
    return out;
}

} // namespace fewshot
