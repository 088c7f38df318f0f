#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fewshot/metrics.hpp"
#include "fewshot/pipeline.hpp"
#include "fewshot/proto.hpp"
#include "fewshot/sampler.hpp"

namespace fewshot {

struct ClassCurves {
    CurvePoints pr;
    CurvePoints roc;
    bool valid = false; // false when the pooled scores were all one class

    bool operator==(const ClassCurves&) const = default;
};

struct EvalReport {
    int episode_count = 0;
    double mean_accuracy = 0.0;
    double ci95_lo = 0.0;
    double ci95_hi = 0.0;
    double mean_loss = 0.0;
    ConfusionMatrix confusion;
    std::vector<std::string> classes; // pool order, parallel to per_class
    std::vector<ClassMetrics> per_class;
    double macro_f1 = 0.0;
    std::map<std::string, ClassCurves> curves;
    std::vector<std::string> notes;

    bool operator==(const EvalReport&) const = default;
};

/// mean +/- 1.96 * s / sqrt(E) over per-episode accuracies, s the sample
/// standard deviation (zero when E < 2).
std::pair<double, double> confidence_interval95(const std::vector<double>& episode_accuracies);

/// Runs `count` episodes from the stream, classifying every query with
/// nearest-prototype under (metric, temperature). Accumulates per-episode
/// accuracy, mean loss, the pooled confusion matrix over the view's global
/// classes, and per-class one-vs-rest (softmax score, is-positive) pairs
/// that feed the PR/ROC curves. Classes whose pooled scores are all one
/// label get valid=false curves and a note. Throws DataError on an empty
/// stream.
EvalReport evaluate(const ItemEmbedder& embedder, const PoolView& view,
                    const EpisodeStream& stream, SimilarityMetric metric,
                    double temperature);

/// report.json (exact round-trip through eval_report_from_json),
/// confusion.csv, curves_<class>_<kind>.csv and SVG renderings
/// (confusion.svg, pr_curves.svg, roc_curves.svg) under out_dir. Curve CSVs
/// carry an `x,y` header and a trailing `# AP=...`/`# AUC=...` comment;
/// invalid curves produce a header-only CSV and are left out of the SVGs.
void render_report(const EvalReport& report, const std::filesystem::path& out_dir);

std::string eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(const std::string& json_text);

} // namespace fewshot
