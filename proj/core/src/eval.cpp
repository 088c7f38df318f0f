#include "fewshot/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fewshot/error.hpp"
#include "fewshot/image_io.hpp"
#include "json_util.hpp"

namespace fewshot {

namespace {

using nlohmann::json;

std::string safe_filename(const std::string& s) {
    std::string out;
    for (char c : s)
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    return out;
}

json curve_to_json(const CurvePoints& c) {
    json j;
    j["kind"] = to_string(c.kind);
    json pts = json::array();
    for (const auto& [x, y] : c.points) pts.push_back({x, y});
    j["points"] = std::move(pts);
    j["summary"] = c.summary;
    return j;
}

CurvePoints curve_from_json(const json& j) {
    CurvePoints c;
    c.kind = j.at("kind").get<std::string>() == "pr" ? CurveKind::pr : CurveKind::roc;
    for (const auto& p : j.at("points")) c.points.emplace_back(p.at(0).get<double>(),
                                                               p.at(1).get<double>());
    c.summary = j.at("summary").get<double>();
    return c;
}

json metrics_to_json(const ClassMetrics& m) {
    return json{{"precision", m.precision},
                {"recall", m.recall},
                {"f1", m.f1},
                {"specificity", m.specificity},
                {"defined",
                 {{"precision", m.precision_defined},
                  {"recall", m.recall_defined},
                  {"f1", m.f1_defined},
                  {"specificity", m.specificity_defined}}}};
}

ClassMetrics metrics_from_json(const json& j) {
    ClassMetrics m;
    m.precision = j.at("precision").get<double>();
    m.recall = j.at("recall").get<double>();
    m.f1 = j.at("f1").get<double>();
    m.specificity = j.at("specificity").get<double>();
    const auto& d = j.at("defined");
    m.precision_defined = d.at("precision").get<bool>();
    m.recall_defined = d.at("recall").get<bool>();
    m.f1_defined = d.at("f1").get<bool>();
    m.specificity_defined = d.at("specificity").get<bool>();
    return m;
}

// minimal SVG writers

constexpr int kPlotSize = 420;
constexpr int kMargin = 50;

const char* curve_color(size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return palette[i % 10];
}

std::string svg_curves(const std::map<std::string, ClassCurves>& curves, CurveKind kind,
                       const char* x_label, const char* y_label) {
    const int w = kPlotSize + 2 * kMargin + 140; // room for the legend
    const int h = kPlotSize + 2 * kMargin;
    auto px = [](double x) { return kMargin + x * kPlotSize; };
    auto py = [](double y) { return kMargin + (1.0 - y) * kPlotSize; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kPlotSize
        << "\" height=\"" << kPlotSize << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        double t = i / 4.0;
        svg << "<text x=\"" << px(t) << "\" y=\"" << h - kMargin + 20
            << "\" font-size=\"11\" text-anchor=\"middle\">" << t << "</text>\n";
        svg << "<text x=\"" << kMargin - 8 << "\" y=\"" << py(t) + 4
            << "\" font-size=\"11\" text-anchor=\"end\">" << t << "</text>\n";
    }
    svg << "<text x=\"" << px(0.5) << "\" y=\"" << h - 8
        << "\" font-size=\"13\" text-anchor=\"middle\">" << x_label << "</text>\n";
    svg << "<text x=\"14\" y=\"" << py(0.5)
        << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << py(0.5)
        << ")\">" << y_label << "</text>\n";

    size_t idx = 0;
    int legend_y = kMargin;
    for (const auto& [cls, cc] : curves) {
        const CurvePoints& cp = kind == CurveKind::pr ? cc.pr : cc.roc;
        if (!cc.valid) continue;
        svg << "<polyline fill=\"none\" stroke=\"" << curve_color(idx) << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : cp.points) svg << px(x) << "," << py(y) << " ";
        svg << "\"/>\n";
        svg << "<text x=\"" << kMargin + kPlotSize + 12 << "\" y=\"" << legend_y
            << "\" font-size=\"12\" fill=\"" << curve_color(idx) << "\">" << cls << " ("
            << (kind == CurveKind::pr ? "AP" : "AUC") << "=" << cp.summary << ")</text>\n";
        legend_y += 18;
        ++idx;
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string svg_confusion(const ConfusionMatrix& cm) {
    const size_t n = cm.classes.size();
    const int cell = std::max(28, static_cast<int>(320 / std::max<size_t>(n, 1)));
    const int label_w = 90;
    const int w = label_w + static_cast<int>(n) * cell + 20;
    const int h = label_w + static_cast<int>(n) * cell + 20;

    int64_t max_count = 1;
    for (const auto& row : cm.counts)
        for (int64_t v : row) max_count = std::max(max_count, v);

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (size_t r = 0; r < n; ++r) {
        for (size_t c = 0; c < n; ++c) {
            const double frac = static_cast<double>(cm.counts[r][c]) / static_cast<double>(max_count);
            const int blue = 255 - static_cast<int>(frac * 160);
            const int other = 255 - static_cast<int>(frac * 225);
            const int x = label_w + static_cast<int>(c) * cell;
            const int y = label_w + static_cast<int>(r) * cell;
            svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
                << cell << "\" fill=\"rgb(" << other << "," << other << "," << blue
                << ")\" stroke=\"#ccc\"/>\n";
            svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
                << "\" font-size=\"10\" text-anchor=\"middle\">" << cm.counts[r][c]
                << "</text>\n";
        }
    }
    for (size_t i = 0; i < n; ++i) {
        const int x = label_w + static_cast<int>(i) * cell + cell / 2;
        const int y = label_w + static_cast<int>(i) * cell + cell / 2;
        svg << "<text x=\"" << x << "\" y=\"" << label_w - 8
            << "\" font-size=\"10\" text-anchor=\"middle\">" << cm.classes[i] << "</text>\n";
        svg << "<text x=\"" << label_w - 8 << "\" y=\"" << y + 4
            << "\" font-size=\"10\" text-anchor=\"end\">" << cm.classes[i] << "</text>\n";
    }
    svg << "<text x=\"" << label_w + static_cast<int>(n) * cell / 2 << "\" y=\"14\""
        << " font-size=\"11\" text-anchor=\"middle\">predicted</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

} // namespace

std::pair<double, double> confidence_interval95(const std::vector<double>& episode_accuracies) {
    if (episode_accuracies.empty()) throw DataError("confidence interval of an empty list");
    const size_t n = episode_accuracies.size();
    double mean = 0.0;
    for (double a : episode_accuracies) mean += a;
    mean /= static_cast<double>(n);
    if (n < 2) return {mean, mean};
    double sq = 0.0;
    for (double a : episode_accuracies) sq += (a - mean) * (a - mean);
    const double s = std::sqrt(sq / static_cast<double>(n - 1));
    const double half = 1.96 * s / std::sqrt(static_cast<double>(n));
    return {mean - half, mean + half};
}

EvalReport evaluate(const ItemEmbedder& embedder, const PoolView& view,
                    const EpisodeStream& stream, SimilarityMetric metric, double temperature) {
    if (stream.count <= 0) throw DataError("evaluate: empty episode stream");

    EvalReport report;
    report.classes = view.classes;
    report.confusion = ConfusionMatrix(view.classes);

    std::map<std::string, std::vector<ScoredLabel>> score_pools;
    for (const auto& cls : view.classes) score_pools[cls] = {};

    std::vector<double> episode_accuracies;
    double loss_sum = 0.0;

    for (int i = 0; i < stream.count; ++i) {
        Episode ep = stream.episode(view, i);

        std::vector<std::vector<Vec>> support(ep.classes.size());
        for (const auto& li : ep.support)
            support[li.label].push_back(embedder.embed_item(li.item));
        PrototypeSet protos = compute_prototypes(support, ep.classes);

        std::vector<Vec> queries;
        std::vector<int> labels;
        for (const auto& li : ep.query) {
            queries.push_back(embedder.embed_item(li.item));
            labels.push_back(li.label);
        }

        EpisodeLogits logits = compute_logits(queries, protos, metric, temperature);
        auto [loss, d_logits] = episode_loss(logits, labels);
        loss_sum += loss;

        int correct = 0;
        for (size_t q = 0; q < queries.size(); ++q) {
            auto [predicted, scores] = classify(queries[q], protos, metric);
            if (predicted == labels[q]) ++correct;

            const int true_global = report.confusion.index_of(ep.classes[labels[q]]);
            const int pred_global = report.confusion.index_of(ep.classes[predicted]);
            report.confusion.add(true_global, pred_global);

            Vec probs = softmax_row(logits.values, static_cast<int>(q));
            for (size_t c = 0; c < ep.classes.size(); ++c)
                score_pools[ep.classes[c]].push_back(
                    {probs[c], static_cast<int>(c) == labels[q]});
        }
        episode_accuracies.push_back(static_cast<double>(correct) /
                                     static_cast<double>(queries.size()));
    }

    report.episode_count = stream.count;
    double mean = 0.0;
    for (double a : episode_accuracies) mean += a;
    report.mean_accuracy = mean / static_cast<double>(episode_accuracies.size());
    std::tie(report.ci95_lo, report.ci95_hi) = confidence_interval95(episode_accuracies);
    report.mean_loss = loss_sum / stream.count;

    ClassificationReport cr = classification_report(report.confusion);
    report.per_class = cr.per_class;
    report.macro_f1 = cr.macro_f1;

    for (const auto& cls : view.classes) {
        const auto& pool = score_pools[cls];
        int64_t pos = 0;
        for (const auto& s : pool) pos += s.positive ? 1 : 0;
        ClassCurves cc;
        if (pool.empty() || pos == 0 || pos == static_cast<int64_t>(pool.size())) {
            cc.valid = false;
            report.notes.push_back("class `" + cls +
                                   "`: curves unavailable (scores are all one label)");
        } else {
            cc.pr = pr_curve(pool);
            cc.roc = roc_curve(pool);
            cc.valid = true;
        }
        report.curves[cls] = std::move(cc);
    }
    return report;
}

std::string eval_report_to_json(const EvalReport& report) {
    json j;
    j["format_version"] = 1;
    j["episode_count"] = report.episode_count;
    j["mean_accuracy"] = report.mean_accuracy;
    j["ci95"] = {report.ci95_lo, report.ci95_hi};
    j["mean_loss"] = report.mean_loss;
    j["confusion"] = {{"classes", report.confusion.classes}, {"counts", report.confusion.counts}};
    j["classes"] = report.classes;
    json per_class = json::object();
    for (size_t i = 0; i < report.classes.size(); ++i)
        per_class[report.classes[i]] = metrics_to_json(report.per_class[i]);
    j["per_class"] = std::move(per_class);
    j["macro_f1"] = report.macro_f1;
    json curves = json::object();
    for (const auto& [cls, cc] : report.curves) {
        json e;
        e["valid"] = cc.valid;
        if (cc.valid) {
            e["pr"] = curve_to_json(cc.pr);
            e["roc"] = curve_to_json(cc.roc);
        }
        curves[cls] = std::move(e);
    }
    j["curves"] = std::move(curves);
    j["notes"] = report.notes;
    return j.dump(2) + "\n";
}

EvalReport eval_report_from_json(const std::string& json_text) {
    json j = detail::parse_json(json_text, "report");
    return detail::with_json_errors("report", [&] {
        EvalReport r;
        r.episode_count = j.at("episode_count").get<int>();
        r.mean_accuracy = j.at("mean_accuracy").get<double>();
        r.ci95_lo = j.at("ci95").at(0).get<double>();
        r.ci95_hi = j.at("ci95").at(1).get<double>();
        r.mean_loss = j.at("mean_loss").get<double>();
        r.confusion = ConfusionMatrix(j.at("confusion").at("classes").get<std::vector<std::string>>());
        r.confusion.counts = j.at("confusion").at("counts").get<std::vector<std::vector<int64_t>>>();
        r.classes = j.at("classes").get<std::vector<std::string>>();
        for (const auto& cls : r.classes)
            r.per_class.push_back(metrics_from_json(j.at("per_class").at(cls)));
        r.macro_f1 = j.at("macro_f1").get<double>();
        for (const auto& [cls, e] : j.at("curves").items()) {
            ClassCurves cc;
            cc.valid = e.at("valid").get<bool>();
            if (cc.valid) {
                cc.pr = curve_from_json(e.at("pr"));
                cc.roc = curve_from_json(e.at("roc"));
            }
            r.curves[cls] = std::move(cc);
        }
        r.notes = j.at("notes").get<std::vector<std::string>>();
        return r;
    });
}

void render_report(const EvalReport& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (!std::filesystem::is_directory(out_dir))
        throw DataError("cannot create report directory: " + out_dir.string());

    write_file_atomic(out_dir / "report.json", eval_report_to_json(report));

    {
        std::ostringstream csv;
        csv << "class";
        for (const auto& c : report.confusion.classes) csv << "," << c;
        csv << "\n";
        for (size_t r = 0; r < report.confusion.classes.size(); ++r) {
            csv << report.confusion.classes[r];
            for (size_t c = 0; c < report.confusion.classes.size(); ++c)
                csv << "," << report.confusion.counts[r][c];
            csv << "\n";
        }
        write_file_atomic(out_dir / "confusion.csv", csv.str());
    }

    for (const auto& [cls, cc] : report.curves) {
        for (CurveKind kind : {CurveKind::pr, CurveKind::roc}) {
            std::ostringstream csv;
            csv << "x,y\n";
            const CurvePoints& cp = kind == CurveKind::pr ? cc.pr : cc.roc;
            if (cc.valid) {
                csv.precision(17);
                for (const auto& [x, y] : cp.points) csv << x << "," << y << "\n";
                csv << "# " << (kind == CurveKind::pr ? "AP" : "AUC") << "=" << cp.summary
                    << "\n";
            }
            write_file_atomic(out_dir / ("curves_" + safe_filename(cls) + "_" +
                                         to_string(kind) + ".csv"),
                              csv.str());
        }
    }

    write_file_atomic(out_dir / "confusion.svg", svg_confusion(report.confusion));
    write_file_atomic(out_dir / "pr_curves.svg",
                      svg_curves(report.curves, CurveKind::pr, "recall", "precision"));
    write_file_atomic(out_dir / "roc_curves.svg",
                      svg_curves(report.curves, CurveKind::roc, "false positive rate",
                                 "true positive rate"));
}

} // namespace fewshot
