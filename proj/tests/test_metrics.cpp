#include <doctest.h>

#include <cmath>

#include "fewshot/error.hpp"
#include "fewshot/metrics.hpp"
#include "fewshot/rng.hpp"

using namespace fewshot;

TEST_CASE("diagonal confusion matrix scores perfectly") {
    ConfusionMatrix cm({"a", "b", "c"});
    cm.add(0, 0, 10);
    cm.add(1, 1, 4);
    cm.add(2, 2, 6);
    auto report = classification_report(cm);
    for (const auto& m : report.per_class) {
        CHECK(m.precision == 1.0);
        CHECK(m.recall == 1.0);
        CHECK(m.f1 == 1.0);
        CHECK(m.specificity == 1.0);
    }
    CHECK(report.macro_f1 == 1.0);
}

TEST_CASE("two-class fixture matches hand-derived values") {
    // rows true, columns predicted: [[8,2],[3,7]]
    ConfusionMatrix cm({"pos", "neg"});
    cm.add(0, 0, 8);
    cm.add(0, 1, 2);
    cm.add(1, 0, 3);
    cm.add(1, 1, 7);

    auto report = classification_report(cm);
    const auto& m0 = report.per_class[0];
    CHECK(m0.precision == doctest::Approx(8.0 / 11.0).epsilon(1e-12));
    CHECK(m0.recall == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(m0.f1 ==
          doctest::Approx(2.0 * (8.0 / 11.0) * 0.8 / (8.0 / 11.0 + 0.8)).epsilon(1e-12));
    CHECK(m0.f1 == doctest::Approx(0.762).epsilon(1e-3));
    CHECK(m0.specificity == doctest::Approx(0.7).epsilon(1e-12));

    CHECK(report.macro_f1 ==
          doctest::Approx((report.per_class[0].f1 + report.per_class[1].f1) / 2.0)
              .epsilon(1e-12));
}

TEST_CASE("zero-denominator metrics report 0 with a cleared flag") {
    // class c never appears and is never predicted
    ConfusionMatrix cm({"a", "c"});
    cm.add(0, 0, 5);
    auto report = classification_report(cm);
    const auto& m = report.per_class[1];
    CHECK(m.recall == 0.0);
    CHECK_FALSE(m.recall_defined);
    CHECK(m.precision == 0.0);
    CHECK_FALSE(m.precision_defined);
    CHECK_FALSE(m.f1_defined);
    CHECK(m.specificity == 1.0); // negatives exist and none were predicted c
}

TEST_CASE("pr curve on the three-point fixture") {
    std::vector<ScoredLabel> scores{{0.9, true}, {0.8, false}, {0.7, true}};
    auto curve = pr_curve(scores);
    REQUIRE(curve.points.size() == 3);
    CHECK(curve.points[0] == std::pair<double, double>{0.5, 1.0});
    CHECK(curve.points[1] == std::pair<double, double>{0.5, 0.5});
    CHECK(curve.points[2].first == 1.0);
    CHECK(curve.points[2].second == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(curve.summary == doctest::Approx(0.5 * 1.0 + 0.5 * (2.0 / 3.0)).epsilon(1e-12));
    CHECK(curve.summary == doctest::Approx(5.0 / 6.0).epsilon(1e-12));

    // recall never decreases
    for (size_t i = 1; i < curve.points.size(); ++i)
        CHECK(curve.points[i].first >= curve.points[i - 1].first);
}

TEST_CASE("perfect separation gives AP and AUC of 1") {
    std::vector<ScoredLabel> scores;
    for (int i = 0; i < 10; ++i) scores.push_back({1.0 - i * 0.01, true});
    for (int i = 0; i < 10; ++i) scores.push_back({0.5 - i * 0.01, false});
    CHECK(pr_curve(scores).summary == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(roc_curve(scores).summary == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("roc endpoints and tie handling") {
    SUBCASE("all scores identical") {
        std::vector<ScoredLabel> scores;
        for (int i = 0; i < 6; ++i) scores.push_back({0.4, i % 2 == 0});
        auto curve = roc_curve(scores);
        CHECK(curve.points.front() == std::pair<double, double>{0.0, 0.0});
        CHECK(curve.points.back() == std::pair<double, double>{1.0, 1.0});
        CHECK(curve.summary == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("three-point fixture has one concordant pair of two") {
        std::vector<ScoredLabel> scores{{0.9, true}, {0.8, false}, {0.7, true}};
        CHECK(roc_curve(scores).summary == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("curves reject single-class inputs") {
    std::vector<ScoredLabel> all_pos{{0.5, true}, {0.4, true}};
    CHECK_THROWS_AS(pr_curve(all_pos), DataError);
    CHECK_THROWS_AS(roc_curve(all_pos), DataError);
    std::vector<ScoredLabel> all_neg{{0.5, false}};
    CHECK_THROWS_AS(pr_curve(all_neg), DataError);
    CHECK_THROWS_AS(roc_curve(all_neg), DataError);
}

TEST_CASE("random scores give AP near prevalence") {
    Rng rng(2027);
    std::vector<ScoredLabel> scores;
    for (int i = 0; i < 1000; ++i)
        scores.push_back({rng.next_double(), rng.next_double() < 0.3});
    double ap = pr_curve(scores).summary;
    CHECK(ap > 0.25);
    CHECK(ap < 0.35);
}

TEST_CASE("AP and AUC are invariant under strictly monotone score transforms") {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<ScoredLabel> scores;
        const int n = 30 + static_cast<int>(rng.next_below(50));
        int pos = 0;
        for (int i = 0; i < n; ++i) {
            bool p = rng.next_double() < 0.4;
            pos += p;
            // coarse grid forces ties
            double s = static_cast<double>(rng.next_below(16)) / 16.0;
            scores.push_back({s, p});
        }
        if (pos == 0 || pos == n) continue;

        double ap = pr_curve(scores).summary;
        double auc = roc_curve(scores).summary;

        auto transformed = [&](auto&& f) {
            std::vector<ScoredLabel> t = scores;
            for (auto& s : t) s.score = f(s.score);
            return t;
        };

        for (auto&& f : {+[](double x) { return 2.0 * x + 1.0; },
                         +[](double x) { return x * x * x; },
                         +[](double x) { return std::exp(x); }}) {
            auto t = transformed(f);
            CHECK(pr_curve(t).summary == doctest::Approx(ap).epsilon(1e-12));
            CHECK(roc_curve(t).summary == doctest::Approx(auc).epsilon(1e-12));
        }
    }
}
