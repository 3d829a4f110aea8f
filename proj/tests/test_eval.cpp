#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "cablesift/common.hpp"
#include "cablesift/eval.hpp"
#include "cablesift/synthgen.hpp"

using namespace cablesift;

namespace {

// O(n^2) pair-counting oracle for the rank AUC, ties counted half.
double auc_oracle(std::span<const double> scores, std::span<const int> labels) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            pairs += 1;
            if (scores[i] > scores[j]) wins += 1;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

void random_scored(Rng& rng, std::size_t n, bool with_ties, std::vector<double>& scores,
                   std::vector<int>& labels) {
    scores.clear();
    labels.clear();
    for (std::size_t i = 0; i < n; ++i) {
        scores.push_back(with_ties ? static_cast<double>(rng.below(8)) / 8.0 : rng.real());
        labels.push_back(static_cast<int>(rng.below(2)));
    }
    labels[0] = 1;
    if (n > 1) labels[1] = 0;
}

SynthSpec small_spec(std::size_t n, std::uint64_t seed) {
    SynthSpec spec;
    spec.n_docs = n;
    spec.seed = seed;
    spec.body_noise_vocab = 120;
    spec.subject_noise_vocab = 60;
    spec.concepts_noise_vocab = 40;
    spec.tags_noise_vocab = 30;
    spec.office_noise_vocab = 20;
    spec.sender_noise_vocab = 25;
    return spec;
}

PipelineConfig fast_pipeline() {
    PipelineConfig config;
    config.fields.clear();
    for (FieldId f : {FieldId::Subject, FieldId::Body}) {
        FieldConfig cfg = FieldConfig::defaults(f);
        config.fields.push_back(cfg);
    }
    ClassifierSpec spec = ClassifierSpec::defaults(ClassifierKind::SgdLogloss, 0);
    spec.hyper.epochs = 10;
    config.single = spec;
    return config;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("scenario binarization") {
    std::vector<Level> levels = {Level::Unclassified, Level::Secret, Level::LimitedOfficialUse};
    BinarizeResult r = binarize(levels, Scenario::U_vs_CS);
    CHECK(r.labels == std::vector<int>{0, 1});
    CHECK(r.kept == std::vector<std::size_t>{0, 1});

    std::vector<Level> all4 = {Level::Unclassified, Level::LimitedOfficialUse,
                               Level::Confidential, Level::Secret};
    CHECK(binarize(all4, Scenario::ULC_vs_S).labels == std::vector<int>{0, 0, 0, 1});
    CHECK(binarize(all4, Scenario::U_vs_LCS).labels == std::vector<int>{0, 1, 1, 1});
    CHECK(binarize(all4, Scenario::UL_vs_CS).labels == std::vector<int>{0, 0, 1, 1});

    std::vector<Level> all_u(5, Level::Unclassified);
    for (std::size_t s = 0; s < kScenarioCount; ++s) {
        auto b = binarize(all_u, static_cast<Scenario>(s));
        CHECK(std::all_of(b.labels.begin(), b.labels.end(), [](int v) { return v == 0; }));
    }
}

TEST_CASE("stratified folds balance both classes") {
    std::vector<int> labels(9, 0);
    for (int i = 0; i < 6; ++i) labels[i] = 1;
    std::vector<int> folds = stratified_kfold(labels, 3, 5);
    std::array<std::array<int, 3>, 2> counts{};
    for (std::size_t i = 0; i < labels.size(); ++i) counts[labels[i]][folds[i]] += 1;
    for (int f = 0; f < 3; ++f) {
        CHECK(counts[1][f] == 2);
        CHECK(counts[0][f] == 1);
    }

    std::vector<int> seven(7, 1);
    seven.insert(seven.end(), 3, 0);
    folds = stratified_kfold(seven, 3, 6);
    std::array<int, 3> pos_counts{};
    for (std::size_t i = 0; i < seven.size(); ++i) {
        if (seven[i] == 1) pos_counts[folds[i]] += 1;
    }
    std::sort(pos_counts.begin(), pos_counts.end());
    CHECK(pos_counts == std::array<int, 3>{2, 2, 3});

    CHECK_THROWS_AS(stratified_kfold(std::vector<int>{1, 1, 0}, 2, 0), DataError);
    CHECK_THROWS_AS(stratified_kfold(labels, 1, 0), UsageError);
}

TEST_CASE("random fold assignments partition with per-class balance") {
    Rng rng(101);
    for (int trial = 0; trial < 300; ++trial) {
        int k = 2 + static_cast<int>(rng.below(4));
        std::size_t n = static_cast<std::size_t>(2 * k) + rng.below(60);
        std::vector<int> labels(n);
        for (auto& v : labels) v = static_cast<int>(rng.below(2));
        std::array<std::size_t, 2> class_count{};
        for (int v : labels) ++class_count[v];
        if (class_count[0] < static_cast<std::size_t>(k) ||
            class_count[1] < static_cast<std::size_t>(k)) {
            --trial;  // resample degenerate draws
            continue;
        }
        std::vector<int> folds = stratified_kfold(labels, k, rng.next_u64());
        REQUIRE(folds.size() == n);
        std::vector<std::array<std::size_t, 2>> per_fold(k);
        for (std::size_t i = 0; i < n; ++i) {
            REQUIRE(folds[i] >= 0);
            REQUIRE(folds[i] < k);
            per_fold[folds[i]][labels[i]] += 1;
        }
        for (int c = 0; c < 2; ++c) {
            std::size_t lo = n, hi = 0;
            for (int f = 0; f < k; ++f) {
                lo = std::min(lo, per_fold[f][c]);
                hi = std::max(hi, per_fold[f][c]);
            }
            CHECK(hi - lo <= 1);
        }
    }
}

TEST_CASE("roc auc basics") {
    CHECK(roc_auc(std::vector<double>{0.9, 0.8, 0.1}, std::vector<int>{1, 1, 0}) == 1.0);
    CHECK(roc_auc(std::vector<double>{0.4, 0.4, 0.4, 0.4}, std::vector<int>{1, 0, 1, 0}) == 0.5);
    CHECK_THROWS_AS(roc_auc(std::vector<double>{0.5, 0.6}, std::vector<int>{1, 1}), DataError);
}

TEST_CASE("roc auc matches the pair-count oracle with ties") {
    Rng rng(103);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> scores;
        std::vector<int> labels;
        random_scored(rng, 2 + rng.below(199), trial % 2 == 0, scores, labels);
        CHECK(std::abs(roc_auc(scores, labels) - auc_oracle(scores, labels)) <= 1e-12);
    }
}

TEST_CASE("auc is rank-invariant and flips under score reversal") {
    Rng rng(107);
    std::vector<double> scores;
    std::vector<int> labels;
    random_scored(rng, 150, true, scores, labels);
    double base = roc_auc(scores, labels);

    std::vector<double> transformed(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        transformed[i] = std::exp(3.0 * scores[i]) + 7.0;  // strictly increasing
    }
    CHECK(roc_auc(transformed, labels) == doctest::Approx(base).epsilon(1e-12));

    std::vector<double> reversed(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) reversed[i] = -scores[i];
    CHECK(roc_auc(reversed, labels) == doctest::Approx(1.0 - base).epsilon(1e-12));
}

TEST_CASE("curve endpoints and consistency with auc") {
    std::vector<double> perfect = {0.9, 0.8, 0.2, 0.1};
    std::vector<int> labels = {1, 1, 0, 0};
    Curves c = curves(perfect, labels);
    CHECK(std::find(c.roc.begin(), c.roc.end(), std::pair<double, double>{0.0, 1.0}) !=
          c.roc.end());
    CHECK(c.roc.front() == std::pair<double, double>{0.0, 0.0});
    CHECK(c.roc.back() == std::pair<double, double>{1.0, 1.0});

    std::vector<double> ties = {0.5, 0.5, 0.5, 0.5};
    Curves diag = curves(ties, labels);
    CHECK(diag.roc ==
          std::vector<std::pair<double, double>>{{0.0, 0.0}, {1.0, 1.0}});

    Rng rng(109);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<double> scores;
        std::vector<int> ls;
        random_scored(rng, 3 + rng.below(120), trial % 2 == 0, scores, ls);
        Curves cc = curves(scores, ls);
        for (std::size_t i = 1; i < cc.roc.size(); ++i) {
            CHECK(cc.roc[i].first >= cc.roc[i - 1].first);
            CHECK(cc.roc[i].second >= cc.roc[i - 1].second);
        }
        CHECK(trapezoid_area(cc.roc) == doctest::Approx(roc_auc(scores, ls)).epsilon(1e-12));
    }
}

TEST_CASE("metrics recompute exactly from confusion counts") {
    Rng rng(113);
    for (int trial = 0; trial < 300; ++trial) {
        Confusion c;
        c.tp = rng.below(500);
        c.fp = rng.below(500);
        c.tn = rng.below(500);
        c.fn = rng.below(500);
        if (c.total() == 0) c.tp = 1;
        Metrics m = Metrics::from_confusion(c);
        auto div = [](std::uint64_t a, std::uint64_t b) {
            return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
        };
        CHECK(m.accuracy == div(c.tp + c.tn, c.tp + c.fp + c.tn + c.fn));
        CHECK(m.precision1 == div(c.tp, c.tp + c.fp));
        CHECK(m.recall1 == div(c.tp, c.tp + c.fn));
        CHECK(m.precision0 == div(c.tn, c.tn + c.fn));
        CHECK(m.recall0 == div(c.tn, c.tn + c.fp));
        double f1_1 = (m.precision1 + m.recall1) == 0
                          ? 0.0
                          : 2 * m.precision1 * m.recall1 / (m.precision1 + m.recall1);
        CHECK(m.f1_1 == f1_1);
        CHECK(m.f1_macro == 0.5 * (m.f1_0 + m.f1_1));
        for (double v : {m.accuracy, m.precision0, m.precision1, m.recall0, m.recall1, m.f1_0,
                         m.f1_1, m.f1_macro, m.f1_weighted}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("embedded classification markers") {
    std::string fig5_style = "TAGS: ETEL, EG, TSPA\nSUBJ: EARTH STATION\n\nWE HAVE MADE "
                             "RESERVATIONS FOR ONE WEEK BEGINNING APRIL 24.\nEILTS\n\nSECRET\n";
    CHECK(detect_embedded_marker(fig5_style) == Level::Secret);
    CHECK(detect_embedded_marker("NO MARKERS HERE") == std::nullopt);
    CHECK(detect_embedded_marker("CONFIDENTIAL\nBODY TEXT\nSECRET\n") == Level::Secret);
    CHECK(detect_embedded_marker("  limited official use  \r\nREST") ==
          Level::LimitedOfficialUse);
    CHECK(detect_embedded_marker("THIS IS SECRET BUSINESS") == std::nullopt);  // not standalone
    CHECK(detect_embedded_marker("") == std::nullopt);
}

TEST_CASE("misclassified rankings sort by severity") {
    EvalReport report;
    report.threshold = 0.5;
    report.documents = {
        {"FP_HIGH", 0, 0.99, 0}, {"TP", 1, 0.93, 0},      {"FP_LOW", 0, 0.61, 1},
        {"FN_LOW", 1, 0.05, 1},  {"FN_MID", 1, 0.35, 2},  {"TN", 0, 0.2, 2},
    };
    auto fps = rank_misclassified(report, MisDirection::FalsePositive, 10);
    REQUIRE(fps.size() == 2);
    CHECK(fps[0].first == "FP_HIGH");
    CHECK(fps[1].first == "FP_LOW");
    auto fns = rank_misclassified(report, MisDirection::FalseNegative, 1);
    REQUIRE(fns.size() == 1);
    CHECK(fns[0].first == "FN_LOW");

    EvalReport clean;
    clean.threshold = 0.5;
    clean.documents = {{"TP", 1, 0.9, 0}, {"TN", 0, 0.1, 0}};
    CHECK(rank_misclassified(clean, MisDirection::FalsePositive, 5).empty());
    CHECK(rank_misclassified(clean, MisDirection::FalseNegative, 5).empty());

    // ordering matches a full-sort oracle on random reports
    Rng rng(127);
    EvalReport random_report;
    random_report.threshold = 0.5;
    for (int i = 0; i < 200; ++i) {
        random_report.documents.push_back(
            {"D" + std::to_string(i), static_cast<int>(rng.below(2)),
             static_cast<double>(rng.below(20)) / 20.0, 0});
    }
    auto got = rank_misclassified(random_report, MisDirection::FalsePositive, 1000);
    std::vector<std::pair<std::string, double>> expect;
    for (const auto& d : random_report.documents) {
        if (d.label == 0 && d.score >= 0.5) expect.emplace_back(d.doc_id, d.score);
    }
    std::sort(expect.begin(), expect.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    CHECK(got == expect);
}

TEST_CASE("cross validation on a separable synthetic corpus") {
    std::vector<Cable> corpus = generate(small_spec(400, 2024));
    PipelineConfig config = fast_pipeline();
    EvalReport report = cross_validate(config, corpus, Scenario::U_vs_CS, 3, 99, 2);

    CHECK(report.pooled.auc >= 0.95);
    CHECK(report.folds.size() == 3);

    // every kept document is scored exactly once
    std::set<std::string> ids;
    for (const DocScore& d : report.documents) CHECK(ids.insert(d.doc_id).second);
    std::size_t kept = 0;
    for (const Cable& c : corpus) {
        if (c.orig_class != Level::LimitedOfficialUse) ++kept;
    }
    CHECK(report.documents.size() == kept);

    // pooled confusion equals the sum over folds
    Confusion sum;
    for (const FoldResult& f : report.folds) sum += f.confusion;
    CHECK(sum.tp == report.pooled.confusion.tp);
    CHECK(sum.fp == report.pooled.confusion.fp);
    CHECK(sum.tn == report.pooled.confusion.tn);
    CHECK(sum.fn == report.pooled.confusion.fn);

    // run-to-run determinism, independent of the thread count
    EvalReport again = cross_validate(config, corpus, Scenario::U_vs_CS, 3, 99, 1);
    CHECK(again.to_json().dump() == report.to_json().dump());
}

TEST_CASE("degenerate configurations error out") {
    std::vector<Cable> corpus = generate(small_spec(60, 7));
    PipelineConfig config = fast_pipeline();
    config.fields.clear();
    CHECK_THROWS_AS(cross_validate(config, corpus, Scenario::U_vs_CS, 2, 1, 1), DataError);

    PipelineConfig impossible = fast_pipeline();
    for (auto& f : impossible.fields) f.min_doc_freq = 1000000;  // nothing survives the floor
    CHECK_THROWS_AS(cross_validate(impossible, corpus, Scenario::U_vs_CS, 2, 1, 1), DataError);
}

TEST_CASE("global vocabulary mode still evaluates") {
    std::vector<Cable> corpus = generate(small_spec(200, 5));
    PipelineConfig config = fast_pipeline();
    config.global_vocab = true;
    EvalReport report = cross_validate(config, corpus, Scenario::UL_vs_CS, 2, 3, 2);
    CHECK(report.pooled.auc > 0.5);
}

TEST_CASE("random search is deterministic and beats nothing worse than itself") {
    std::vector<Cable> corpus = generate(small_spec(220, 31));
    PipelineConfig base = fast_pipeline();
    SearchSpace space;
    space.kinds = {ClassifierKind::MultinomialNB, ClassifierKind::SgdLogloss};
    space.epochs = {5, 10};

    SearchResult one = random_search(space, 1, base, corpus, Scenario::U_vs_CS,
                                     SearchMetric::RocAuc, 2, 77, 2);
    CHECK(one.trials.size() == 1);
    CHECK(one.best_value == one.trials[0].value);

    SearchResult a = random_search(space, 8, base, corpus, Scenario::U_vs_CS,
                                   SearchMetric::RocAuc, 2, 77, 2);
    SearchResult b = random_search(space, 8, base, corpus, Scenario::U_vs_CS,
                                   SearchMetric::RocAuc, 2, 77, 1);
    REQUIRE(a.trials.size() == b.trials.size());
    for (std::size_t i = 0; i < a.trials.size(); ++i) {
        CHECK(a.trials[i].value == b.trials[i].value);
        CHECK(a.trials[i].spec.to_json().dump() == b.trials[i].spec.to_json().dump());
    }
    for (const SearchTrial& t : a.trials) CHECK(a.best_value >= t.value);

    // search dominance: best-of-8 is at least the default-spec score
    PipelineConfig default_cfg = fast_pipeline();
    EvalReport default_report =
        cross_validate(default_cfg, corpus, Scenario::U_vs_CS, 2, 77, 2);
    CHECK(a.best_value >= default_report.pooled.auc - 1e-12);

    CHECK_THROWS_AS(random_search(space, 0, base, corpus, Scenario::U_vs_CS,
                                  SearchMetric::RocAuc, 2, 1, 1),
                    UsageError);
}

}  // TEST_SUITE
