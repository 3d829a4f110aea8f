#include "cablesift/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "cablesift/common.hpp"

namespace cablesift {

std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::U_vs_LCS: return "U_vs_LCS";
        case Scenario::UL_vs_CS: return "UL_vs_CS";
        case Scenario::ULC_vs_S: return "ULC_vs_S";
        case Scenario::U_vs_CS: return "U_vs_CS";
    }
    return "?";
}

std::optional<Scenario> parse_scenario(std::string_view s) {
    for (std::size_t i = 0; i < kScenarioCount; ++i) {
        auto sc = static_cast<Scenario>(i);
        if (s == to_string(sc)) return sc;
    }
    return std::nullopt;
}

std::optional<int> scenario_label(Level level, Scenario s) {
    switch (s) {
        case Scenario::U_vs_LCS:
            return level == Level::Unclassified ? 0 : 1;
        case Scenario::UL_vs_CS:
            return level <= Level::LimitedOfficialUse ? 0 : 1;
        case Scenario::ULC_vs_S:
            return level == Level::Secret ? 1 : 0;
        case Scenario::U_vs_CS:
            if (level == Level::LimitedOfficialUse) return std::nullopt;
            return level == Level::Unclassified ? 0 : 1;
    }
    return std::nullopt;
}

std::pair<std::string, std::string> scenario_group_names(Scenario s) {
    switch (s) {
        case Scenario::U_vs_LCS: return {"U", "L,C,S"};
        case Scenario::UL_vs_CS: return {"U,L", "C,S"};
        case Scenario::ULC_vs_S: return {"U,L,C", "S"};
        case Scenario::U_vs_CS: return {"U", "C,S"};
    }
    return {"?", "?"};
}

BinarizeResult binarize(std::span<const Level> levels, Scenario s) {
    BinarizeResult out;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        auto label = scenario_label(levels[i], s);
        if (!label) continue;
        out.labels.push_back(*label);
        out.kept.push_back(i);
    }
    return out;
}

std::vector<int> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
    if (k < 2) throw UsageError("k must be at least 2");
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[labels[i] == 1 ? 1 : 0].push_back(i);
    }
    for (const auto& cls : by_class) {
        if (cls.size() < static_cast<std::size_t>(k))
            throw DataError("a class has fewer members than k folds");
    }
    std::vector<int> fold(labels.size(), 0);
    Rng rng(mix_seed(seed, 0x6b666f6cull));
    for (auto& cls : by_class) {
        rng.shuffle(cls);
        for (std::size_t i = 0; i < cls.size(); ++i) {
            fold[cls[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
        }
    }
    return fold;
}

namespace {

void require_both_classes(std::span<const int> labels) {
    bool pos = false, neg = false;
    for (int y : labels) (y == 1 ? pos : neg) = true;
    if (!pos || !neg) throw DataError("labels contain a single class");
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw UsageError("scores and labels differ in length");
    require_both_classes(labels);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0;
    std::size_t n_pos = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]] == 1) {
                pos_rank_sum += midrank;
                ++n_pos;
            }
        }
        i = j;
    }
    std::size_t n_neg = n - n_pos;
    double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

Curves curves(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw UsageError("scores and labels differ in length");
    require_both_classes(labels);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double total_pos = 0, total_neg = 0;
    for (int y : labels) (y == 1 ? total_pos : total_neg) += 1;

    Curves out;
    out.roc.emplace_back(0.0, 0.0);
    double tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]] == 1) tp += 1; else fp += 1;
        }
        out.roc.emplace_back(fp / total_neg, tp / total_pos);
        out.pr.emplace_back(tp / total_pos, tp / (tp + fp));
        i = j;
    }
    return out;
}

double trapezoid_area(const std::vector<std::pair<double, double>>& points) {
    double area = 0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        area += 0.5 * (points[i].first - points[i - 1].first) *
                (points[i].second + points[i - 1].second);
    }
    return area;
}

Confusion Confusion::from_scores(std::span<const double> scores, std::span<const int> labels,
                                 double threshold) {
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        bool predicted = scores[i] >= threshold;
        if (labels[i] == 1) {
            (predicted ? c.tp : c.fn) += 1;
        } else {
            (predicted ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

Confusion& Confusion::operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
}

namespace {
double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
double f1(double precision, double recall) {
    return (precision + recall) == 0 ? 0.0 : 2 * precision * recall / (precision + recall);
}
}  // namespace

Metrics Metrics::from_confusion(const Confusion& c) {
    Metrics m;
    m.accuracy = ratio(c.tp + c.tn, c.total());
    m.precision1 = ratio(c.tp, c.tp + c.fp);
    m.recall1 = ratio(c.tp, c.tp + c.fn);
    m.precision0 = ratio(c.tn, c.tn + c.fn);
    m.recall0 = ratio(c.tn, c.tn + c.fp);
    m.f1_1 = f1(m.precision1, m.recall1);
    m.f1_0 = f1(m.precision0, m.recall0);
    m.f1_macro = 0.5 * (m.f1_0 + m.f1_1);
    std::uint64_t support0 = c.tn + c.fp, support1 = c.tp + c.fn;
    std::uint64_t support = support0 + support1;
    m.f1_weighted = support == 0 ? 0.0
                                 : (m.f1_0 * static_cast<double>(support0) +
                                    m.f1_1 * static_cast<double>(support1)) /
                                       static_cast<double>(support);
    return m;
}

nlohmann::json Metrics::to_json() const {
    return nlohmann::json{
        {"accuracy", accuracy},
        {"precision", {{"class0", precision0}, {"class1", precision1}}},
        {"recall", {{"class0", recall0}, {"class1", recall1}}},
        {"f1", {{"class0", f1_0}, {"class1", f1_1}}},
        {"f1_macro", f1_macro},
        {"f1_weighted", f1_weighted},
    };
}

std::vector<std::pair<std::string, double>> rank_misclassified(const EvalReport& report,
                                                               MisDirection direction,
                                                               std::size_t n) {
    std::vector<std::pair<std::string, double>> hits;
    for (const DocScore& d : report.documents) {
        bool predicted = d.score >= report.threshold;
        if (direction == MisDirection::FalsePositive) {
            if (d.label == 0 && predicted) hits.emplace_back(d.doc_id, d.score);
        } else {
            if (d.label == 1 && !predicted) hits.emplace_back(d.doc_id, d.score);
        }
    }
    std::sort(hits.begin(), hits.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second)
            return direction == MisDirection::FalsePositive ? a.second > b.second
                                                            : a.second < b.second;
        return a.first < b.first;
    });
    if (hits.size() > n) hits.resize(n);
    return hits;
}

std::optional<Level> detect_embedded_marker(std::string_view body) {
    std::optional<Level> found;
    std::size_t start = 0;
    while (start <= body.size()) {
        std::size_t nl = body.find('\n', start);
        std::string_view line =
            nl == std::string_view::npos ? body.substr(start) : body.substr(start, nl - start);
        auto level = parse_level(line);  // trims, squeezes, case-folds
        if (level && (!found || *level > *found)) found = level;
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return found;
}

// --- cross-validation ---------------------------------------------------------

namespace {

struct FittedPipeline {
    FeatureSpace space;
    std::optional<TrainedClassifier> single;
    std::optional<TrainedEnsemble> ensemble;

    double score(const SparseVector& x) const {
        return single ? single->decision_score(x) : ensemble->score(x);
    }
};

FittedPipeline fit_pipeline(const PipelineConfig& config, const FeatureSpace& space,
                            std::span<const TokenizedCable> docs, std::span<const int> labels,
                            std::uint64_t seed, unsigned threads) {
    FittedPipeline fitted;
    fitted.space = space;
    std::vector<SparseVector> X = vectorize_corpus(docs, space, threads);
    if (config.single) {
        ClassifierSpec spec = *config.single;
        spec.seed = mix_seed(seed, 0x73696e67ull);
        fitted.single = fit(spec, X, labels, threads);
    } else {
        EnsembleSpec spec = EnsembleSpec::defaults(seed);
        spec.threshold = config.threshold;
        spec.hard_voting = config.hard_voting;
        fitted.ensemble = fit_ensemble(spec, X, labels, threads);
    }
    return fitted;
}

void finalize_report(EvalReport& report, const PipelineConfig& config) {
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(report.documents.size());
    for (const DocScore& d : report.documents) {
        scores.push_back(d.score);
        labels.push_back(d.label);
    }
    report.pooled.confusion = Confusion::from_scores(scores, labels, report.threshold);
    report.pooled.metrics = Metrics::from_confusion(report.pooled.confusion);
    report.pooled.auc = roc_auc(scores, labels);
    report.pooled_curves = curves(scores, labels);

    // Mean-of-folds mirrors how the headline numbers are usually quoted.
    Metrics& mean = report.mean_of_folds;
    double inv = 1.0 / static_cast<double>(report.folds.size());
    for (const FoldResult& f : report.folds) {
        mean.accuracy += inv * f.metrics.accuracy;
        mean.precision0 += inv * f.metrics.precision0;
        mean.precision1 += inv * f.metrics.precision1;
        mean.recall0 += inv * f.metrics.recall0;
        mean.recall1 += inv * f.metrics.recall1;
        mean.f1_0 += inv * f.metrics.f1_0;
        mean.f1_1 += inv * f.metrics.f1_1;
        mean.f1_macro += inv * f.metrics.f1_macro;
        mean.f1_weighted += inv * f.metrics.f1_weighted;
        report.mean_auc += inv * f.auc;
    }
    report.top_false_positives =
        rank_misclassified(report, MisDirection::FalsePositive, config.top_n);
    report.top_false_negatives =
        rank_misclassified(report, MisDirection::FalseNegative, config.top_n);
}

}  // namespace

EvalReport cross_validate_vectors(const PipelineConfig& config,
                                  std::span<const TokenizedCable> docs,
                                  std::span<const Level> levels, Scenario scenario, int k,
                                  std::uint64_t seed, unsigned threads) {
    if (docs.size() != levels.size()) throw UsageError("docs and levels differ in length");
    BinarizeResult bin = binarize(levels, scenario);
    if (bin.labels.empty()) throw DataError("no records left after scenario binarization");
    std::vector<int> folds = stratified_kfold(bin.labels, k, seed);

    EvalReport report;
    report.scenario = scenario;
    report.k = k;
    report.seed = seed;
    report.threshold = config.threshold;
    report.folds.resize(k);

    std::optional<FeatureSpace> global_space;
    if (config.global_vocab) {
        std::vector<TokenizedCable> all;
        all.reserve(bin.kept.size());
        for (std::size_t i : bin.kept) all.push_back(docs[i]);
        global_space = build_feature_space(all, config.fields, threads);
    }

    std::vector<std::vector<DocScore>> fold_docs(k);
    for (int f = 0; f < k; ++f) {
        std::vector<TokenizedCable> train_docs, test_docs;
        std::vector<int> train_labels, test_labels;
        std::vector<std::size_t> test_orig;
        for (std::size_t i = 0; i < bin.labels.size(); ++i) {
            if (folds[i] == f) {
                test_docs.push_back(docs[bin.kept[i]]);
                test_labels.push_back(bin.labels[i]);
                test_orig.push_back(bin.kept[i]);
            } else {
                train_docs.push_back(docs[bin.kept[i]]);
                train_labels.push_back(bin.labels[i]);
            }
        }
        FeatureSpace space = config.global_vocab
                                 ? *global_space
                                 : build_feature_space(train_docs, config.fields, threads);
        FittedPipeline fitted = fit_pipeline(config, space, train_docs, train_labels,
                                             mix_seed(seed, 0xf01d0000ull + f), threads);

        std::vector<SparseVector> test_X = vectorize_corpus(test_docs, space, threads);
        std::vector<double> scores(test_X.size());
        parallel_chunks(test_X.size(), threads, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) scores[i] = fitted.score(test_X[i]);
        });

        FoldResult& fr = report.folds[f];
        fr.confusion = Confusion::from_scores(scores, test_labels, config.threshold);
        fr.metrics = Metrics::from_confusion(fr.confusion);
        fr.auc = roc_auc(scores, test_labels);
        for (std::size_t i = 0; i < scores.size(); ++i) {
            fold_docs[f].push_back(
                {docs[test_orig[i]].doc_id, test_labels[i], scores[i], f});
        }
    }
    for (auto& fd : fold_docs) {
        report.documents.insert(report.documents.end(), fd.begin(), fd.end());
    }
    finalize_report(report, config);
    return report;
}

EvalReport cross_validate(const PipelineConfig& config, std::span<const Cable> corpus,
                          Scenario scenario, int k, std::uint64_t seed, unsigned threads) {
    Tokenizer tok(config.tokenizer);
    std::vector<TokenizedCable> docs = tokenize_corpus(corpus, tok, threads);
    std::vector<Level> levels;
    levels.reserve(corpus.size());
    for (const Cable& c : corpus) {
        if (!c.orig_class) throw DataError("corpus passed to cross_validate must be trainable");
        levels.push_back(*c.orig_class);
    }
    return cross_validate_vectors(config, docs, levels, scenario, k, seed, threads);
}

// --- random search --------------------------------------------------------------

std::string_view to_string(SearchMetric m) {
    switch (m) {
        case SearchMetric::RocAuc: return "roc_auc";
        case SearchMetric::Accuracy: return "accuracy";
        case SearchMetric::F1Macro: return "f1_macro";
    }
    return "?";
}

SearchSpace SearchSpace::defaults() {
    SearchSpace s;
    s.kinds = {ClassifierKind::SgdLogloss, ClassifierKind::LogisticRegression,
               ClassifierKind::Ridge,      ClassifierKind::BaggingTrees,
               ClassifierKind::ExtraTrees, ClassifierKind::AdaBoost,
               ClassifierKind::MultinomialNB};
    return s;
}

namespace {

double sample_param(Rng& rng, const ParamDist& d) {
    return d.log_scale ? rng.log_uniform(d.lo, d.hi) : rng.real(d.lo, d.hi);
}

int sample_int(Rng& rng, const IntDist& d) {
    return static_cast<int>(rng.int_in(d.lo, d.hi));
}

ClassifierSpec sample_spec(Rng& rng, const SearchSpace& space, std::uint64_t seed) {
    ClassifierSpec spec;
    spec.kind = space.kinds[rng.below(space.kinds.size())];
    spec.seed = seed;
    // Every knob is drawn regardless of kind so the stream position after a
    // trial does not depend on what was sampled.
    spec.hyper.learning_rate = sample_param(rng, space.learning_rate);
    spec.hyper.l2 = sample_param(rng, space.l2);
    spec.hyper.ridge_lambda = sample_param(rng, space.ridge_lambda);
    spec.hyper.nb_alpha = sample_param(rng, space.nb_alpha);
    spec.hyper.epochs = sample_int(rng, space.epochs);
    spec.hyper.n_trees = sample_int(rng, space.n_trees);
    spec.hyper.max_depth = sample_int(rng, space.max_depth);
    spec.hyper.boost_rounds = sample_int(rng, space.boost_rounds);
    return spec;
}

double metric_value(const EvalReport& report, SearchMetric metric) {
    switch (metric) {
        case SearchMetric::RocAuc: return report.pooled.auc;
        case SearchMetric::Accuracy: return report.pooled.metrics.accuracy;
        case SearchMetric::F1Macro: return report.pooled.metrics.f1_macro;
    }
    return 0;
}

}  // namespace

SearchResult random_search(const SearchSpace& space, int budget, const PipelineConfig& base,
                           std::span<const Cable> subsample, Scenario scenario,
                           SearchMetric metric, int k, std::uint64_t seed, unsigned threads) {
    if (budget < 1) throw UsageError("search budget must be at least 1");
    if (space.kinds.empty()) throw UsageError("search space has no classifier kinds");

    Tokenizer tok(base.tokenizer);
    std::vector<TokenizedCable> docs = tokenize_corpus(subsample, tok, threads);
    std::vector<Level> levels;
    for (const Cable& c : subsample) {
        if (!c.orig_class) throw DataError("search subsample must be trainable");
        levels.push_back(*c.orig_class);
    }

    Rng rng(mix_seed(seed, 0x73656172ull));
    SearchResult result;
    for (int trial = 0; trial < budget; ++trial) {
        ClassifierSpec spec = sample_spec(rng, space, mix_seed(seed, 0x74000000ull + trial));
        PipelineConfig config = base;
        config.single = spec;
        EvalReport report =
            cross_validate_vectors(config, docs, levels, scenario, k, seed, threads);
        double value = metric_value(report, metric);
        result.trials.push_back({spec, value});
        if (trial == 0 || value > result.best_value) {
            result.best = spec;
            result.best_value = value;
        }
    }
    return result;
}

// --- report output --------------------------------------------------------------

nlohmann::json EvalReport::to_json(bool with_documents) const {
    nlohmann::json j;
    j["scenario"] = to_string(scenario);
    j["k"] = k;
    j["seed"] = seed;
    j["threshold"] = threshold;
    auto fold_json = [](const FoldResult& f) {
        nlohmann::json fj;
        fj["confusion"] = {{"tp", f.confusion.tp},
                           {"fp", f.confusion.fp},
                           {"tn", f.confusion.tn},
                           {"fn", f.confusion.fn}};
        fj["metrics"] = f.metrics.to_json();
        fj["roc_auc"] = f.auc;
        return fj;
    };
    auto& folds_json = j["folds"] = nlohmann::json::array();
    for (const auto& f : folds) folds_json.push_back(fold_json(f));
    j["pooled"] = fold_json(pooled);
    j["mean_of_folds"] = mean_of_folds.to_json();
    j["mean_of_folds"]["roc_auc"] = mean_auc;
    auto points = [](const std::vector<std::pair<double, double>>& pts) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [x, y] : pts) arr.push_back({x, y});
        return arr;
    };
    j["curves"] = {{"roc", points(pooled_curves.roc)}, {"pr", points(pooled_curves.pr)}};
    auto pairs = [](const std::vector<std::pair<std::string, double>>& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [id, s] : v) arr.push_back({{"doc_id", id}, {"score", s}});
        return arr;
    };
    j["top_false_positives"] = pairs(top_false_positives);
    j["top_false_negatives"] = pairs(top_false_negatives);
    if (with_documents) {
        auto& docs_json = j["documents"] = nlohmann::json::array();
        for (const DocScore& d : documents) {
            docs_json.push_back({{"doc_id", d.doc_id},
                                 {"label", d.label},
                                 {"score", d.score},
                                 {"fold", d.fold}});
        }
    }
    return j;
}

void EvalReport::write_roc_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "fpr,tpr\n";
    for (const auto& [fpr, tpr] : pooled_curves.roc) {
        out << nlohmann::json(fpr).dump() << ',' << nlohmann::json(tpr).dump() << '\n';
    }
}

void EvalReport::write_pr_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "recall,precision\n";
    for (const auto& [recall, precision] : pooled_curves.pr) {
        out << nlohmann::json(recall).dump() << ',' << nlohmann::json(precision).dump() << '\n';
    }
}

}  // namespace cablesift
