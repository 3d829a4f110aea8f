#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cablesift/corpus.hpp"
#include "cablesift/features.hpp"
#include "cablesift/models.hpp"

namespace cablesift {

// Binary groupings of the four levels. The positive class (1) is always the
// more-classified side; U_vs_CS drops Limited Official Use entirely.
enum class Scenario : std::uint8_t { U_vs_LCS = 0, UL_vs_CS, ULC_vs_S, U_vs_CS };
inline constexpr std::size_t kScenarioCount = 4;
std::string_view to_string(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view s);

// Label for a level under a scenario; nullopt means the record is excluded.
std::optional<int> scenario_label(Level level, Scenario s);
// Human-readable group names, e.g. {"U", "C,S"}.
std::pair<std::string, std::string> scenario_group_names(Scenario s);

struct BinarizeResult {
    std::vector<int> labels;
    std::vector<std::size_t> kept;  // indices into the input sequence
};
BinarizeResult binarize(std::span<const Level> levels, Scenario s);

// Seeded shuffle within each class, then round-robin assignment: per-class
// fold sizes differ by at most one. Throws if any class has fewer than k.
std::vector<int> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

// Rank-sum AUC with midrank tie handling; equals the trapezoidal area under
// the ROC curve. Throws if only one class is present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct Curves {
    std::vector<std::pair<double, double>> roc;  // (fpr, tpr)
    std::vector<std::pair<double, double>> pr;   // (recall, precision)
};
// One point per distinct score plus endpoints.
Curves curves(std::span<const double> scores, std::span<const int> labels);

double trapezoid_area(const std::vector<std::pair<double, double>>& points);

struct Confusion {
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
    static Confusion from_scores(std::span<const double> scores, std::span<const int> labels,
                                 double threshold);
    Confusion& operator+=(const Confusion& o);
};

struct Metrics {
    double accuracy = 0;
    double precision0 = 0, precision1 = 0;
    double recall0 = 0, recall1 = 0;
    double f1_0 = 0, f1_1 = 0;
    double f1_macro = 0;
    double f1_weighted = 0;  // support-weighted mean of per-class f1

    static Metrics from_confusion(const Confusion& c);
    nlohmann::json to_json() const;
};

struct DocScore {
    std::string doc_id;
    int label = 0;
    double score = 0;
    int fold = 0;
};

struct FoldResult {
    Confusion confusion;
    Metrics metrics;
    double auc = 0;
};

struct EvalReport {
    Scenario scenario = Scenario::U_vs_CS;
    int k = 3;
    std::uint64_t seed = 0;
    double threshold = 0.5;
    std::vector<FoldResult> folds;
    FoldResult pooled;        // metrics from the pooled confusion and scores
    Metrics mean_of_folds;    // the paper-style mean across folds
    double mean_auc = 0;
    Curves pooled_curves;
    std::vector<DocScore> documents;  // evaluated docs with out-of-fold scores
    std::vector<std::pair<std::string, double>> top_false_positives;
    std::vector<std::pair<std::string, double>> top_false_negatives;

    nlohmann::json to_json(bool with_documents = true) const;
    void write_roc_csv(const std::string& path) const;
    void write_pr_csv(const std::string& path) const;
};

enum class MisDirection { FalsePositive, FalseNegative };
// False positives sorted by descending score, false negatives ascending.
std::vector<std::pair<std::string, double>> rank_misclassified(const EvalReport& report,
                                                               MisDirection direction,
                                                               std::size_t n);

// Classification markers embedded in the message text itself (standalone
// lines like "SECRET"); the highest level found wins. Used to flag
// disagreements between metadata and body in error reports.
std::optional<Level> detect_embedded_marker(std::string_view body);

struct PipelineConfig {
    TokenizerConfig tokenizer = TokenizerConfig::defaults();
    std::vector<FieldConfig> fields = default_field_configs();
    // When set, cross-validation fits this single classifier instead of the
    // seven-member ensemble.
    std::optional<ClassifierSpec> single;
    double threshold = 0.5;
    bool hard_voting = false;
    // Build vocabularies on the whole corpus instead of per training fold.
    bool global_vocab = false;
    std::size_t top_n = 50;
};

// Stratified k-fold cross-validation of the full pipeline. Feature spaces
// are rebuilt per fold from the training folds only unless global_vocab.
EvalReport cross_validate(const PipelineConfig& config, std::span<const Cable> corpus,
                          Scenario scenario, int k, std::uint64_t seed, unsigned threads = 1);

// Same splits/metrics for callers that already vectorized (test support).
EvalReport cross_validate_vectors(const PipelineConfig& config,
                                  std::span<const TokenizedCable> docs,
                                  std::span<const Level> levels, Scenario scenario, int k,
                                  std::uint64_t seed, unsigned threads = 1);

enum class SearchMetric { RocAuc, Accuracy, F1Macro };
std::string_view to_string(SearchMetric m);

struct ParamDist {
    double lo = 0, hi = 0;
    bool log_scale = false;
};
struct IntDist {
    int lo = 0, hi = 0;
};

struct SearchSpace {
    std::vector<ClassifierKind> kinds;
    ParamDist learning_rate{1e-3, 1.0, true};
    ParamDist l2{1e-6, 1e-1, true};
    ParamDist ridge_lambda{1e-2, 1e2, true};
    ParamDist nb_alpha{1e-2, 10.0, true};
    IntDist epochs{5, 30};
    IntDist n_trees{20, 150};
    IntDist max_depth{0, 16};
    IntDist boost_rounds{10, 60};

    static SearchSpace defaults();
};

struct SearchTrial {
    ClassifierSpec spec;
    double value = 0;
};

struct SearchResult {
    ClassifierSpec best;
    double best_value = 0;
    std::vector<SearchTrial> trials;
};

// Samples `budget` specs, scores each by cross_validate on the supplied
// corpus (typically a subsample), and returns the argmax. Deterministic
// under the seed; ties keep the earliest trial.
SearchResult random_search(const SearchSpace& space, int budget, const PipelineConfig& base,
                           std::span<const Cable> subsample, Scenario scenario,
                           SearchMetric metric, int k, std::uint64_t seed,
                           unsigned threads = 1);

}  // namespace cablesift
