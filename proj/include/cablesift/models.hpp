#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cablesift/features.hpp"

namespace cablesift {

enum class ClassifierKind : std::uint8_t {
    SgdLogloss = 0,
    LogisticRegression,
    Ridge,
    BaggingTrees,
    ExtraTrees,
    AdaBoost,
    MultinomialNB,
};
inline constexpr std::size_t kClassifierKindCount = 7;
std::string_view to_string(ClassifierKind kind);
std::optional<ClassifierKind> parse_classifier_kind(std::string_view s);

// Superset of hyperparameters; each kind reads the ones it uses.
struct Hyper {
    // logistic loss (sgd_logloss, logistic_regression)
    double learning_rate = 0.1;  // decays as 1/sqrt(epoch)
    int epochs = 20;
    double l2 = 1e-4;
    bool full_batch = false;  // logistic_regression only: full-batch gradient descent

    // ridge
    double ridge_lambda = 1.0;
    int cg_max_iter = 1000;
    double cg_tol = 1e-10;

    // forests (bagging_trees, extra_trees)
    int n_trees = 100;
    int max_depth = 0;   // 0 = unlimited
    int min_leaf = 1;
    int k_features = 0;  // 0 = all for bagging, floor(sqrt(width)) for extra_trees

    // adaboost: SAMME over small random forests
    int boost_rounds = 50;
    int base_trees = 10;
    int base_depth = 3;

    // multinomial naive bayes
    double nb_alpha = 1.0;

    nlohmann::json to_json() const;
    static Hyper from_json(const nlohmann::json& j);
};

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::SgdLogloss;
    Hyper hyper;
    std::uint64_t seed = 0;

    static ClassifierSpec defaults(ClassifierKind kind, std::uint64_t seed);
    void validate() const;
    nlohmann::json to_json() const;
    static ClassifierSpec from_json(const nlohmann::json& j);
};

// --- learned state ------------------------------------------------------------

struct LinearState {
    std::vector<double> weights;
    double bias = 0.0;
};

struct NaiveBayesState {
    std::array<double, 2> log_prior{};
    std::array<std::vector<double>, 2> log_like;  // per class, per feature
    double alpha = 1.0;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // value < threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    double pos_weight = 0.0;  // leaf class mass
    double neg_weight = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;

    // Majority label of the reached leaf; ties go to the positive class.
    int predict(const SparseVector& x) const;
};

struct ForestState {
    std::vector<Tree> trees;

    int predict(const SparseVector& x) const;  // majority vote over trees
    double positive_fraction(const SparseVector& x) const;
};

struct BoostState {
    std::vector<ForestState> bases;
    std::vector<double> stage_weights;
};

class TrainedClassifier {
  public:
    ClassifierSpec spec;
    std::uint32_t width = 0;
    std::variant<LinearState, NaiveBayesState, ForestState, BoostState> state;

    // Probability-like score for the positive class in [0, 1].
    double decision_score(const SparseVector& x) const;

    nlohmann::json to_json() const;
    static TrainedClassifier from_json(const nlohmann::json& j);
};

// Both-class posteriors of a fitted naive Bayes model; they sum to 1.
std::array<double, 2> nb_posteriors(const TrainedClassifier& model, const SparseVector& x);

// Fits one classifier. Requires both classes present, at least two rows, and
// finite feature values. Tree growth parallelizes across trees with per-tree
// seeds, so the result does not depend on the thread count.
TrainedClassifier fit(const ClassifierSpec& spec, std::span<const SparseVector> X,
                      std::span<const int> y, unsigned threads = 1);

// --- ensemble -----------------------------------------------------------------

// Fixed member order and voting weights of the default ensemble.
extern const std::array<ClassifierKind, 7> kEnsembleKinds;
extern const std::array<double, 7> kEnsembleWeights;

struct EnsembleSpec {
    std::vector<ClassifierSpec> members;
    std::vector<double> weights;
    double threshold = 0.5;
    bool hard_voting = false;

    static EnsembleSpec defaults(std::uint64_t seed);
    void validate() const;
};

struct TrainedEnsemble {
    std::vector<TrainedClassifier> members;
    std::vector<double> weights;
    double threshold = 0.5;
    bool hard_voting = false;

    // Weighted mean of member scores (soft voting); with hard voting each
    // member contributes 0/1 at its own 0.5 cut.
    double score(const SparseVector& x) const;
    // Positive iff score >= threshold: ties resolve toward the sensitive class.
    bool predict(const SparseVector& x) const { return score(x) >= threshold; }
    void set_threshold(double t);

    nlohmann::json to_json() const;
    static TrainedEnsemble from_json(const nlohmann::json& j);
};

TrainedEnsemble fit_ensemble(const EnsembleSpec& spec, std::span<const SparseVector> X,
                             std::span<const int> y, unsigned threads = 1);

// --- shared numeric helpers ----------------------------------------------------

double sigmoid(double z);

// Mean L2-regularized logistic loss over (X, y) with y in {0,1}; the bias is
// not penalized. Used by the full-batch mode and by gradient checks.
double logistic_loss(std::span<const double> weights, double bias,
                     std::span<const SparseVector> X, std::span<const int> y, double l2);
void logistic_loss_grad(std::span<const double> weights, double bias,
                        std::span<const SparseVector> X, std::span<const int> y, double l2,
                        std::vector<double>& grad_w, double& grad_b);

}  // namespace cablesift
