#include "cablesift/models.hpp"

#include <algorithm>
#include <cmath>

#include "cablesift/common.hpp"
#include "model_fits.hpp"

namespace cablesift {

const std::array<ClassifierKind, 7> kEnsembleKinds = {
    ClassifierKind::SgdLogloss,   ClassifierKind::LogisticRegression,
    ClassifierKind::Ridge,        ClassifierKind::BaggingTrees,
    ClassifierKind::ExtraTrees,   ClassifierKind::AdaBoost,
    ClassifierKind::MultinomialNB,
};
const std::array<double, 7> kEnsembleWeights = {2, 2, 1, 1, 1, 1, 1};

std::string_view to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::SgdLogloss: return "sgd_logloss";
        case ClassifierKind::LogisticRegression: return "logistic_regression";
        case ClassifierKind::Ridge: return "ridge";
        case ClassifierKind::BaggingTrees: return "bagging_trees";
        case ClassifierKind::ExtraTrees: return "extra_trees";
        case ClassifierKind::AdaBoost: return "adaboost";
        case ClassifierKind::MultinomialNB: return "multinomial_nb";
    }
    return "?";
}

std::optional<ClassifierKind> parse_classifier_kind(std::string_view s) {
    for (std::size_t i = 0; i < kClassifierKindCount; ++i) {
        auto k = static_cast<ClassifierKind>(i);
        if (s == to_string(k)) return k;
    }
    return std::nullopt;
}

ClassifierSpec ClassifierSpec::defaults(ClassifierKind kind, std::uint64_t seed) {
    ClassifierSpec spec;
    spec.kind = kind;
    spec.seed = seed;
    return spec;
}

void ClassifierSpec::validate() const {
    const Hyper& h = hyper;
    if (h.learning_rate <= 0 || h.l2 <= 0 || h.ridge_lambda <= 0 || h.nb_alpha <= 0)
        throw UsageError("rates, regularization strengths and alpha must be positive");
    if (h.epochs < 1 || h.n_trees < 1 || h.boost_rounds < 1 || h.base_trees < 1)
        throw UsageError("epochs, tree counts and boosting rounds must be at least 1");
    if (h.min_leaf < 1) throw UsageError("min_leaf must be at least 1");
    if (h.max_depth < 0 || h.base_depth < 1) throw UsageError("invalid tree depth");
}

namespace {

std::uint32_t check_training_data(std::span<const SparseVector> X, std::span<const int> y) {
    if (X.size() != y.size()) throw UsageError("X and y sizes differ");
    if (X.size() < 2) throw DataError("need at least two training rows");
    std::uint32_t width = X.front().width;
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < X.size(); ++i) {
        if (X[i].width != width) throw DataError("training rows have mixed widths");
        for (const auto& [col, v] : X[i].entries) {
            if (col >= width) throw DataError("feature column out of range");
            if (!std::isfinite(v)) throw DataError("non-finite feature value");
        }
        (y[i] == 1 ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) throw DataError("training labels contain a single class");
    if (width == 0) throw DataError("feature space has zero width");
    return width;
}

double linear_score(const LinearState& s, const SparseVector& x) {
    double z = s.bias;
    for (const auto& [col, v] : x.entries) z += s.weights[col] * v;
    return sigmoid(z);
}

std::array<double, 2> nb_scores(const NaiveBayesState& s, const SparseVector& x) {
    std::array<double, 2> joint = s.log_prior;
    for (const auto& [col, v] : x.entries) {
        joint[0] += v * s.log_like[0][col];
        joint[1] += v * s.log_like[1][col];
    }
    double m = std::max(joint[0], joint[1]);
    double z0 = std::exp(joint[0] - m), z1 = std::exp(joint[1] - m);
    return {z0 / (z0 + z1), z1 / (z0 + z1)};
}

double boost_score(const BoostState& s, const SparseVector& x) {
    double total = 0, vote = 0;
    for (std::size_t m = 0; m < s.bases.size(); ++m) {
        total += s.stage_weights[m];
        if (s.bases[m].predict(x) == 1) vote += s.stage_weights[m];
    }
    if (total <= 0) return 0.5;
    return vote / total;
}

}  // namespace

std::array<double, 2> nb_posteriors(const TrainedClassifier& model, const SparseVector& x) {
    const auto* nb = std::get_if<NaiveBayesState>(&model.state);
    if (!nb) throw UsageError("nb_posteriors requires a multinomial_nb model");
    return nb_scores(*nb, x);
}

double TrainedClassifier::decision_score(const SparseVector& x) const {
    if (x.width != width) throw UsageError("input width does not match the model");
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LinearState>) {
                return linear_score(s, x);
            } else if constexpr (std::is_same_v<T, NaiveBayesState>) {
                return nb_scores(s, x)[1];
            } else if constexpr (std::is_same_v<T, ForestState>) {
                return s.positive_fraction(x);
            } else {
                return boost_score(s, x);
            }
        },
        state);
}

TrainedClassifier fit(const ClassifierSpec& spec, std::span<const SparseVector> X,
                      std::span<const int> y, unsigned threads) {
    spec.validate();
    std::uint32_t width = check_training_data(X, y);
    TrainedClassifier model;
    model.spec = spec;
    model.width = width;
    switch (spec.kind) {
        case ClassifierKind::SgdLogloss:
        case ClassifierKind::LogisticRegression:
            model.state = detail::fit_logistic_sgd(spec, X, y, width);
            break;
        case ClassifierKind::Ridge:
            model.state = detail::fit_ridge(spec, X, y, width);
            break;
        case ClassifierKind::BaggingTrees:
            model.state = detail::fit_bagging(spec, X, y, width, threads);
            break;
        case ClassifierKind::ExtraTrees:
            model.state = detail::fit_extra_trees(spec, X, y, width, threads);
            break;
        case ClassifierKind::AdaBoost:
            model.state = detail::fit_adaboost(spec, X, y, width, threads);
            break;
        case ClassifierKind::MultinomialNB:
            model.state = detail::fit_multinomial_nb(spec, X, y, width);
            break;
    }
    return model;
}

EnsembleSpec EnsembleSpec::defaults(std::uint64_t seed) {
    EnsembleSpec spec;
    for (std::size_t i = 0; i < kEnsembleKinds.size(); ++i) {
        spec.members.push_back(ClassifierSpec::defaults(kEnsembleKinds[i], mix_seed(seed, i)));
        spec.weights.push_back(kEnsembleWeights[i]);
    }
    return spec;
}

void EnsembleSpec::validate() const {
    if (members.empty()) throw UsageError("ensemble has no members");
    if (members.size() != weights.size())
        throw UsageError("ensemble members and weights differ in length");
    for (double w : weights) {
        if (!(w > 0)) throw UsageError("ensemble weights must be positive");
    }
    if (threshold < 0 || threshold > 1) throw UsageError("threshold must lie in [0, 1]");
    for (const auto& m : members) m.validate();
}

double TrainedEnsemble::score(const SparseVector& x) const {
    double total = 0, acc = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
        double s = members[i].decision_score(x);
        if (hard_voting) s = s >= 0.5 ? 1.0 : 0.0;
        acc += weights[i] * s;
        total += weights[i];
    }
    return acc / total;
}

void TrainedEnsemble::set_threshold(double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw UsageError("threshold must lie in [0, 1]");
    threshold = t;
}

TrainedEnsemble fit_ensemble(const EnsembleSpec& spec, std::span<const SparseVector> X,
                             std::span<const int> y, unsigned threads) {
    spec.validate();
    check_training_data(X, y);
    TrainedEnsemble ensemble;
    ensemble.members.resize(spec.members.size());
    ensemble.weights = spec.weights;
    ensemble.threshold = spec.threshold;
    ensemble.hard_voting = spec.hard_voting;
    // One member at a time; the trees inside each member fan out across
    // threads, which keeps peak memory at one forest's working set.
    for (std::size_t i = 0; i < spec.members.size(); ++i) {
        ensemble.members[i] = fit(spec.members[i], X, y, threads);
    }
    return ensemble;
}

// --- serialization -----------------------------------------------------------

nlohmann::json Hyper::to_json() const {
    return nlohmann::json{
        {"learning_rate", learning_rate},
        {"epochs", epochs},
        {"l2", l2},
        {"full_batch", full_batch},
        {"ridge_lambda", ridge_lambda},
        {"cg_max_iter", cg_max_iter},
        {"cg_tol", cg_tol},
        {"n_trees", n_trees},
        {"max_depth", max_depth},
        {"min_leaf", min_leaf},
        {"k_features", k_features},
        {"boost_rounds", boost_rounds},
        {"base_trees", base_trees},
        {"base_depth", base_depth},
        {"nb_alpha", nb_alpha},
    };
}

Hyper Hyper::from_json(const nlohmann::json& j) {
    Hyper h;
    h.learning_rate = j.value("learning_rate", h.learning_rate);
    h.epochs = j.value("epochs", h.epochs);
    h.l2 = j.value("l2", h.l2);
    h.full_batch = j.value("full_batch", h.full_batch);
    h.ridge_lambda = j.value("ridge_lambda", h.ridge_lambda);
    h.cg_max_iter = j.value("cg_max_iter", h.cg_max_iter);
    h.cg_tol = j.value("cg_tol", h.cg_tol);
    h.n_trees = j.value("n_trees", h.n_trees);
    h.max_depth = j.value("max_depth", h.max_depth);
    h.min_leaf = j.value("min_leaf", h.min_leaf);
    h.k_features = j.value("k_features", h.k_features);
    h.boost_rounds = j.value("boost_rounds", h.boost_rounds);
    h.base_trees = j.value("base_trees", h.base_trees);
    h.base_depth = j.value("base_depth", h.base_depth);
    h.nb_alpha = j.value("nb_alpha", h.nb_alpha);
    return h;
}

nlohmann::json ClassifierSpec::to_json() const {
    return nlohmann::json{
        {"kind", to_string(kind)}, {"hyper", hyper.to_json()}, {"seed", seed}};
}

ClassifierSpec ClassifierSpec::from_json(const nlohmann::json& j) {
    ClassifierSpec spec;
    auto kind = parse_classifier_kind(j.at("kind").get<std::string>());
    if (!kind) throw DataError("unknown classifier kind");
    spec.kind = *kind;
    if (j.contains("hyper")) spec.hyper = Hyper::from_json(j.at("hyper"));
    spec.seed = j.value("seed", std::uint64_t{0});
    return spec;
}

namespace {

nlohmann::json tree_to_json(const Tree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& n : tree.nodes) {
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.pos_weight, n.neg_weight});
    }
    return nodes;
}

Tree tree_from_json(const nlohmann::json& j) {
    Tree tree;
    for (const auto& n : j) {
        TreeNode node;
        node.feature = n.at(0).get<std::int32_t>();
        node.threshold = n.at(1).get<double>();
        node.left = n.at(2).get<std::int32_t>();
        node.right = n.at(3).get<std::int32_t>();
        node.pos_weight = n.at(4).get<double>();
        node.neg_weight = n.at(5).get<double>();
        tree.nodes.push_back(node);
    }
    return tree;
}

nlohmann::json forest_to_json(const ForestState& forest) {
    nlohmann::json trees = nlohmann::json::array();
    for (const Tree& t : forest.trees) trees.push_back(tree_to_json(t));
    return trees;
}

ForestState forest_from_json(const nlohmann::json& j) {
    ForestState forest;
    for (const auto& t : j) forest.trees.push_back(tree_from_json(t));
    return forest;
}

}  // namespace

nlohmann::json TrainedClassifier::to_json() const {
    nlohmann::json j;
    j["spec"] = spec.to_json();
    j["width"] = width;
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LinearState>) {
                j["state"] = {{"type", "linear"}, {"weights", s.weights}, {"bias", s.bias}};
            } else if constexpr (std::is_same_v<T, NaiveBayesState>) {
                j["state"] = {{"type", "naive_bayes"},
                              {"log_prior", s.log_prior},
                              {"log_like_neg", s.log_like[0]},
                              {"log_like_pos", s.log_like[1]},
                              {"alpha", s.alpha}};
            } else if constexpr (std::is_same_v<T, ForestState>) {
                j["state"] = {{"type", "forest"}, {"trees", forest_to_json(s)}};
            } else {
                nlohmann::json bases = nlohmann::json::array();
                for (const auto& b : s.bases) bases.push_back(forest_to_json(b));
                j["state"] = {{"type", "boost"},
                              {"bases", std::move(bases)},
                              {"stage_weights", s.stage_weights}};
            }
        },
        state);
    return j;
}

TrainedClassifier TrainedClassifier::from_json(const nlohmann::json& j) {
    TrainedClassifier model;
    model.spec = ClassifierSpec::from_json(j.at("spec"));
    model.width = j.at("width").get<std::uint32_t>();
    const nlohmann::json& s = j.at("state");
    std::string type = s.at("type").get<std::string>();
    if (type == "linear") {
        LinearState st;
        st.weights = s.at("weights").get<std::vector<double>>();
        st.bias = s.at("bias").get<double>();
        model.state = std::move(st);
    } else if (type == "naive_bayes") {
        NaiveBayesState st;
        st.log_prior = s.at("log_prior").get<std::array<double, 2>>();
        st.log_like[0] = s.at("log_like_neg").get<std::vector<double>>();
        st.log_like[1] = s.at("log_like_pos").get<std::vector<double>>();
        st.alpha = s.at("alpha").get<double>();
        model.state = std::move(st);
    } else if (type == "forest") {
        model.state = forest_from_json(s.at("trees"));
    } else if (type == "boost") {
        BoostState st;
        for (const auto& b : s.at("bases")) st.bases.push_back(forest_from_json(b));
        st.stage_weights = s.at("stage_weights").get<std::vector<double>>();
        model.state = std::move(st);
    } else {
        throw DataError("unknown model state type \"" + type + "\"");
    }
    return model;
}

nlohmann::json TrainedEnsemble::to_json() const {
    nlohmann::json j;
    j["weights"] = weights;
    j["threshold"] = threshold;
    j["voting"] = hard_voting ? "hard" : "soft";
    auto& members_json = j["members"] = nlohmann::json::array();
    for (const auto& m : members) members_json.push_back(m.to_json());
    return j;
}

TrainedEnsemble TrainedEnsemble::from_json(const nlohmann::json& j) {
    TrainedEnsemble e;
    e.weights = j.at("weights").get<std::vector<double>>();
    e.threshold = j.at("threshold").get<double>();
    e.hard_voting = j.value("voting", "soft") == std::string("hard");
    for (const auto& m : j.at("members")) e.members.push_back(TrainedClassifier::from_json(m));
    if (e.members.size() != e.weights.size())
        throw DataError("ensemble members and weights differ in length");
    return e;
}

}  // namespace cablesift
