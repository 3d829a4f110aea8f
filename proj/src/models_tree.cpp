#include <algorithm>
#include <cmath>

#include "cablesift/common.hpp"
#include "model_fits.hpp"

namespace cablesift {

namespace {

double feature_value(const SparseVector& x, std::int32_t feature) {
    auto it = std::lower_bound(
        x.entries.begin(), x.entries.end(), static_cast<std::uint32_t>(feature),
        [](const auto& e, std::uint32_t col) { return e.first < col; });
    if (it != x.entries.end() && it->first == static_cast<std::uint32_t>(feature))
        return it->second;
    return 0.0;
}

struct GrowParams {
    int max_depth = 0;   // 0 = unlimited
    int min_leaf = 1;
    int k_features = 0;  // 0 = consider every feature observed in the node
    bool random_cut = false;
    std::uint32_t width = 0;
};

struct ClassMass {
    double pos = 0, neg = 0;
    std::uint32_t count = 0;

    void add(int label, double w) {
        if (label == 1) pos += w; else neg += w;
        ++count;
    }
    double total() const { return pos + neg; }
};

// Weighted Gini impurity mass: W * (1 - sum_c p_c^2), written without the
// division by W.
double gini_mass(const ClassMass& m) {
    double t = m.total();
    if (t <= 0) return 0;
    return t - (m.pos * m.pos + m.neg * m.neg) / t;
}

struct SplitChoice {
    bool found = false;
    std::int32_t feature = -1;
    double threshold = 0;
    double impurity = 0;  // children impurity mass; lower is better
};

struct BucketEntry {
    double value;
    double weight;
    int label;
};

// Grows one tree. The per-node feature buckets use epoch-tagged flat arrays
// instead of hash maps: a column's bucket slot and the sampled-feature mask
// are O(1) array probes, reset by bumping the epoch.
class TreeGrower {
  public:
    TreeGrower(std::span<const SparseVector> X, std::span<const int> y,
               std::span<const double> w, const GrowParams& params, Rng& rng)
        : X_(X),
          y_(y),
          w_(w),
          params_(params),
          rng_(rng),
          slot_epoch_(params.width, 0),
          slot_of_col_(params.width, 0),
          mask_epoch_(params.width, 0) {}

    Tree grow(std::vector<std::uint32_t> root_rows) {
        Tree tree;
        struct Work {
            std::int32_t node;
            std::vector<std::uint32_t> rows;
            int depth;
        };
        std::vector<Work> stack;
        tree.nodes.emplace_back();
        stack.push_back({0, std::move(root_rows), 0});

        while (!stack.empty()) {
            Work work = std::move(stack.back());
            stack.pop_back();
            TreeNode& node = tree.nodes[work.node];

            ClassMass mass;
            for (std::uint32_t r : work.rows) mass.add(y_[r], w_[r]);
            node.pos_weight = mass.pos;
            node.neg_weight = mass.neg;

            bool can_split = mass.pos > 0 && mass.neg > 0 &&
                             work.rows.size() >= 2 * static_cast<std::size_t>(params_.min_leaf) &&
                             (params_.max_depth == 0 || work.depth < params_.max_depth);
            SplitChoice split;
            if (can_split) split = find_split(work.rows, mass);
            if (!split.found) continue;  // node stays a leaf (feature == -1)

            node.feature = split.feature;
            node.threshold = split.threshold;

            std::vector<std::uint32_t> left, right;
            left.reserve(work.rows.size());
            for (std::uint32_t r : work.rows) {
                if (feature_value(X_[r], split.feature) < split.threshold) {
                    left.push_back(r);
                } else {
                    right.push_back(r);
                }
            }
            node.left = static_cast<std::int32_t>(tree.nodes.size());
            node.right = node.left + 1;
            int depth = work.depth + 1;
            std::int32_t left_id = node.left, right_id = node.right;
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            stack.push_back({right_id, std::move(right), depth});
            stack.push_back({left_id, std::move(left), depth});
        }
        return tree;
    }

  private:
    // Fills touched_cols_/buckets_ with this node's nonzero entries, keeping
    // only masked features when a mask is active.
    void gather(const std::vector<std::uint32_t>& rows, bool use_mask) {
        ++epoch_;
        touched_cols_.clear();
        for (std::uint32_t r : rows) {
            for (const auto& [col, value] : X_[r].entries) {
                if (use_mask && mask_epoch_[col] != epoch_) continue;
                if (slot_epoch_[col] != epoch_) {
                    slot_epoch_[col] = epoch_;
                    std::uint32_t slot = static_cast<std::uint32_t>(touched_cols_.size());
                    slot_of_col_[col] = slot;
                    touched_cols_.push_back(col);
                    if (slot >= buckets_.size()) buckets_.emplace_back();
                    buckets_[slot].clear();
                }
                buckets_[slot_of_col_[col]].push_back({value, w_[r], y_[r]});
            }
        }
    }

    SplitChoice find_split(const std::vector<std::uint32_t>& rows, const ClassMass& node_mass) {
        bool use_mask = params_.k_features > 0 &&
                        static_cast<std::uint32_t>(params_.k_features) < params_.width;
        std::vector<std::uint32_t> sampled;
        if (use_mask) {
            // Floyd's distinct sample; the mask epoch matches the gather pass.
            std::uint32_t k = static_cast<std::uint32_t>(params_.k_features);
            std::uint32_t next_epoch = epoch_ + 1;
            sampled.reserve(k);
            for (std::uint32_t j = params_.width - k; j < params_.width; ++j) {
                std::uint32_t t = static_cast<std::uint32_t>(rng_.below(j + 1));
                std::uint32_t pick = mask_epoch_[t] == next_epoch ? j : t;
                mask_epoch_[pick] = next_epoch;
                sampled.push_back(pick);
            }
        }
        gather(rows, use_mask);
        std::sort(touched_cols_.begin(), touched_cols_.end());

        SplitChoice best;
        for (std::uint32_t col : touched_cols_) {
            auto& bucket = buckets_[slot_of_col_[col]];
            if (params_.random_cut) {
                eval_random_cut(col, bucket, rows.size(), node_mass, best);
            } else {
                eval_exact(col, bucket, rows.size(), node_mass, best);
            }
        }
        return best;
    }

    // All-midpoint scan over the distinct observed values of one feature,
    // absent entries counting as zeros. Only strict improvements replace the
    // incumbent, so ties resolve to the lowest feature then lowest threshold.
    void eval_exact(std::uint32_t col, std::vector<BucketEntry>& bucket, std::size_t n_rows,
                    const ClassMass& node_mass, SplitChoice& best) const {
        std::sort(bucket.begin(), bucket.end(),
                  [](const BucketEntry& a, const BucketEntry& b) { return a.value < b.value; });
        ClassMass explicit_mass;
        for (const BucketEntry& e : bucket) explicit_mass.add(e.label, e.weight);

        std::uint32_t zero_count = static_cast<std::uint32_t>(n_rows) - explicit_mass.count;
        ClassMass zero_mass;
        zero_mass.pos = node_mass.pos - explicit_mass.pos;
        zero_mass.neg = node_mass.neg - explicit_mass.neg;
        zero_mass.count = zero_count;

        // Walk the merged value groups in ascending order; the zero group
        // slots in before the first positive value (vector values are
        // nonnegative).
        ClassMass left;
        double prev_value = 0;
        bool have_prev = false;
        auto advance = [&](double value, const ClassMass& group) {
            if (have_prev) {
                double mid = 0.5 * (prev_value + value);
                if (mid > prev_value && mid < value) {
                    consider(col, mid, left, node_mass, n_rows, best);
                }
            }
            left.pos += group.pos;
            left.neg += group.neg;
            left.count += group.count;
            prev_value = value;
            have_prev = true;
        };

        std::size_t i = 0;
        bool zero_pending = zero_count > 0;
        while (i < bucket.size()) {
            std::size_t j = i;
            ClassMass group;
            double value = bucket[i].value;
            while (j < bucket.size() && bucket[j].value == value) {
                group.add(bucket[j].label, bucket[j].weight);
                ++j;
            }
            if (zero_pending && 0.0 < value) {
                advance(0.0, zero_mass);
                zero_pending = false;
            }
            if (zero_pending && value == 0.0) {
                group.pos += zero_mass.pos;
                group.neg += zero_mass.neg;
                group.count += zero_mass.count;
                zero_pending = false;
            }
            advance(value, group);
            i = j;
        }
        if (zero_pending) advance(0.0, zero_mass);
    }

    void eval_random_cut(std::uint32_t col, const std::vector<BucketEntry>& bucket,
                         std::size_t n_rows, const ClassMass& node_mass, SplitChoice& best) {
        if (bucket.empty()) return;  // constant zero in this node
        bool has_zero = bucket.size() < n_rows;
        double vmin = has_zero ? 0.0 : bucket.front().value;
        double vmax = vmin;
        for (const BucketEntry& e : bucket) {
            vmin = std::min(vmin, e.value);
            vmax = std::max(vmax, e.value);
        }
        if (vmax <= vmin) return;  // constant within the node
        double cut = rng_.real(vmin, vmax);
        if (!(cut > vmin)) return;  // degenerate draw would leave a side empty

        ClassMass left;
        for (const BucketEntry& e : bucket) {
            if (e.value < cut) left.add(e.label, e.weight);
        }
        if (has_zero && 0.0 < cut) {
            ClassMass explicit_mass;
            for (const BucketEntry& e : bucket) explicit_mass.add(e.label, e.weight);
            left.pos += node_mass.pos - explicit_mass.pos;
            left.neg += node_mass.neg - explicit_mass.neg;
            left.count += static_cast<std::uint32_t>(n_rows) - explicit_mass.count;
        }
        consider(col, cut, left, node_mass, n_rows, best);
    }

    void consider(std::uint32_t col, double threshold, const ClassMass& left,
                  const ClassMass& node_mass, std::size_t n_rows, SplitChoice& best) const {
        std::uint32_t right_count = static_cast<std::uint32_t>(n_rows) - left.count;
        if (left.count < static_cast<std::uint32_t>(params_.min_leaf) ||
            right_count < static_cast<std::uint32_t>(params_.min_leaf))
            return;
        ClassMass right;
        right.pos = node_mass.pos - left.pos;
        right.neg = node_mass.neg - left.neg;
        right.count = right_count;
        double impurity = gini_mass(left) + gini_mass(right);
        if (!best.found || impurity < best.impurity) {
            best.found = true;
            best.feature = static_cast<std::int32_t>(col);
            best.threshold = threshold;
            best.impurity = impurity;
        }
    }

    std::span<const SparseVector> X_;
    std::span<const int> y_;
    std::span<const double> w_;
    GrowParams params_;
    Rng& rng_;

    std::uint32_t epoch_ = 0;
    std::vector<std::uint32_t> slot_epoch_;
    std::vector<std::uint32_t> slot_of_col_;
    std::vector<std::uint32_t> mask_epoch_;
    std::vector<std::uint32_t> touched_cols_;
    std::vector<std::vector<BucketEntry>> buckets_;
};

Tree grow_tree(std::span<const SparseVector> X, std::span<const int> y,
               std::span<const double> w, std::vector<std::uint32_t> rows,
               const GrowParams& params, Rng& rng) {
    return TreeGrower(X, y, w, params, rng).grow(std::move(rows));
}

// Bootstrap draw folded into per-row weights (a row drawn twice weighs 2x).
std::vector<std::uint32_t> bootstrap_rows(std::size_t n, Rng& rng, std::vector<double>& weights,
                                          std::span<const double> base_weights) {
    std::vector<std::uint32_t> counts(n, 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[rng.below(n)];
    std::vector<std::uint32_t> rows;
    rows.reserve(n);
    weights.assign(n, 0.0);
    for (std::uint32_t r = 0; r < n; ++r) {
        if (counts[r] == 0) continue;
        rows.push_back(r);
        weights[r] = counts[r] * (base_weights.empty() ? 1.0 : base_weights[r]);
    }
    return rows;
}

int default_k_features(std::uint32_t width) {
    auto k = static_cast<int>(std::floor(std::sqrt(static_cast<double>(width))));
    return std::max(1, k);
}

ForestState fit_forest(std::span<const SparseVector> X, std::span<const int> y,
                       std::span<const double> base_weights, int n_trees,
                       const GrowParams& params, bool bootstrap, std::uint64_t seed,
                       unsigned threads) {
    ForestState forest;
    forest.trees.resize(n_trees);
    parallel_for(static_cast<std::size_t>(n_trees), threads, [&](std::size_t t) {
        Rng rng(mix_seed(seed, t));
        std::vector<double> weights;
        std::vector<std::uint32_t> rows;
        if (bootstrap) {
            rows = bootstrap_rows(X.size(), rng, weights, base_weights);
        } else {
            rows.resize(X.size());
            for (std::size_t i = 0; i < X.size(); ++i) rows[i] = static_cast<std::uint32_t>(i);
            if (base_weights.empty()) {
                weights.assign(X.size(), 1.0);
            } else {
                weights.assign(base_weights.begin(), base_weights.end());
            }
        }
        forest.trees[t] = grow_tree(X, y, weights, std::move(rows), params, rng);
    });
    return forest;
}

}  // namespace

int Tree::predict(const SparseVector& x) const {
    std::size_t at = 0;
    while (!nodes[at].is_leaf()) {
        const TreeNode& n = nodes[at];
        at = feature_value(x, n.feature) < n.threshold ? n.left : n.right;
    }
    const TreeNode& leaf = nodes[at];
    return leaf.pos_weight >= leaf.neg_weight ? 1 : 0;
}

double ForestState::positive_fraction(const SparseVector& x) const {
    if (trees.empty()) return 0.5;
    std::size_t pos = 0;
    for (const Tree& t : trees) pos += t.predict(x);
    return static_cast<double>(pos) / static_cast<double>(trees.size());
}

int ForestState::predict(const SparseVector& x) const {
    return positive_fraction(x) >= 0.5 ? 1 : 0;
}

namespace detail {

ForestState fit_bagging(const ClassifierSpec& spec, std::span<const SparseVector> X,
                        std::span<const int> y, std::uint32_t width, unsigned threads) {
    GrowParams params;
    params.max_depth = spec.hyper.max_depth;
    params.min_leaf = spec.hyper.min_leaf;
    params.k_features = 0;  // exact greedy over all observed features
    params.width = width;
    return fit_forest(X, y, {}, spec.hyper.n_trees, params, /*bootstrap=*/true,
                      mix_seed(spec.seed, 0x62616767ull), threads);
}

ForestState fit_extra_trees(const ClassifierSpec& spec, std::span<const SparseVector> X,
                            std::span<const int> y, std::uint32_t width, unsigned threads) {
    GrowParams params;
    params.max_depth = spec.hyper.max_depth;
    params.min_leaf = spec.hyper.min_leaf;
    params.k_features =
        spec.hyper.k_features > 0 ? spec.hyper.k_features : default_k_features(width);
    params.random_cut = true;
    params.width = width;
    return fit_forest(X, y, {}, spec.hyper.n_trees, params, /*bootstrap=*/false,
                      mix_seed(spec.seed, 0x65787472ull), threads);
}

// SAMME with a small depth-limited random forest as the weighted base
// learner; the binary stage weight is ln((1-err)/err).
BoostState fit_adaboost(const ClassifierSpec& spec, std::span<const SparseVector> X,
                        std::span<const int> y, std::uint32_t width, unsigned threads) {
    const Hyper& h = spec.hyper;
    const std::size_t n = X.size();
    BoostState boost;
    std::vector<double> sample_weights(n, 1.0 / static_cast<double>(n));

    GrowParams params;
    params.max_depth = h.base_depth;
    params.min_leaf = h.min_leaf;
    params.k_features = h.k_features > 0 ? h.k_features : default_k_features(width);
    params.width = width;

    constexpr double kErrFloor = 1e-10;
    for (int round = 0; round < h.boost_rounds; ++round) {
        std::uint64_t round_seed = mix_seed(spec.seed, 0x61646100ull + round);
        ForestState base = fit_forest(X, y, sample_weights, h.base_trees, params,
                                      /*bootstrap=*/true, round_seed, threads);
        std::vector<int> pred(n);
        parallel_chunks(n, threads, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) pred[i] = base.predict(X[i]);
        });
        double err = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (pred[i] != y[i]) err += sample_weights[i];
        }
        if (err >= 0.5) {
            // No better than chance: stop, keeping the learner only when it
            // is the sole one so scoring stays defined.
            if (boost.bases.empty()) {
                boost.bases.push_back(std::move(base));
                boost.stage_weights.push_back(0.0);
            }
            break;
        }
        err = std::max(err, kErrFloor);
        double alpha = std::log((1.0 - err) / err);
        boost.bases.push_back(std::move(base));
        boost.stage_weights.push_back(alpha);
        if (err <= kErrFloor) break;  // already separates the training set

        double total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (pred[i] != y[i]) sample_weights[i] *= std::exp(alpha);
            total += sample_weights[i];
        }
        for (double& w : sample_weights) w /= total;
    }
    return boost;
}

}  // namespace detail
}  // namespace cablesift
