#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ordrisk/cart.hpp"
#include "ordrisk/error.hpp"
#include "ordrisk/parallel.hpp"
#include "ordrisk/rng.hpp"

namespace ordrisk {

struct ForestOptions {
    std::size_t trees = 500;
    /// Threads used to grow trees; output does not depend on it.
    std::size_t workers = 1;
};

/// floor(sqrt(P)), at least 1.
inline std::size_t default_feature_subset(std::size_t predictors) {
    auto m = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(predictors))));
    while ((m + 1) * (m + 1) <= predictors) ++m; // guard against sqrt rounding
    while (m > 0 && m * m > predictors) --m;
    return std::max<std::size_t>(1, m);
}

/// Bagged binary classification trees with per-split predictor subsampling.
class RandomForest {
public:
    RandomForest() = default;
    RandomForest(std::vector<DecisionTree> trees, std::size_t feature_subset, std::size_t predictors,
                 std::uint64_t seed)
        : trees_(std::move(trees)), feature_subset_(feature_subset), predictors_(predictors), seed_(seed) {}

    std::span<const DecisionTree> trees() const noexcept { return trees_; }
    std::size_t size() const noexcept { return trees_.size(); }
    std::size_t feature_subset_size() const noexcept { return feature_subset_; }
    std::size_t predictor_count() const noexcept { return predictors_; }
    std::uint64_t seed() const noexcept { return seed_; }

    /// Number of trees whose leaf majority is the positive class (leaf ties count as positive).
    std::size_t positive_votes(std::span<const double> x) const {
        std::size_t votes = 0;
        for (const auto& tree : trees_)
            if (tree.predict(x) >= 0.5) ++votes;
        return votes;
    }

    /// Fraction of trees voting positive.
    double predict_proba(std::span<const double> x) const {
        return static_cast<double>(positive_votes(x)) / static_cast<double>(trees_.size());
    }

    /// Class decision; a 0.5 vote tie resolves to positive.
    bool predict_class(std::span<const double> x) const { return 2 * positive_votes(x) >= trees_.size(); }

    friend bool operator==(const RandomForest&, const RandomForest&) = default;

private:
    std::vector<DecisionTree> trees_;
    std::size_t feature_subset_ = 1;
    std::size_t predictors_ = 0;
    std::uint64_t seed_ = 0;
};

/// Fits B trees, each on its own bootstrap resample with its own rng stream
/// derived from (seed, b). Trees use leaf size 1 and floor(sqrt(P)) candidate
/// predictors per split.
inline RandomForest fit_forest(const RowMatrix& x, std::span<const std::uint8_t> labels, std::uint64_t seed,
                               const ForestOptions& options = {}) {
    if (x.rows() == 0) throw FitError("random forest: no training rows");
    if (labels.size() != x.rows()) throw std::invalid_argument("fit_forest: label count does not match row count");
    if (options.trees < 1) throw std::invalid_argument("fit_forest: need at least one tree");
    std::size_t positives = 0;
    for (auto l : labels) positives += l != 0;
    if (positives == 0 || positives == labels.size()) throw FitError("random forest: training labels are single-class");

    std::vector<double> targets(labels.begin(), labels.end());
    for (auto& t : targets) t = t != 0.0 ? 1.0 : 0.0;
    const TreeOptions tree_options{TreeMode::classify, 1, default_feature_subset(x.cols())};
    const std::size_t n = x.rows();

    std::vector<DecisionTree> trees(options.trees);
    parallel_for(options.trees, options.workers, [&](std::size_t b) {
        Rng rng(derive_seed(seed, {b}));
        std::vector<std::size_t> sample(n);
        for (auto& s : sample) s = static_cast<std::size_t>(rng.uniform_index(n));
        trees[b] = grow_tree(x, targets, sample, tree_options, rng);
    });
    return RandomForest(std::move(trees), tree_options.feature_subset_size, x.cols(), seed);
}

inline double predict_proba(const RandomForest& forest, std::span<const double> x) { return forest.predict_proba(x); }

} // namespace ordrisk
