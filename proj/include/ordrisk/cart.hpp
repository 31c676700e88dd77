#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ordrisk/matrix.hpp"
#include "ordrisk/rng.hpp"

namespace ordrisk {

enum class TreeMode { classify, regress };

struct TreeOptions {
    TreeMode mode = TreeMode::classify;
    /// Minimum rows per leaf; a split is admissible only if both children keep this many.
    std::size_t leaf_size = 1;
    /// Predictors drawn per split; 0 means all of them.
    std::size_t feature_subset_size = 0;
};

/// Sends rows with x[feature] <= threshold left, the rest right.
struct SplitRule {
    std::size_t feature = 0;
    double threshold = 0.0;
    friend bool operator==(const SplitRule&, const SplitRule&) = default;
};

struct TreeNode {
    bool leaf = true;
    SplitRule split;
    std::size_t left = 0;
    std::size_t right = 0;
    /// Positive-class proportion (classification) or mean response (regression).
    double value = 0.0;
    std::size_t count = 0;
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Gini impurity 2p(1-p) of a binary node.
constexpr double gini_impurity(double positives, double count) noexcept {
    if (count <= 0.0) return 0.0;
    const double p = positives / count;
    return 2.0 * p * (1.0 - p);
}

/// Count-weighted Gini loss of a node: count * gini = 2 * pos * neg / count.
constexpr double weighted_gini(double positives, double count) noexcept {
    return count <= 0.0 ? 0.0 : 2.0 * positives * (count - positives) / count;
}

struct SplitCandidate {
    SplitRule rule;
    /// Summed child loss (weighted Gini or SSE).
    double loss = 0.0;
};

/// Relative slack under which two losses are treated as tied.
inline constexpr double split_tie_tolerance = 1e-12;

namespace detail {

inline double node_loss(std::span<const double> targets, std::span<const std::size_t> rows, TreeMode mode) {
    if (rows.empty()) return 0.0;
    if (mode == TreeMode::classify) {
        double pos = 0.0;
        for (auto r : rows) pos += targets[r];
        return weighted_gini(pos, static_cast<double>(rows.size()));
    }
    double mean = 0.0;
    for (auto r : rows) mean += targets[r];
    mean /= static_cast<double>(rows.size());
    double sse = 0.0;
    for (auto r : rows) sse += (targets[r] - mean) * (targets[r] - mean);
    return sse;
}

inline bool is_pure(std::span<const double> targets, std::span<const std::size_t> rows) {
    const double first = targets[rows.front()];
    return std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return targets[r] == first; });
}

inline double midpoint(double a, double b) {
    const double s = a + (b - a) / 2.0;
    return s < b ? s : a;
}

} // namespace detail

/// Exhaustive threshold search over `features` (ascending order expected).
///
/// Every midpoint between consecutive distinct values is a candidate. The
/// lowest loss wins; ties keep the earlier (lower feature, lower threshold)
/// candidate. Returns nullopt when no admissible split exists.
inline std::optional<SplitCandidate> find_best_split(const RowMatrix& x, std::span<const double> targets,
                                                     std::span<const std::size_t> rows,
                                                     std::span<const std::size_t> features, TreeMode mode,
                                                     std::size_t leaf_size, double parent_loss) {
    const std::size_t n = rows.size();
    if (n < 2) return std::nullopt;
    const double slack = split_tie_tolerance * std::max(1.0, parent_loss);

    double mean = 0.0;
    if (mode == TreeMode::regress) {
        for (auto r : rows) mean += targets[r];
        mean /= static_cast<double>(n);
    }
    double total = 0.0;
    double total_sq = 0.0;
    for (auto r : rows) {
        const double y = mode == TreeMode::classify ? targets[r] : targets[r] - mean;
        total += y;
        total_sq += y * y;
    }

    std::optional<SplitCandidate> best;
    std::vector<std::size_t> order(rows.begin(), rows.end());
    for (std::size_t t : features) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double va = x(a, t);
            const double vb = x(b, t);
            return va < vb || (va == vb && a < b);
        });
        double left = 0.0;
        double left_sq = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double y = mode == TreeMode::classify ? targets[order[i]] : targets[order[i]] - mean;
            left += y;
            left_sq += y * y;
            const double v = x(order[i], t);
            const double next = x(order[i + 1], t);
            if (v == next) continue;
            const std::size_t n_left = i + 1;
            const std::size_t n_right = n - n_left;
            if (n_left < leaf_size || n_right < leaf_size) continue;
            const double nl = static_cast<double>(n_left);
            const double nr = static_cast<double>(n_right);
            double loss = 0.0;
            if (mode == TreeMode::classify) {
                loss = weighted_gini(left, nl) + weighted_gini(total - left, nr);
            } else {
                const double right = total - left;
                const double right_sq = total_sq - left_sq;
                loss = std::max(0.0, left_sq - left * left / nl) + std::max(0.0, right_sq - right * right / nr);
            }
            if (!best || loss < best->loss - slack) best = SplitCandidate{{t, detail::midpoint(v, next)}, loss};
        }
    }
    return best;
}

/// Binary classification or regression tree stored as a node arena (root at 0).
class DecisionTree {
public:
    DecisionTree() = default;
    DecisionTree(TreeMode mode, std::vector<TreeNode> nodes) : mode_(mode), nodes_(std::move(nodes)) {}

    TreeMode mode() const noexcept { return mode_; }
    std::span<const TreeNode> nodes() const noexcept { return nodes_; }

    const TreeNode& leaf_for(std::span<const double> x) const {
        std::size_t id = 0;
        while (!nodes_[id].leaf) {
            const auto& node = nodes_[id];
            id = x[node.split.feature] <= node.split.threshold ? node.left : node.right;
        }
        return nodes_[id];
    }

    /// Positive-class proportion or mean response of the leaf reached by x.
    double predict(std::span<const double> x) const { return leaf_for(x).value; }

    /// (negative, positive) proportions of the reached leaf; classification trees only.
    std::array<double, 2> class_proportions(std::span<const double> x) const {
        const double p = predict(x);
        return {1.0 - p, p};
    }

    std::size_t leaf_count() const noexcept {
        return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.leaf; }));
    }

    std::size_t depth() const {
        if (nodes_.empty()) return 0;
        std::size_t deepest = 0;
        std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
        while (!stack.empty()) {
            auto [id, d] = stack.back();
            stack.pop_back();
            deepest = std::max(deepest, d);
            if (!nodes_[id].leaf) {
                stack.emplace_back(nodes_[id].left, d + 1);
                stack.emplace_back(nodes_[id].right, d + 1);
            }
        }
        return deepest;
    }

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

private:
    TreeMode mode_ = TreeMode::classify;
    std::vector<TreeNode> nodes_;
};

/// Grows a tree on the rows listed in `sample` (repeats allowed, as in a bootstrap draw).
///
/// Classification targets must be 0/1. At each node a fresh subset of
/// predictors is drawn; growth stops when the node is pure, holds at most
/// `leaf_size` rows, or no admissible split lowers the loss.
inline DecisionTree grow_tree(const RowMatrix& x, std::span<const double> targets, std::span<const std::size_t> sample,
                              const TreeOptions& options, Rng& rng) {
    if (x.rows() == 0 || sample.empty()) throw std::invalid_argument("grow_tree: no rows");
    if (targets.size() != x.rows()) throw std::invalid_argument("grow_tree: target count does not match row count");
    const std::size_t p = x.cols();
    const std::size_t subset = options.feature_subset_size == 0 ? p : options.feature_subset_size;
    if (subset < 1 || subset > p) throw std::invalid_argument("grow_tree: feature_subset_size out of range");
    if (options.leaf_size < 1) throw std::invalid_argument("grow_tree: leaf_size must be >= 1");
    if (options.mode == TreeMode::classify)
        for (auto r : sample)
            if (targets[r] != 0.0 && targets[r] != 1.0)
                throw std::invalid_argument("grow_tree: classification targets must be 0 or 1");

    std::vector<TreeNode> nodes;
    std::vector<std::size_t> all_features(p);
    std::iota(all_features.begin(), all_features.end(), std::size_t{0});
    std::vector<std::size_t> pool(p);
    std::vector<std::size_t> drawn;

    struct Pending {
        std::size_t id;
        std::vector<std::size_t> rows;
    };
    std::vector<Pending> stack;
    nodes.emplace_back();
    stack.push_back({0, std::vector<std::size_t>(sample.begin(), sample.end())});

    while (!stack.empty()) {
        Pending work = std::move(stack.back());
        stack.pop_back();
        const auto& rows = work.rows;

        double sum = 0.0;
        for (auto r : rows) sum += targets[r];
        TreeNode node;
        node.count = rows.size();
        node.value = sum / static_cast<double>(rows.size());

        const bool stop = rows.size() <= options.leaf_size || detail::is_pure(targets, rows);
        std::optional<SplitCandidate> split;
        if (!stop) {
            std::span<const std::size_t> features = all_features;
            if (subset < p) {
                std::iota(pool.begin(), pool.end(), std::size_t{0});
                for (std::size_t i = 0; i < subset; ++i) {
                    const auto j = i + static_cast<std::size_t>(rng.uniform_index(p - i));
                    std::swap(pool[i], pool[j]);
                }
                drawn.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(subset));
                std::sort(drawn.begin(), drawn.end());
                features = drawn;
            }
            const double parent = detail::node_loss(targets, rows, options.mode);
            split = find_best_split(x, targets, rows, features, options.mode, options.leaf_size, parent);
            if (split && !(split->loss < parent - split_tie_tolerance * std::max(1.0, parent))) split.reset();
        }

        if (!split) {
            nodes[work.id] = node;
            continue;
        }

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        for (auto r : rows) (x(r, split->rule.feature) <= split->rule.threshold ? left_rows : right_rows).push_back(r);

        node.leaf = false;
        node.split = split->rule;
        node.left = nodes.size();
        node.right = nodes.size() + 1;
        nodes[work.id] = node;
        nodes.emplace_back();
        nodes.emplace_back();
        // Right first so the left subtree is expanded next (depth-first, left-to-right ids).
        stack.push_back({node.right, std::move(right_rows)});
        stack.push_back({node.left, std::move(left_rows)});
    }
    return DecisionTree(options.mode, std::move(nodes));
}

inline DecisionTree grow_tree(const RowMatrix& x, std::span<const double> targets, const TreeOptions& options,
                              Rng& rng) {
    std::vector<std::size_t> all(x.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return grow_tree(x, targets, all, options, rng);
}

inline double predict_tree(const DecisionTree& tree, std::span<const double> x) { return tree.predict(x); }

} // namespace ordrisk
