#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ordrisk/cart.hpp"
#include "ordrisk/dataset.hpp"
#include "ordrisk/parallel.hpp"
#include "ordrisk/rng.hpp"

namespace ordrisk {

struct ImputerOptions {
    std::size_t bags = 25;
    std::uint64_t seed = 0;
    std::size_t regression_leaf_size = 5;
    std::size_t classification_leaf_size = 1;
    /// Columns to build ensembles for. Empty: the columns with missing cells in the fitting data.
    std::vector<std::size_t> columns;
    std::size_t workers = 1;
};

/// Bagged trees predicting one column from all the others.
struct ColumnEnsemble {
    std::size_t column = 0;
    PredictorKind kind = PredictorKind::continuous;
    std::vector<std::size_t> inputs;
    std::vector<DecisionTree> trees;
};

/// Fills missing predictor cells from the other predictors of the same row.
/// Drug labels are never read.
class BaggedTreeImputer {
public:
    BaggedTreeImputer(PredictorSchema schema, std::vector<double> fallbacks, std::vector<ColumnEnsemble> ensembles,
                      std::size_t bags)
        : schema_(std::move(schema)), fallbacks_(std::move(fallbacks)), ensembles_(std::move(ensembles)), bags_(bags),
          by_column_(schema_.size(), none) {
        for (std::size_t i = 0; i < ensembles_.size(); ++i) by_column_.at(ensembles_[i].column) = i;
    }

    const PredictorSchema& schema() const noexcept { return schema_; }
    std::size_t bags() const noexcept { return bags_; }
    std::span<const ColumnEnsemble> ensembles() const noexcept { return ensembles_; }
    /// Mean (continuous) or mode (binary) of the observed cells, per column.
    std::span<const double> fallbacks() const noexcept { return fallbacks_; }
    const ColumnEnsemble* ensemble_for(std::size_t column) const {
        const std::size_t i = by_column_.at(column);
        return i == none ? nullptr : &ensembles_[i];
    }

    /// Imputed value for `column` given a row whose other missing cells are already filled.
    double predict_cell(std::size_t column, std::span<const double> filled_row) const {
        const ColumnEnsemble* ensemble = ensemble_for(column);
        if (ensemble == nullptr || ensemble->trees.empty()) return fallbacks_[column];
        std::vector<double> inputs;
        inputs.reserve(ensemble->inputs.size());
        for (auto j : ensemble->inputs) inputs.push_back(filled_row[j]);
        if (ensemble->kind == PredictorKind::binary) {
            std::size_t votes = 0;
            for (const auto& tree : ensemble->trees) votes += tree.predict(inputs) >= 0.5 ? 1 : 0;
            return 2 * votes >= ensemble->trees.size() ? 1.0 : 0.0;
        }
        double sum = 0.0;
        for (const auto& tree : ensemble->trees) sum += tree.predict(inputs);
        return sum / static_cast<double>(ensemble->trees.size());
    }

private:
    PredictorSchema schema_;
    std::vector<double> fallbacks_;
    std::vector<ColumnEnsemble> ensembles_;
    std::size_t bags_ = 0;
    static constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::vector<std::size_t> by_column_;
};

inline BaggedTreeImputer fit_imputer(const Dataset& dataset, const ImputerOptions& options = {}) {
    const std::size_t p = dataset.predictor_count();
    const RowMatrix& values = dataset.values();
    if (options.bags < 1) throw std::invalid_argument("fit_imputer: bags must be >= 1");

    std::vector<double> fallbacks(p, 0.0);
    std::vector<bool> has_missing(p, false);
    for (std::size_t c = 0; c < p; ++c) {
        double sum = 0.0;
        std::size_t present = 0;
        std::size_t ones = 0;
        for (std::size_t r = 0; r < values.rows(); ++r) {
            const double v = values(r, c);
            if (is_missing(v)) {
                has_missing[c] = true;
                continue;
            }
            sum += v;
            ones += v == 1.0;
            ++present;
        }
        if (present == 0)
            throw DataError("imputation: column '" + dataset.schema()[c].name + "' has no observed values");
        fallbacks[c] = dataset.schema()[c].kind == PredictorKind::binary ? (2 * ones >= present ? 1.0 : 0.0)
                                                                         : sum / static_cast<double>(present);
    }

    std::vector<std::size_t> targets = options.columns;
    if (targets.empty())
        for (std::size_t c = 0; c < p; ++c)
            if (has_missing[c]) targets.push_back(c);
    for (auto c : targets)
        if (c >= p) throw std::out_of_range("fit_imputer: column index out of range");

    std::vector<std::size_t> complete_rows;
    for (std::size_t r = 0; r < values.rows(); ++r) {
        const auto row = values.row(r);
        if (std::none_of(row.begin(), row.end(), is_missing)) complete_rows.push_back(r);
    }

    std::vector<ColumnEnsemble> ensembles(targets.size());
    parallel_for(targets.size(), options.workers, [&](std::size_t t) {
        const std::size_t c = targets[t];
        ColumnEnsemble& e = ensembles[t];
        e.column = c;
        e.kind = dataset.schema()[c].kind;
        for (std::size_t j = 0; j < p; ++j)
            if (j != c) e.inputs.push_back(j);
        if (e.inputs.empty() || complete_rows.empty()) return; // fallback only

        const std::size_t m = complete_rows.size();
        RowMatrix x(m, e.inputs.size());
        std::vector<double> y(m);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t a = 0; a < e.inputs.size(); ++a) x(i, a) = values(complete_rows[i], e.inputs[a]);
            y[i] = values(complete_rows[i], c);
        }
        const TreeOptions tree_options{
            e.kind == PredictorKind::binary ? TreeMode::classify : TreeMode::regress,
            e.kind == PredictorKind::binary ? options.classification_leaf_size : options.regression_leaf_size, 0};
        e.trees.reserve(options.bags);
        for (std::size_t b = 0; b < options.bags; ++b) {
            Rng rng(derive_seed(options.seed, {c, b}));
            std::vector<std::size_t> sample(m);
            for (auto& s : sample) s = static_cast<std::size_t>(rng.uniform_index(m));
            e.trees.push_back(grow_tree(x, y, sample, tree_options, rng));
        }
    });
    return BaggedTreeImputer(dataset.schema(), std::move(fallbacks), std::move(ensembles), options.bags);
}

/// Returns a copy of `dataset` without missing cells. Observed cells are
/// copied unchanged; a row's missing cells are filled column by column, with
/// fallbacks standing in for cells not yet filled.
inline Dataset impute(const BaggedTreeImputer& imputer, const Dataset& dataset) {
    if (!(imputer.schema() == dataset.schema())) throw DataError("impute: dataset schema does not match the imputer");
    if (!dataset.has_missing()) return dataset;
    RowMatrix out = dataset.values();
    const auto fallbacks = imputer.fallbacks();
    std::vector<double> filled(dataset.predictor_count());
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        if (std::none_of(row.begin(), row.end(), is_missing)) continue;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (!is_missing(row[c])) continue;
            for (std::size_t j = 0; j < row.size(); ++j) filled[j] = is_missing(row[j]) ? fallbacks[j] : row[j];
            row[c] = imputer.predict_cell(c, filled);
        }
    }
    return dataset.with_values(std::move(out));
}

} // namespace ordrisk
