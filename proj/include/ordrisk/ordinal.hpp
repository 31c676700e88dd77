#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ordrisk/dataset.hpp"
#include "ordrisk/error.hpp"
#include "ordrisk/forest.hpp"
#include "ordrisk/logistic.hpp"
#include "ordrisk/risk.hpp"
#include "ordrisk/rng.hpp"

namespace ordrisk {

enum class LearnerKind { logistic, forest };

constexpr std::string_view to_string(LearnerKind kind) noexcept {
    return kind == LearnerKind::logistic ? "logistic" : "forest";
}

struct LogisticLearner {
    using Model = LogisticModel;
    LogisticOptions options;
    Model fit(const RowMatrix& x, std::span<const std::uint8_t> y, std::uint64_t /*seed*/) const {
        return fit_logistic(x, y, options);
    }
};

struct ForestLearner {
    using Model = RandomForest;
    ForestOptions options;
    Model fit(const RowMatrix& x, std::span<const std::uint8_t> y, std::uint64_t seed) const {
        return fit_forest(x, y, seed, options);
    }
};

/// Base learner plugged into the ordinal reduction.
using Learner = std::variant<LogisticLearner, ForestLearner>;

inline LearnerKind kind_of(const Learner& learner) noexcept {
    return std::holds_alternative<LogisticLearner>(learner) ? LearnerKind::logistic : LearnerKind::forest;
}

/// Prediction for one observation.
struct ObservationPrediction {
    RiskProbabilities probabilities;
    RiskCategory category = RiskCategory::high;
    /// 1 - pL - pH before clamping.
    double raw_intermediate = 0.0;
    /// True when raw_intermediate < 0 and the triple was renormalized.
    bool clamped = false;
};

/// Combines P(low) and P(high) from the two binary classifiers into a triple.
///
/// pM = 1 - pL - pH. A negative pM is set to 0 and (pL, pH) are scaled by
/// 1 / (pL + pH), keeping their ratio.
inline ObservationPrediction combine_binary_probabilities(double p_low, double p_high) noexcept {
    ObservationPrediction out;
    out.raw_intermediate = 1.0 - p_low - p_high;
    if (out.raw_intermediate < 0.0) {
        const double total = p_low + p_high;
        out.probabilities = {p_low / total, 0.0, p_high / total};
        out.clamped = true;
    } else {
        out.probabilities = {p_low, out.raw_intermediate, p_high};
    }
    out.category = most_probable(out.probabilities);
    return out;
}

/// Drug-level prediction: the mean of its observations' triples.
struct DrugPrediction {
    RiskProbabilities probabilities;
    RiskCategory category = RiskCategory::high;
    std::size_t clamped = 0;
    std::vector<ObservationPrediction> observations;
};

inline DrugPrediction aggregate_drug(std::vector<ObservationPrediction> observations) {
    if (observations.empty()) throw std::invalid_argument("aggregate_drug: drug has no observations");
    DrugPrediction out;
    for (const auto& o : observations) {
        out.probabilities.low += o.probabilities.low;
        out.probabilities.intermediate += o.probabilities.intermediate;
        out.probabilities.high += o.probabilities.high;
        out.clamped += o.clamped ? 1 : 0;
    }
    const auto j = static_cast<double>(observations.size());
    out.probabilities.low /= j;
    out.probabilities.intermediate /= j;
    out.probabilities.high /= j;
    out.category = most_probable(out.probabilities);
    out.observations = std::move(observations);
    return out;
}

/// Pair of binary classifiers: low vs intermediate-or-high, high vs low-or-intermediate.
template <class Model>
class OrdinalModel {
public:
    OrdinalModel(Model low_vs_rest, Model high_vs_rest)
        : low_(std::move(low_vs_rest)), high_(std::move(high_vs_rest)) {}

    const Model& low_vs_rest() const noexcept { return low_; }
    const Model& high_vs_rest() const noexcept { return high_; }

    ObservationPrediction predict_observation(std::span<const double> x) const {
        return combine_binary_probabilities(predict_proba(low_, x), predict_proba(high_, x));
    }

    DrugPrediction predict_drug(const RowMatrix& rows) const {
        std::vector<ObservationPrediction> obs;
        obs.reserve(rows.rows());
        for (std::size_t r = 0; r < rows.rows(); ++r) obs.push_back(predict_observation(rows.row(r)));
        return aggregate_drug(std::move(obs));
    }

    friend bool operator==(const OrdinalModel&, const OrdinalModel&) = default;

private:
    Model low_;
    Model high_;
};

using AnyOrdinalModel = std::variant<OrdinalModel<LogisticModel>, OrdinalModel<RandomForest>>;

namespace detail {

inline std::vector<std::uint8_t> binarize_labels(const Dataset& data, RiskCategory positive) {
    std::vector<std::uint8_t> y(data.row_count());
    for (std::size_t r = 0; r < y.size(); ++r) y[r] = data.row_label(r) == positive ? 1 : 0;
    return y;
}

inline void require_two_classes(std::span<const std::uint8_t> y, std::string_view which) {
    std::size_t pos = 0;
    for (auto v : y) pos += v;
    if (pos == 0 || pos == y.size())
        throw FitError("ordinal fit: " + std::string(which) + " binarization is single-class");
}

} // namespace detail

/// Fits f1 on 1{y = low} and f2 on 1{y = high} over the same rows.
template <class L>
OrdinalModel<typename L::Model> fit_ordinal(const Dataset& train, const L& learner, std::uint64_t seed) {
    if (train.row_count() == 0) throw FitError("ordinal fit: empty training set");
    if (train.has_missing()) throw DataError("ordinal fit: training data contains missing values (impute first)");
    const auto y_low = detail::binarize_labels(train, RiskCategory::low);
    const auto y_high = detail::binarize_labels(train, RiskCategory::high);
    detail::require_two_classes(y_low, "low-vs-rest");
    detail::require_two_classes(y_high, "high-vs-rest");
    auto f1 = learner.fit(train.values(), y_low, derive_seed(seed, {1}));
    auto f2 = learner.fit(train.values(), y_high, derive_seed(seed, {2}));
    return OrdinalModel<typename L::Model>(std::move(f1), std::move(f2));
}

inline AnyOrdinalModel fit_ordinal(const Dataset& train, const Learner& learner, std::uint64_t seed) {
    return std::visit([&](const auto& l) -> AnyOrdinalModel { return fit_ordinal(train, l, seed); }, learner);
}

inline ObservationPrediction predict_observation(const AnyOrdinalModel& model, std::span<const double> x) {
    return std::visit([&](const auto& m) { return m.predict_observation(x); }, model);
}

inline DrugPrediction predict_drug(const AnyOrdinalModel& model, const RowMatrix& rows) {
    return std::visit([&](const auto& m) { return m.predict_drug(rows); }, model);
}

} // namespace ordrisk
