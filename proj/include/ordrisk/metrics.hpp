#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ordrisk/risk.hpp"

namespace ordrisk {

/// One scored unit (an observation or a drug).
struct UnitPrediction {
    std::string id;
    RiskCategory truth = RiskCategory::low;
    RiskProbabilities probabilities;
    RiskCategory predicted = RiskCategory::low;
    friend bool operator==(const UnitPrediction&, const UnitPrediction&) = default;
};

using PredictionSet = std::vector<UnitPrediction>;

/// Fraction of units predicted in their true category.
inline double accuracy3(std::span<const UnitPrediction> units) {
    if (units.empty()) throw std::domain_error("accuracy3: empty prediction set");
    const auto hits = std::count_if(units.begin(), units.end(),
                                    [](const UnitPrediction& u) { return u.predicted == u.truth; });
    return static_cast<double>(hits) / static_cast<double>(units.size());
}

/// Mann-Whitney U of `positive` against `negative` scores: the number of
/// (positive, negative) pairs with the positive scoring higher, ties counting 1/2.
/// Computed from mid-ranks in O(n log n).
inline double mann_whitney_u(std::span<const double> positive, std::span<const double> negative) {
    std::vector<std::pair<double, bool>> all;
    all.reserve(positive.size() + negative.size());
    for (double s : positive) all.emplace_back(s, true);
    for (double s : negative) all.emplace_back(s, false);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    double rank_sum = 0.0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        std::size_t pos_in_group = 0;
        while (j < all.size() && all[j].first == all[i].first) pos_in_group += all[j++].second ? 1 : 0;
        const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        rank_sum += mid_rank * static_cast<double>(pos_in_group);
        i = j;
    }
    const auto np = static_cast<double>(positive.size());
    return rank_sum - np * (np + 1.0) / 2.0;
}

/// Area under the empirical ROC curve; tied scores contribute 1/2.
inline double auroc(std::span<const double> scores, std::span<const std::uint8_t> positives) {
    if (scores.size() != positives.size()) throw std::invalid_argument("auroc: size mismatch");
    std::vector<double> pos;
    std::vector<double> neg;
    for (std::size_t i = 0; i < scores.size(); ++i) (positives[i] ? pos : neg).push_back(scores[i]);
    if (pos.empty() || neg.empty()) throw std::domain_error("auroc: both classes must be present");
    return mann_whitney_u(pos, neg) / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

/// Concordance of the expected rank 1*pL + 2*pM + 3*pH with the true ranks.
/// Pairs with different true ranks are comparable; a pair is concordant when
/// the higher-risk unit scores strictly higher, and counts 1/2 on a score tie.
inline double concordance_index(std::span<const UnitPrediction> units) {
    std::array<std::vector<double>, 3> by_rank;
    for (const auto& u : units) by_rank[index_of(u.truth)].push_back(u.probabilities.expected_rank());
    double concordant = 0.0;
    double comparable = 0.0;
    for (std::size_t lo = 0; lo < 3; ++lo) {
        for (std::size_t hi = lo + 1; hi < 3; ++hi) {
            if (by_rank[lo].empty() || by_rank[hi].empty()) continue;
            concordant += mann_whitney_u(by_rank[hi], by_rank[lo]);
            comparable += static_cast<double>(by_rank[lo].size()) * static_cast<double>(by_rank[hi].size());
        }
    }
    if (comparable == 0.0) throw std::domain_error("concordance_index: no comparable pairs");
    return concordant / comparable;
}

/// The two ordinal binarizations scored by AUROC.
enum class BinaryCut {
    high_vs_rest,    ///< score pH, positive = high
    high_mid_vs_low, ///< score 1 - pL, positive = intermediate or high
};

struct BinarizedScores {
    std::vector<double> scores;
    std::vector<std::uint8_t> positives;
};

inline BinarizedScores binarize(std::span<const UnitPrediction> units, BinaryCut cut) {
    BinarizedScores out;
    out.scores.reserve(units.size());
    out.positives.reserve(units.size());
    for (const auto& u : units) {
        if (cut == BinaryCut::high_vs_rest) {
            out.scores.push_back(u.probabilities.high);
            out.positives.push_back(u.truth == RiskCategory::high ? 1 : 0);
        } else {
            out.scores.push_back(1.0 - u.probabilities.low);
            out.positives.push_back(u.truth != RiskCategory::low ? 1 : 0);
        }
    }
    return out;
}

enum class Metric : std::size_t { accuracy3 = 0, auroc_high_vs_rest = 1, auroc_high_mid_vs_low = 2, concordance = 3 };

inline constexpr std::array<Metric, 4> all_metrics{Metric::accuracy3, Metric::auroc_high_vs_rest,
                                                   Metric::auroc_high_mid_vs_low, Metric::concordance};

constexpr std::string_view to_string(Metric m) noexcept {
    switch (m) {
    case Metric::accuracy3: return "accuracy3";
    case Metric::auroc_high_vs_rest: return "auroc_HvsML";
    case Metric::auroc_high_mid_vs_low: return "auroc_HMvsL";
    case Metric::concordance: return "concordance";
    }
    return "unknown";
}

/// The four measurements for one prediction level. A value is empty when it
/// is undefined for the set (e.g. AUROC with one class present).
struct MetricSet {
    std::array<std::optional<double>, 4> values{};

    const std::optional<double>& operator[](Metric m) const noexcept { return values[static_cast<std::size_t>(m)]; }
    std::optional<double>& operator[](Metric m) noexcept { return values[static_cast<std::size_t>(m)]; }

    friend bool operator==(const MetricSet&, const MetricSet&) = default;
};

inline MetricSet compute_metrics(std::span<const UnitPrediction> units) {
    MetricSet out;
    if (units.empty()) return out;
    out[Metric::accuracy3] = accuracy3(units);
    for (auto [metric, cut] : {std::pair{Metric::auroc_high_vs_rest, BinaryCut::high_vs_rest},
                               std::pair{Metric::auroc_high_mid_vs_low, BinaryCut::high_mid_vs_low}}) {
        const auto b = binarize(units, cut);
        const auto pos = std::count(b.positives.begin(), b.positives.end(), std::uint8_t{1});
        if (pos > 0 && static_cast<std::size_t>(pos) < b.positives.size()) out[metric] = auroc(b.scores, b.positives);
    }
    std::array<bool, 3> present{};
    for (const auto& u : units) present[index_of(u.truth)] = true;
    if (std::count(present.begin(), present.end(), true) >= 2) out[Metric::concordance] = concordance_index(units);
    return out;
}

} // namespace ordrisk
