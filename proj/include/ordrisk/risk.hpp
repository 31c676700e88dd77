#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ordrisk {

/// Ordinal risk label. Enumerator order is the risk order.
enum class RiskCategory : std::uint8_t { low = 0, intermediate = 1, high = 2 };

inline constexpr std::array<RiskCategory, 3> all_categories{
    RiskCategory::low, RiskCategory::intermediate, RiskCategory::high};

/// Ordinal rank: low -> 1, intermediate -> 2, high -> 3.
constexpr int rank(RiskCategory c) noexcept { return static_cast<int>(c) + 1; }

constexpr std::size_t index_of(RiskCategory c) noexcept { return static_cast<std::size_t>(c); }

constexpr std::string_view to_string(RiskCategory c) noexcept {
    switch (c) {
    case RiskCategory::low: return "low";
    case RiskCategory::intermediate: return "intermediate";
    case RiskCategory::high: return "high";
    }
    return "unknown";
}

/// Case-insensitive parse of `low|intermediate|high`.
inline std::optional<RiskCategory> parse_risk(std::string_view token) {
    std::string lowered(token);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (lowered == "low") return RiskCategory::low;
    if (lowered == "intermediate") return RiskCategory::intermediate;
    if (lowered == "high") return RiskCategory::high;
    return std::nullopt;
}

/// Three-category probability triple (pL, pM, pH).
struct RiskProbabilities {
    double low = 0.0;
    double intermediate = 0.0;
    double high = 0.0;

    constexpr double operator[](RiskCategory c) const noexcept {
        switch (c) {
        case RiskCategory::low: return low;
        case RiskCategory::intermediate: return intermediate;
        case RiskCategory::high: return high;
        }
        return 0.0;
    }

    constexpr double sum() const noexcept { return low + intermediate + high; }

    /// Expected ordinal rank 1*pL + 2*pM + 3*pH.
    constexpr double expected_rank() const noexcept { return low + 2.0 * intermediate + 3.0 * high; }

    friend constexpr bool operator==(const RiskProbabilities&, const RiskProbabilities&) = default;
};

/// Most probable category; exact ties go to the higher-risk category.
constexpr RiskCategory most_probable(const RiskProbabilities& p) noexcept {
    RiskCategory best = RiskCategory::high;
    if (p.intermediate > p[best]) best = RiskCategory::intermediate;
    if (p.low > p[best]) best = RiskCategory::low;
    return best;
}

} // namespace ordrisk
