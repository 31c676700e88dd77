#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "ordrisk/dataset.hpp"
#include "ordrisk/rng.hpp"

namespace ordrisk {

struct SyntheticOptions {
    /// Drug counts for low, intermediate and high risk.
    std::array<std::size_t, 3> drugs_per_category{6, 6, 6};
    std::size_t observations_per_drug = 8;
    double noise_sd = 0.5;
    /// SD of a per-drug offset shared by all observations of the drug on
    /// signal and aux (drug-level effects unrelated to risk).
    double drug_effect_sd = 0.0;
    bool nonlinear = false;
    /// Fraction of signal/aux/flag cells replaced by missing markers.
    double missing_fraction = 0.0;
    std::uint64_t seed = 1;
};

struct SyntheticDataset {
    Dataset data;
    /// Per-drug latent score.
    std::vector<double> latent;
    /// Column that is independent of everything else (N(0, 1) draws).
    std::size_t noise_predictor = 3;
    /// Column carrying the strongest signal.
    std::size_t dominant_predictor = 0;
};

/// Column layout shared by both generator modes.
inline PredictorSchema synthetic_schema() {
    return PredictorSchema({{"signal", PredictorKind::continuous},
                            {"aux", PredictorKind::continuous},
                            {"flag", PredictorKind::binary},
                            {"noise", PredictorKind::continuous}});
}

/// Generates a grouped dataset with a planted ordinal structure.
///
/// Each drug draws a latent score mu uniformly from its category band
/// (low [0, 1], intermediate [2, 3], high [4, 5]); observations add
/// N(0, noise_sd^2) noise per cell, plus optional per-drug offsets d1, d2
/// ~ N(0, drug_effect_sd^2) on the first two columns.
///
/// Linear mode:
///   signal = mu + d1 + e,  aux = 2 - mu/2 + d2 + e,  flag = 1{mu + e > 1.5}
/// Nonlinear mode (z = -1, +1 alternating within each category):
///   signal = z (mu - 2.5) + d1 + e,  aux = |mu - 2.5| + d2 + e,  flag = 1{z > 0}
/// so low and high drugs differ only through the signal*flag interaction.
///
/// In both modes `noise` is an independent standard normal: a predictor
/// with no relation to the label.
inline SyntheticDataset generate_synthetic(const SyntheticOptions& opt) {
    for (auto n : opt.drugs_per_category)
        if (n < 1) throw std::invalid_argument("generate_synthetic: every category needs at least one drug");
    if (opt.observations_per_drug < 1) throw std::invalid_argument("generate_synthetic: observations_per_drug < 1");
    if (!(opt.noise_sd >= 0.0) || !std::isfinite(opt.noise_sd))
        throw std::invalid_argument("generate_synthetic: noise_sd must be non-negative");
    if (!(opt.drug_effect_sd >= 0.0) || !std::isfinite(opt.drug_effect_sd))
        throw std::invalid_argument("generate_synthetic: drug_effect_sd must be non-negative");
    if (!(opt.missing_fraction >= 0.0 && opt.missing_fraction < 1.0))
        throw std::invalid_argument("generate_synthetic: missing_fraction must be in [0, 1)");

    constexpr std::array<char, 3> prefix{'L', 'M', 'H'};
    const std::size_t cols = 4;
    const double sd = opt.noise_sd;

    std::vector<Drug> drugs;
    std::vector<double> latent;
    std::vector<std::size_t> row_drug;
    std::vector<double> values;

    for (auto category : all_categories) {
        const std::size_t count = opt.drugs_per_category[index_of(category)];
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t k = drugs.size();
            char id[32];
            std::snprintf(id, sizeof id, "%c%02zu", prefix[index_of(category)], i + 1);
            drugs.push_back({id, category});

            Rng rng(derive_seed(opt.seed, {0, k}));
            const double band = 2.0 * static_cast<double>(index_of(category));
            const double mu = rng.uniform(band, band + 1.0);
            const double z = (i % 2 == 0) ? -1.0 : 1.0;
            const double d1 = opt.drug_effect_sd * rng.normal();
            const double d2 = opt.drug_effect_sd * rng.normal();
            latent.push_back(mu);

            for (std::size_t j = 0; j < opt.observations_per_drug; ++j) {
                const double e1 = sd * rng.normal();
                const double e2 = sd * rng.normal();
                const double e3 = sd * rng.normal();
                const double noise = rng.normal();
                if (opt.nonlinear) {
                    values.push_back(z * (mu - 2.5) + d1 + e1);
                    values.push_back(std::abs(mu - 2.5) + d2 + e2);
                    values.push_back(z > 0.0 ? 1.0 : 0.0);
                } else {
                    values.push_back(mu + d1 + e1);
                    values.push_back(2.0 - 0.5 * mu + d2 + e2);
                    values.push_back(mu + e3 > 1.5 ? 1.0 : 0.0);
                }
                values.push_back(noise);
                row_drug.push_back(k);
            }
        }
    }

    if (opt.missing_fraction > 0.0) {
        Rng mask(derive_seed(opt.seed, {1}));
        const std::size_t rows = row_drug.size();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c + 1 < cols; ++c)
                if (mask.uniform() < opt.missing_fraction) values[r * cols + c] = missing_value;
    }

    const std::size_t rows = row_drug.size();
    return {Dataset(synthetic_schema(), std::move(drugs), std::move(row_drug), RowMatrix(rows, cols, std::move(values))),
            std::move(latent), 3, 0};
}

} // namespace ordrisk
