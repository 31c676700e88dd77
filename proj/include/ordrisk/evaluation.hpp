#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ordrisk/dataset.hpp"
#include "ordrisk/error.hpp"
#include "ordrisk/imputation.hpp"
#include "ordrisk/metrics.hpp"
#include "ordrisk/ordinal.hpp"
#include "ordrisk/parallel.hpp"
#include "ordrisk/rng.hpp"

namespace ordrisk {

enum class ImputationMode {
    /// Imputer fitted on each fold's training drugs only.
    per_fold,
    /// One imputer fitted on the whole dataset before splitting. Leaks held-out
    /// predictor values into the imputation model.
    global_leaky,
};

enum class Level { observations = 0, drugs = 1 };

inline constexpr std::array<Level, 2> all_levels{Level::observations, Level::drugs};

constexpr std::string_view to_string(Level level) noexcept {
    return level == Level::observations ? "observations" : "drugs";
}

struct EvaluationOptions {
    std::uint64_t seed = 0;
    ImputationMode imputation = ImputationMode::per_fold;
    std::size_t imputer_bags = 25;
    /// Parallel tasks (folds or replicates); results do not depend on it.
    std::size_t workers = 1;
};

struct DrugOutcome {
    std::string drug;
    RiskCategory truth = RiskCategory::low;
    RiskProbabilities probabilities;
    RiskCategory predicted = RiskCategory::low;
    std::size_t observations = 0;
    std::size_t clamped = 0;
    bool correct() const noexcept { return predicted == truth; }
    friend bool operator==(const DrugOutcome&, const DrugOutcome&) = default;
};

/// Pooled held-out predictions and their measurements at both levels.
struct EvaluationReport {
    LearnerKind learner = LearnerKind::logistic;
    MetricSet observation_metrics;
    MetricSet drug_metrics;
    PredictionSet observation_predictions;
    PredictionSet drug_predictions;
    std::vector<DrugOutcome> drug_outcomes;
    /// Observations whose raw intermediate probability was negative.
    std::size_t clamp_count = 0;

    const MetricSet& metrics(Level level) const noexcept {
        return level == Level::observations ? observation_metrics : drug_metrics;
    }

    friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

namespace detail {

struct HeldOutDrug {
    DrugOutcome outcome;
    PredictionSet observations;
};

inline EvaluationReport build_report(LearnerKind learner, std::span<const HeldOutDrug> held_out) {
    EvaluationReport report;
    report.learner = learner;
    for (const auto& h : held_out) {
        report.drug_outcomes.push_back(h.outcome);
        report.drug_predictions.push_back(
            {h.outcome.drug, h.outcome.truth, h.outcome.probabilities, h.outcome.predicted});
        report.observation_predictions.insert(report.observation_predictions.end(), h.observations.begin(),
                                              h.observations.end());
        report.clamp_count += h.outcome.clamped;
    }
    report.observation_metrics = compute_metrics(report.observation_predictions);
    report.drug_metrics = compute_metrics(report.drug_predictions);
    return report;
}

inline Dataset impute_with(const Dataset& fit_on, const Dataset& apply_to, std::uint64_t seed, std::size_t bags,
                           std::span<const std::size_t> columns) {
    ImputerOptions options;
    options.bags = bags;
    options.seed = seed;
    options.columns.assign(columns.begin(), columns.end());
    return impute(fit_imputer(fit_on, options), apply_to);
}

inline std::vector<std::size_t> missing_columns(const Dataset& a, const Dataset& b) {
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < a.predictor_count(); ++c) {
        bool any = false;
        for (const Dataset* d : {&a, &b})
            for (std::size_t r = 0; r < d->row_count() && !any; ++r) any = is_missing(d->values()(r, c));
        if (any) cols.push_back(c);
    }
    return cols;
}

/// Fits on `train` and predicts every drug of `test`. Imputation, when
/// needed, is fitted on `train` alone.
inline std::vector<HeldOutDrug> fit_and_predict(Dataset train, Dataset test, const Learner& learner,
                                                std::uint64_t seed, const EvaluationOptions& options) {
    if (train.has_missing() || test.has_missing()) {
        const auto cols = missing_columns(train, test);
        ImputerOptions io;
        io.bags = options.imputer_bags;
        io.seed = derive_seed(seed, {3});
        io.columns = cols;
        const auto imputer = fit_imputer(train, io);
        train = impute(imputer, train);
        test = impute(imputer, test);
    }
    const auto model = fit_ordinal(train, learner, seed);
    std::vector<HeldOutDrug> out;
    for (std::size_t k = 0; k < test.drug_count(); ++k) {
        const auto rows = test.drug_rows(k);
        const auto prediction = predict_drug(model, test.values().select_rows(rows));
        HeldOutDrug h;
        h.outcome = {test.drug(k).id, test.drug(k).label, prediction.probabilities, prediction.category,
                     rows.size(), prediction.clamped};
        for (std::size_t j = 0; j < prediction.observations.size(); ++j) {
            const auto& o = prediction.observations[j];
            h.observations.push_back(
                {test.drug(k).id + "/" + std::to_string(j + 1), test.drug(k).label, o.probabilities, o.category});
        }
        out.push_back(std::move(h));
    }
    return out;
}

template <class E>
[[noreturn]] void rethrow_with_context(const E& error, const std::string& context) {
    throw E(context + ": " + error.what());
}

/// Runs fn(), re-raising library errors with `context` prefixed and the same type.
template <class Fn>
auto with_context(const std::string& context, Fn&& fn) {
    try {
        return fn();
    } catch (const FitError& e) {
        rethrow_with_context(e, context);
    } catch (const DataError& e) {
        rethrow_with_context(e, context);
    } catch (const ConfigError& e) {
        rethrow_with_context(e, context);
    }
}

inline Dataset global_imputation(const Dataset& dataset, const EvaluationOptions& options) {
    if (!dataset.has_missing()) return dataset;
    return impute_with(dataset, dataset, derive_seed(options.seed, {0xA11}), options.imputer_bags, {});
}

} // namespace detail

// ---------------------------------------------------------------------------
// Leave-one-drug-out cross-validation

/// Each drug is predicted by a model fitted on all other drugs (fold seed
/// derived from (seed, k)); held-out predictions are pooled and scored at
/// observation and drug level.
inline EvaluationReport lodo_cv(const Dataset& dataset, const Learner& learner, const EvaluationOptions& options = {}) {
    const std::size_t n = dataset.drug_count();
    if (n < 2) throw FitError("lodo_cv: need at least two drugs");
    const Dataset data = options.imputation == ImputationMode::global_leaky
                             ? detail::global_imputation(dataset, options)
                             : dataset;

    std::vector<std::vector<detail::HeldOutDrug>> folds(n);
    parallel_for(n, options.workers, [&](std::size_t k) {
        folds[k] = detail::with_context("fold " + std::to_string(k + 1) + " (held-out drug '" + data.drug(k).id + "')",
                                        [&] {
                                            auto split = split_lodo(data, k);
                                            return detail::fit_and_predict(std::move(split.train),
                                                                           std::move(split.test), learner,
                                                                           derive_seed(options.seed, {k}), options);
                                        });
    });
    std::vector<detail::HeldOutDrug> pooled;
    for (auto& f : folds)
        for (auto& h : f) pooled.push_back(std::move(h));
    return detail::build_report(kind_of(learner), pooled);
}

// ---------------------------------------------------------------------------
// Stratified bootstrap

/// Resamples each drug's observations with replacement, keeping its count.
inline Dataset stratified_resample(const Dataset& dataset, Rng& rng) {
    std::vector<std::size_t> rows;
    rows.reserve(dataset.row_count());
    for (std::size_t k = 0; k < dataset.drug_count(); ++k) {
        const auto own = dataset.drug_rows(k);
        for (std::size_t j = 0; j < own.size(); ++j) rows.push_back(own[rng.uniform_index(own.size())]);
    }
    return dataset.select_rows(rows);
}

/// Resampled dataset of replicate r.
inline Dataset bootstrap_replicate_dataset(const Dataset& dataset, std::uint64_t seed, std::size_t r) {
    Rng rng(derive_seed(seed, {r, 0}));
    return stratified_resample(dataset, rng);
}

/// Seed used for the cross-validation of replicate r.
inline std::uint64_t bootstrap_replicate_seed(std::uint64_t seed, std::size_t r) { return derive_seed(seed, {r, 1}); }

/// Linear-interpolation quantile of sorted values (R type 7).
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::domain_error("quantile of empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

struct MetricSummary {
    /// Replicates where the metric was defined.
    std::size_t count = 0;
    double mean = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    double min = 0.0;
    double max = 0.0;
    friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

inline MetricSummary summarize(std::vector<double> values) {
    MetricSummary s;
    s.count = values.size();
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    s.ci_lower = quantile_sorted(values, 0.025);
    s.ci_upper = quantile_sorted(values, 0.975);
    s.min = values.front();
    s.max = values.back();
    return s;
}

struct DrugRate {
    std::string drug;
    RiskCategory truth = RiskCategory::low;
    std::size_t correct = 0;
    std::size_t replicates = 0;
    double rate = 0.0;
    friend bool operator==(const DrugRate&, const DrugRate&) = default;
};

struct BootstrapReport {
    LearnerKind learner = LearnerKind::logistic;
    std::uint64_t seed = 0;
    std::size_t requested = 0;
    /// Replicates dropped because a fold could not be fitted.
    std::size_t failed = 0;
    std::vector<std::string> failures;
    /// Successful replicates, in replicate order, with their replicate numbers.
    std::vector<EvaluationReport> replicates;
    std::vector<std::size_t> replicate_numbers;
    std::array<std::array<MetricSummary, 4>, 2> summaries{};
    std::vector<DrugRate> drug_rates;

    const MetricSummary& summary(Level level, Metric metric) const {
        return summaries[static_cast<std::size_t>(level)][static_cast<std::size_t>(metric)];
    }

    /// Replicate values of one measurement (undefined replicates skipped).
    friend bool operator==(const BootstrapReport&, const BootstrapReport&) = default;

    std::vector<double> values(Level level, Metric metric) const {
        std::vector<double> out;
        for (const auto& r : replicates)
            if (const auto& v = r.metrics(level)[metric]) out.push_back(*v);
        return out;
    }
};

/// Repeats leave-one-drug-out validation on R stratified resamples.
inline BootstrapReport stratified_bootstrap(const Dataset& dataset, const Learner& learner, std::size_t replicates,
                                            const EvaluationOptions& options = {}) {
    if (replicates < 1) throw std::invalid_argument("stratified_bootstrap: need at least one replicate");
    std::vector<std::optional<EvaluationReport>> results(replicates);
    std::vector<std::string> errors(replicates);

    EvaluationOptions inner = options;
    inner.workers = 1;
    parallel_for(replicates, options.workers, [&](std::size_t r) {
        detail::with_context("bootstrap replicate " + std::to_string(r + 1), [&] {
            const Dataset sample = bootstrap_replicate_dataset(dataset, options.seed, r);
            EvaluationOptions local = inner;
            local.seed = bootstrap_replicate_seed(options.seed, r);
            try {
                results[r] = lodo_cv(sample, learner, local);
            } catch (const FitError& e) {
                errors[r] = e.what();
            }
            return 0;
        });
    });

    BootstrapReport report;
    report.learner = kind_of(learner);
    report.seed = options.seed;
    report.requested = replicates;
    for (std::size_t r = 0; r < replicates; ++r) {
        if (results[r]) {
            report.replicates.push_back(std::move(*results[r]));
            report.replicate_numbers.push_back(r);
        } else {
            ++report.failed;
            report.failures.push_back("replicate " + std::to_string(r + 1) + ": " + errors[r]);
        }
    }
    for (auto level : all_levels)
        for (auto metric : all_metrics)
            report.summaries[static_cast<std::size_t>(level)][static_cast<std::size_t>(metric)] =
                summarize(report.values(level, metric));

    for (const auto& d : dataset.drugs()) report.drug_rates.push_back({d.id, d.label, 0, 0, 0.0});
    for (const auto& rep : report.replicates) {
        for (const auto& outcome : rep.drug_outcomes) {
            const auto k = dataset.find_drug(outcome.drug);
            if (!k) continue;
            auto& rate = report.drug_rates[*k];
            ++rate.replicates;
            rate.correct += outcome.correct() ? 1 : 0;
        }
    }
    for (auto& rate : report.drug_rates)
        rate.rate = rate.replicates == 0 ? 0.0 : static_cast<double>(rate.correct) / static_cast<double>(rate.replicates);
    return report;
}

// ---------------------------------------------------------------------------
// Outliers and sensitivity

struct OutlierDrug {
    std::string drug;
    RiskCategory truth = RiskCategory::low;
    double rate_a = 0.0;
    double rate_b = 0.0;
    double average = 0.0;
};

/// Drugs whose correct rate is below `threshold` under both models.
inline std::vector<OutlierDrug> detect_outliers(std::span<const DrugRate> rates_a, std::span<const DrugRate> rates_b,
                                                double threshold = 0.25) {
    std::set<std::string_view> ids_a;
    std::set<std::string_view> ids_b;
    for (const auto& r : rates_a) ids_a.insert(r.drug);
    for (const auto& r : rates_b) ids_b.insert(r.drug);
    if (ids_a != ids_b || ids_a.size() != rates_a.size() || ids_b.size() != rates_b.size())
        throw DataError("detect_outliers: the two models' drug sets differ");

    std::vector<OutlierDrug> out;
    for (const auto& a : rates_a) {
        const auto b = std::find_if(rates_b.begin(), rates_b.end(), [&](const DrugRate& r) { return r.drug == a.drug; });
        if (a.rate < threshold && b->rate < threshold)
            out.push_back({a.drug, a.truth, a.rate, b->rate, (a.rate + b->rate) / 2.0});
    }
    return out;
}

/// Dataset without the listed drugs; every category must keep at least one drug.
inline Dataset remove_drugs(const Dataset& dataset, std::span<const std::string> drugs) {
    std::set<std::string_view> drop;
    for (const auto& id : drugs) {
        if (!dataset.find_drug(id)) throw DataError("drug '" + id + "' is not in the dataset");
        drop.insert(id);
    }
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < dataset.drug_count(); ++k)
        if (!drop.contains(dataset.drug(k).id)) keep.push_back(k);
    Dataset reduced = dataset.select_drugs(keep);
    const auto counts = reduced.category_counts();
    for (auto c : all_categories)
        if (counts[index_of(c)] == 0)
            throw FitError("removing the outlier drugs leaves no " + std::string(to_string(c)) + "-risk drug");
    return reduced;
}

struct SensitivityArm {
    LearnerKind learner = LearnerKind::logistic;
    EvaluationReport before;
    EvaluationReport after;
};

struct SensitivityReport {
    std::vector<std::string> removed;
    std::size_t drugs_before = 0;
    std::size_t drugs_after = 0;
    std::vector<SensitivityArm> arms;
};

/// Leave-one-drug-out validation before and after removing `outliers`, per learner.
inline SensitivityReport sensitivity(const Dataset& dataset, std::span<const std::string> outliers,
                                     std::span<const Learner> learners, const EvaluationOptions& options = {}) {
    const Dataset reduced = remove_drugs(dataset, outliers);
    SensitivityReport report;
    report.removed.assign(outliers.begin(), outliers.end());
    report.drugs_before = dataset.drug_count();
    report.drugs_after = reduced.drug_count();
    for (const auto& learner : learners)
        report.arms.push_back({kind_of(learner), lodo_cv(dataset, learner, options), lodo_cv(reduced, learner, options)});
    return report;
}

// ---------------------------------------------------------------------------
// Control analysis

struct ControlFold {
    std::string test_drug;
    RiskCategory control_predicted = RiskCategory::low;
    bool control_correct = false;
};

struct ControlReport {
    LearnerKind learner = LearnerKind::logistic;
    std::string control;
    /// Pooled over every test drug.
    EvaluationReport without_control;
    /// Pooled over folds where the control drug was predicted correctly; empty if none.
    std::optional<EvaluationReport> with_control;
    std::vector<ControlFold> folds;
    std::size_t control_correct_folds = 0;
    double control_correct_rate = 0.0;
    bool with_control_undefined() const noexcept { return !with_control.has_value(); }
};

/// For every test drug other than the control: fit on the remaining N-2
/// drugs, predict the test and control drugs together, and keep the test
/// drug's predictions in the "with control" pool only if the control's
/// drug-level prediction is correct.
inline ControlReport control_analysis(const Dataset& dataset, std::string_view control_drug, const Learner& learner,
                                      const EvaluationOptions& options = {}) {
    const auto control = dataset.find_drug(control_drug);
    if (!control) throw ConfigError("control drug '" + std::string(control_drug) + "' is not in the dataset");
    const std::size_t n = dataset.drug_count();
    if (n < 3) throw FitError("control analysis needs at least three drugs");
    const Dataset data = options.imputation == ImputationMode::global_leaky
                             ? detail::global_imputation(dataset, options)
                             : dataset;

    std::vector<std::size_t> tests;
    for (std::size_t k = 0; k < n; ++k)
        if (k != *control) tests.push_back(k);

    struct FoldOutput {
        detail::HeldOutDrug test;
        DrugOutcome control;
    };
    std::vector<FoldOutput> outputs(tests.size());
    parallel_for(tests.size(), options.workers, [&](std::size_t i) {
        const std::size_t k = tests[i];
        outputs[i] = detail::with_context("control fold for drug '" + data.drug(k).id + "'", [&] {
            std::vector<std::size_t> train_ids;
            for (std::size_t j = 0; j < n; ++j)
                if (j != k && j != *control) train_ids.push_back(j);
            const std::size_t test_ids[] = {std::min(k, *control), std::max(k, *control)};
            auto predicted = detail::fit_and_predict(data.select_drugs(train_ids), data.select_drugs(test_ids),
                                                     learner, derive_seed(options.seed, {k}), options);
            const bool test_first = k < *control;
            return FoldOutput{std::move(predicted[test_first ? 0 : 1]), predicted[test_first ? 1 : 0].outcome};
        });
    });

    ControlReport report;
    report.learner = kind_of(learner);
    report.control = std::string(control_drug);
    std::vector<detail::HeldOutDrug> all;
    std::vector<detail::HeldOutDrug> conditioned;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const bool ok = outputs[i].control.correct();
        report.folds.push_back({outputs[i].test.outcome.drug, outputs[i].control.predicted, ok});
        report.control_correct_folds += ok ? 1 : 0;
        all.push_back(outputs[i].test);
        if (ok) conditioned.push_back(outputs[i].test);
    }
    report.control_correct_rate =
        static_cast<double>(report.control_correct_folds) / static_cast<double>(outputs.size());
    report.without_control = detail::build_report(report.learner, all);
    if (!conditioned.empty()) report.with_control = detail::build_report(report.learner, conditioned);
    return report;
}

// ---------------------------------------------------------------------------
// Permutation importance

struct ImportanceOptions {
    std::size_t repetitions = 100;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::size_t imputer_bags = 25;
};

struct PredictorImportance {
    std::string predictor;
    double importance = 0.0;
    /// importance / max importance; empty when no importance is positive.
    std::optional<double> normalized;
    double mean_permuted_accuracy = 0.0;
};

struct ImportanceReport {
    LearnerKind learner = LearnerKind::forest;
    /// Reference accuracy the permuted accuracies are subtracted from.
    double baseline_accuracy = 0.0;
    /// Observation-level accuracy of the fitted model on the unpermuted data.
    double unpermuted_accuracy = 0.0;
    std::size_t repetitions = 0;
    std::vector<PredictorImportance> predictors;
    /// permuted_accuracy[j][g]
    std::vector<std::vector<double>> permuted_accuracy;
    bool normalization_undefined = false;
};

namespace detail {

inline double observation_accuracy(const AnyOrdinalModel& model, const Dataset& data, const RowMatrix& values) {
    std::size_t hits = 0;
    for (std::size_t r = 0; r < values.rows(); ++r)
        hits += predict_observation(model, values.row(r)).category == data.row_label(r) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(values.rows());
}

} // namespace detail

/// Fits the ordinal model once on the full dataset, then for each predictor j
/// and repetition g shuffles column j across all observations and records the
/// observation-level accuracy. imp_j = baseline - mean_g acc_{g,j}.
inline ImportanceReport permutation_importance(const Dataset& dataset, const Learner& learner,
                                               double baseline_accuracy, const ImportanceOptions& options = {}) {
    if (options.repetitions < 1) throw std::invalid_argument("permutation_importance: repetitions must be >= 1");
    Dataset data = dataset;
    if (data.has_missing()) {
        EvaluationOptions eo;
        eo.seed = options.seed;
        eo.imputer_bags = options.imputer_bags;
        data = detail::global_imputation(data, eo);
    }
    const auto model = fit_ordinal(data, learner, derive_seed(options.seed, {0}));
    const std::size_t p = data.predictor_count();
    const std::size_t g_count = options.repetitions;

    ImportanceReport report;
    report.learner = kind_of(learner);
    report.baseline_accuracy = baseline_accuracy;
    report.repetitions = g_count;
    report.unpermuted_accuracy = detail::observation_accuracy(model, data, data.values());
    report.permuted_accuracy.assign(p, std::vector<double>(g_count, 0.0));

    parallel_for(p * g_count, options.workers, [&](std::size_t task) {
        const std::size_t j = task / g_count;
        const std::size_t g = task % g_count;
        RowMatrix permuted = data.values();
        std::vector<double> column(permuted.rows());
        for (std::size_t r = 0; r < column.size(); ++r) column[r] = permuted(r, j);
        Rng rng(derive_seed(options.seed, {1, j, g}));
        rng.shuffle(std::span<double>(column));
        for (std::size_t r = 0; r < column.size(); ++r) permuted(r, j) = column[r];
        report.permuted_accuracy[j][g] = detail::observation_accuracy(model, data, permuted);
    });

    double max_importance = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < p; ++j) {
        double sum = 0.0;
        for (double a : report.permuted_accuracy[j]) sum += a;
        const double mean = sum / static_cast<double>(g_count);
        report.predictors.push_back({data.schema()[j].name, baseline_accuracy - mean, std::nullopt, mean});
        max_importance = std::max(max_importance, baseline_accuracy - mean);
    }
    report.normalization_undefined = !(max_importance > 0.0);
    if (!report.normalization_undefined)
        for (auto& pi : report.predictors) pi.normalized = pi.importance / max_importance;
    return report;
}

/// Uses the upper 95% bound of the bootstrap observation-level accuracy as baseline.
inline ImportanceReport permutation_importance(const Dataset& dataset, const Learner& learner,
                                               const BootstrapReport& bootstrap, const ImportanceOptions& options = {}) {
    const auto& s = bootstrap.summary(Level::observations, Metric::accuracy3);
    if (s.count == 0) throw FitError("permutation_importance: bootstrap report has no accuracy values");
    return permutation_importance(dataset, learner, s.ci_upper, options);
}

} // namespace ordrisk
