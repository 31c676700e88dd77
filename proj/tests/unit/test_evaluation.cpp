#include <catch_amalgamated.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ordrisk/ordrisk.hpp"

using namespace ordrisk;

namespace {

const Learner logistic{LogisticLearner{}};
const Learner small_forest{ForestLearner{{.trees = 30}}};

Dataset relabel(const Dataset& d, const std::map<std::string, RiskCategory>& changes) {
    std::vector<RiskCategory> labels;
    for (const auto& drug : d.drugs()) {
        const auto it = changes.find(drug.id);
        labels.push_back(it == changes.end() ? drug.label : it->second);
    }
    return d.with_labels(labels);
}

} // namespace

TEST_CASE("lodo_cv predicts every drug exactly once") {
    SyntheticOptions opt;
    opt.drugs_per_category = {9, 11, 8};
    opt.observations_per_drug = 3;
    const auto d = generate_synthetic(opt).data;
    const auto r = lodo_cv(d, logistic, {.seed = 1});
    REQUIRE(r.drug_outcomes.size() == 28);
    REQUIRE(r.drug_predictions.size() == 28);
    REQUIRE(r.observation_predictions.size() == d.row_count());
    std::set<std::string> ids;
    for (const auto& o : r.drug_outcomes) ids.insert(o.drug);
    REQUIRE(ids.size() == 28);
    std::set<std::string> unit_ids;
    for (const auto& u : r.observation_predictions) unit_ids.insert(u.id);
    REQUIRE(unit_ids.size() == d.row_count());
}

TEST_CASE("fold k uses the seed derived from (seed, k)") {
    const auto d = generate_synthetic({.seed = 2}).data;
    const auto r = lodo_cv(d, small_forest, {.seed = 55});
    for (std::size_t k : {0u, 7u, 17u}) {
        const auto split = split_lodo(d, k);
        const auto model = fit_ordinal(split.train, small_forest, derive_seed(55, {k}));
        const auto p = predict_drug(model, split.test.values());
        REQUIRE(r.drug_outcomes[k].probabilities == p.probabilities);
        REQUIRE(r.drug_outcomes[k].predicted == p.category);
    }
}

TEST_CASE("clamp total equals the clamped observations") {
    const auto d = generate_synthetic({.noise_sd = 1.0, .seed = 3}).data;
    const auto r = lodo_cv(d, small_forest, {.seed = 3});
    std::size_t clamped = 0;
    for (const auto& o : r.drug_outcomes) clamped += o.clamped;
    REQUIRE(r.clamp_count == clamped);
    for (const auto& u : r.observation_predictions) {
        REQUIRE(std::abs(u.probabilities.sum() - 1.0) <= 1e-12);
        REQUIRE(u.probabilities.intermediate >= 0.0);
    }
}

TEST_CASE("lodo_cv is worker-count invariant") {
    const auto d = generate_synthetic({.noise_sd = 1.0, .missing_fraction = 0.05, .seed = 4}).data;
    const EvaluationOptions one{.seed = 9, .imputer_bags = 5, .workers = 1};
    const EvaluationOptions many{.seed = 9, .imputer_bags = 5, .workers = 6};
    REQUIRE(lodo_cv(d, small_forest, one) == lodo_cv(d, small_forest, many));
}

TEST_CASE("zero-noise linear data: logistic drug accuracy is 1") {
    const auto r = lodo_cv(generate_synthetic({.noise_sd = 0.0, .seed = 5}).data, logistic, {});
    REQUIRE(*r.drug_metrics[Metric::accuracy3] == 1.0);
    for (auto level : all_levels)
        for (auto m : all_metrics) {
            REQUIRE(r.metrics(level)[m].has_value());
            REQUIRE(*r.metrics(level)[m] >= 0.0);
            REQUIRE(*r.metrics(level)[m] <= 1.0);
        }
}

TEST_CASE("fit errors name the failing fold") {
    SyntheticOptions opt;
    opt.drugs_per_category = {3, 3, 1};
    const auto d = generate_synthetic(opt).data;
    try {
        lodo_cv(d, logistic, {});
        FAIL("expected FitError");
    } catch (const FitError& e) {
        const std::string msg = e.what();
        CAPTURE(msg);
        REQUIRE(msg.find("fold 7") != std::string::npos);
        REQUIRE(msg.find("H01") != std::string::npos);
    }
}

TEST_CASE("per-fold imputation keeps the held-out drug out of its fold's model") {
    // Change one observed cell of drug k. Its other rows' predictions must not move
    // under per-fold imputation; under global imputation the change leaks into the
    // training data through the imputer.
    const auto d = generate_synthetic({.noise_sd = 1.0, .missing_fraction = 0.15, .seed = 6}).data;
    const std::size_t k = 4;
    const std::size_t row = d.drug_rows(k)[0];
    std::size_t col = 0;
    while (is_missing(d.values()(row, col))) ++col;
    RowMatrix v = d.values();
    v(row, col) += 25.0;
    const auto changed = d.with_values(v);

    auto other_rows = [&](const EvaluationReport& r) {
        std::vector<UnitPrediction> out;
        for (const auto& u : r.observation_predictions)
            if (u.id.rfind(d.drug(k).id + "/", 0) == 0 && u.id != d.drug(k).id + "/1") out.push_back(u);
        return out;
    };
    const EvaluationOptions per_fold{.seed = 6, .imputer_bags = 10};
    REQUIRE(other_rows(lodo_cv(d, logistic, per_fold)) == other_rows(lodo_cv(changed, logistic, per_fold)));

    EvaluationOptions leaky = per_fold;
    leaky.imputation = ImputationMode::global_leaky;
    REQUIRE_FALSE(other_rows(lodo_cv(d, logistic, leaky)) == other_rows(lodo_cv(changed, logistic, leaky)));
}

TEST_CASE("percentile quantiles interpolate linearly") {
    const std::vector<double> v{1, 2, 3, 4, 5};
    REQUIRE(quantile_sorted(v, 0.0) == 1.0);
    REQUIRE(quantile_sorted(v, 1.0) == 5.0);
    REQUIRE(quantile_sorted(v, 0.5) == 3.0);
    REQUIRE(quantile_sorted(v, 0.025) == Catch::Approx(1.1));
    REQUIRE(quantile_sorted(v, 0.975) == Catch::Approx(4.9));
    REQUIRE(quantile_sorted(std::vector<double>{7}, 0.3) == 7.0);
}

TEST_CASE("bootstrap replicates keep every drug's observation count") {
    SyntheticOptions opt;
    opt.observations_per_drug = 5;
    const auto d = generate_synthetic(opt).data;
    for (std::size_t r = 0; r < 20; ++r) {
        const auto s = bootstrap_replicate_dataset(d, 8, r);
        REQUIRE(s.drug_count() == d.drug_count());
        for (std::size_t k = 0; k < d.drug_count(); ++k) {
            REQUIRE(s.drug(k) == d.drug(k));
            REQUIRE(s.drug_rows(k).size() == d.drug_rows(k).size());
        }
    }
}

TEST_CASE("one bootstrap replicate equals lodo_cv on its resample") {
    const auto d = generate_synthetic({.noise_sd = 1.0, .seed = 7}).data;
    const auto b = stratified_bootstrap(d, logistic, 1, {.seed = 21});
    REQUIRE(b.replicates.size() == 1);
    const auto direct = lodo_cv(bootstrap_replicate_dataset(d, 21, 0), logistic, {.seed = bootstrap_replicate_seed(21, 0)});
    REQUIRE(b.replicates[0] == direct);
}

TEST_CASE("bootstrap summaries and correct rates") {
    const auto d = generate_synthetic({.noise_sd = 1.5, .seed = 8}).data;
    const auto b = stratified_bootstrap(d, logistic, 30, {.seed = 3});
    REQUIRE(b.failed == 0);
    REQUIRE(b.replicates.size() == 30);
    for (auto level : all_levels) {
        for (auto m : all_metrics) {
            const auto& s = b.summary(level, m);
            REQUIRE(s.count == 30);
            REQUIRE(s.ci_lower <= s.ci_upper);
            REQUIRE(s.min <= s.mean);
            REQUIRE(s.mean <= s.max);
            REQUIRE(s.min <= s.ci_lower);
            REQUIRE(s.ci_upper <= s.max);
        }
    }
    REQUIRE(b.drug_rates.size() == d.drug_count());
    for (std::size_t k = 0; k < d.drug_count(); ++k) {
        std::size_t hits = 0;
        for (const auto& rep : b.replicates) hits += rep.drug_outcomes[k].correct() ? 1 : 0;
        REQUIRE(b.drug_rates[k].correct == hits);
        REQUIRE(b.drug_rates[k].rate == static_cast<double>(hits) / 30.0);
        REQUIRE(b.drug_rates[k].rate >= 0.0);
        REQUIRE(b.drug_rates[k].rate <= 1.0);
    }
}

TEST_CASE("bootstrap is worker-count invariant") {
    const auto d = generate_synthetic({.noise_sd = 1.0, .missing_fraction = 0.05, .seed = 9}).data;
    const auto a = stratified_bootstrap(d, small_forest, 6, {.seed = 5, .imputer_bags = 4, .workers = 1});
    const auto b = stratified_bootstrap(d, small_forest, 6, {.seed = 5, .imputer_bags = 4, .workers = 4});
    REQUIRE(a == b);
}

TEST_CASE("degenerate replicates are counted as failures") {
    SyntheticOptions opt;
    opt.drugs_per_category = {3, 3, 1};
    const auto b = stratified_bootstrap(generate_synthetic(opt).data, logistic, 4, {});
    REQUIRE(b.failed == 4);
    REQUIRE(b.failures.size() == 4);
    REQUIRE(b.replicates.empty());
    REQUIRE(b.summary(Level::drugs, Metric::accuracy3).count == 0);
}

TEST_CASE("outlier rule is a strict conjunction") {
    const std::vector<DrugRate> a{{"bep", RiskCategory::high, 0, 10, 0.0},
                                  {"x", RiskCategory::low, 3, 10, 0.30},
                                  {"y", RiskCategory::low, 0, 10, 0.25},
                                  {"z", RiskCategory::intermediate, 1, 10, 0.10}};
    const std::vector<DrugRate> b{{"z", RiskCategory::intermediate, 2, 10, 0.20},
                                  {"bep", RiskCategory::high, 0, 10, 0.0},
                                  {"x", RiskCategory::low, 1, 10, 0.10},
                                  {"y", RiskCategory::low, 0, 10, 0.0}};
    const auto out = detect_outliers(a, b);
    REQUIRE(out.size() == 2);
    REQUIRE(out[0].drug == "bep");
    REQUIRE(out[0].average == 0.0);
    REQUIRE(out[1].drug == "z");
    REQUIRE(out[1].average == Catch::Approx(0.15));
    REQUIRE(detect_outliers(std::span(a).subspan(1, 1), std::span(b).subspan(2, 1)).empty());
    REQUIRE_THROWS_AS(detect_outliers(std::span(a).first(2), b), DataError);
}

TEST_CASE("sensitivity with no outliers changes nothing") {
    const auto d = generate_synthetic({.noise_sd = 1.0, .seed = 10}).data;
    const std::vector<Learner> learners{logistic, small_forest};
    const auto s = sensitivity(d, {}, learners, {.seed = 2});
    REQUIRE(s.arms.size() == 2);
    for (const auto& arm : s.arms) REQUIRE(arm.before == arm.after);
}

TEST_CASE("removing mislabeled drugs raises drug accuracy") {
    const auto clean = generate_synthetic({.noise_sd = 0.5, .seed = 11}).data;
    const auto d = relabel(clean, {{"L02", RiskCategory::high}, {"H03", RiskCategory::low}});
    const std::vector<std::string> outliers{"L02", "H03"};
    const std::vector<Learner> learners{logistic};
    const auto s = sensitivity(d, outliers, learners, {.seed = 4});
    REQUIRE(s.drugs_after == 16);
    const double before = *s.arms[0].before.drug_metrics[Metric::accuracy3];
    const double after = *s.arms[0].after.drug_metrics[Metric::accuracy3];
    CAPTURE(before, after);
    REQUIRE(after > before);
    // frozen: one of the 16 remaining drugs stays misclassified under seed 4
    REQUIRE(after == 15.0 / 16.0);
}

TEST_CASE("sensitivity errors") {
    SyntheticOptions opt;
    opt.drugs_per_category = {2, 2, 1};
    const auto d = generate_synthetic(opt).data;
    const std::vector<Learner> learners{logistic};
    REQUIRE_THROWS_AS(sensitivity(d, std::vector<std::string>{"H01"}, learners, {}), FitError);
    REQUIRE_THROWS_AS(sensitivity(d, std::vector<std::string>{"nope"}, learners, {}), DataError);
}

TEST_CASE("control analysis: always-correct control gives identical arms") {
    const auto d = generate_synthetic({.noise_sd = 0.3, .seed = 12}).data;
    const auto c = control_analysis(d, "H02", logistic, {.seed = 1});
    REQUIRE(c.folds.size() == d.drug_count() - 1);
    REQUIRE(c.control_correct_rate == 1.0);
    REQUIRE(c.with_control.has_value());
    REQUIRE(*c.with_control == c.without_control);
}

TEST_CASE("control analysis: never-correct control leaves the conditional arm undefined") {
    const auto d = relabel(generate_synthetic({.noise_sd = 0.3, .seed = 13}).data, {{"L01", RiskCategory::high}});
    const auto c = control_analysis(d, "L01", logistic, {.seed = 1});
    REQUIRE(c.control_correct_folds == 0);
    REQUIRE(c.with_control_undefined());
}

TEST_CASE("control analysis: conditional predictions are a subset of the unconditional ones") {
    SyntheticOptions opt;
    opt.drugs_per_category = {9, 11, 8};
    opt.observations_per_drug = 3;
    opt.noise_sd = 1.5;
    opt.seed = 14;
    const auto d = generate_synthetic(opt).data;
    const auto c = control_analysis(d, "H05", small_forest, {.seed = 1});
    REQUIRE(c.folds.size() == 27);
    REQUIRE(c.without_control.drug_outcomes.size() == 27);
    for (const auto& f : c.folds) REQUIRE(f.test_drug != "H05");
    if (c.with_control) {
        for (const auto& u : c.with_control->drug_predictions)
            REQUIRE(std::find(c.without_control.drug_predictions.begin(), c.without_control.drug_predictions.end(), u) !=
                    c.without_control.drug_predictions.end());
        for (const auto& u : c.with_control->observation_predictions)
            REQUIRE(std::find(c.without_control.observation_predictions.begin(),
                              c.without_control.observation_predictions.end(),
                              u) != c.without_control.observation_predictions.end());
    }
    REQUIRE(c.control_correct_rate == static_cast<double>(c.control_correct_folds) / 27.0);
    REQUIRE_THROWS_AS(control_analysis(d, "absent", logistic, {}), ConfigError);
}

TEST_CASE("permutation importance: noise column is unimportant, signal column tops") {
    const auto d = generate_synthetic({.noise_sd = 0.5, .seed = 15}).data;
    const ForestLearner forest{{.trees = 100}};
    const auto boot = stratified_bootstrap(d, forest, 10, {.seed = 15});
    const auto imp = permutation_importance(d, forest, boot, {.repetitions = 20, .seed = 15});
    REQUIRE(imp.repetitions == 20);
    REQUIRE(imp.baseline_accuracy == boot.summary(Level::observations, Metric::accuracy3).ci_upper);
    REQUIRE_FALSE(imp.normalization_undefined);
    double top = 0.0;
    for (const auto& p : imp.predictors) top = std::max(top, *p.normalized);
    REQUIRE(top == 1.0);
    CAPTURE(*imp.predictors[0].normalized, *imp.predictors[3].normalized);
    REQUIRE(*imp.predictors[0].normalized == 1.0);
    REQUIRE(*imp.predictors[3].normalized <= 0.1);
    for (std::size_t j = 0; j < imp.predictors.size(); ++j) {
        REQUIRE(imp.predictors[j].importance <= imp.baseline_accuracy);
        for (double a : imp.permuted_accuracy[j]) {
            REQUIRE(a >= 0.0);
            REQUIRE(a <= 1.0);
        }
    }
}

TEST_CASE("permutation importance: shuffling a constant column changes nothing") {
    auto d = generate_synthetic({.seed = 16}).data;
    RowMatrix v = d.values();
    for (std::size_t r = 0; r < v.rows(); ++r) v(r, 3) = 1.25;
    d = d.with_values(v);
    const auto imp = permutation_importance(d, Learner{LogisticLearner{}}, 0.9, {.repetitions = 5, .seed = 2});
    for (double a : imp.permuted_accuracy[3]) REQUIRE(a == imp.unpermuted_accuracy);
    REQUIRE(imp.predictors[3].importance == Catch::Approx(0.9 - imp.unpermuted_accuracy).margin(1e-15));
}

TEST_CASE("permutation importance: no positive importance leaves normalization undefined") {
    const auto d = generate_synthetic({.seed = 17}).data;
    const auto imp = permutation_importance(d, logistic, 0.0, {.repetitions = 3, .seed = 1});
    REQUIRE(imp.normalization_undefined);
    for (const auto& p : imp.predictors) REQUIRE_FALSE(p.normalized.has_value());
}

TEST_CASE("permutation importance is worker-count invariant") {
    const auto d = generate_synthetic({.noise_sd = 1.0, .seed = 18}).data;
    const auto a = permutation_importance(d, small_forest, 0.8, {.repetitions = 4, .seed = 3, .workers = 1});
    const auto b = permutation_importance(d, small_forest, 0.8, {.repetitions = 4, .seed = 3, .workers = 5});
    REQUIRE(a.permuted_accuracy == b.permuted_accuracy);
}
