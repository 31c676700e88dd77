// ordrisk: command-line front end for the ordinal risk pipeline.
//
// Exit codes: 0 ok, 2 configuration, 3 data, 4 model fitting.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ordrisk/ordrisk.hpp"
#include "run_config.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace ordrisk::cli {
namespace {

// ---------------------------------------------------------------------------
// Output helpers

std::string out_path(const RunConfig& c, const std::string& name) { return (fs::path(c.out_dir) / name).string(); }

void ensure_out_dir(const RunConfig& c) {
    std::error_code ec;
    fs::create_directories(c.out_dir, ec);
    if (ec || !fs::is_directory(c.out_dir)) throw ConfigError("cannot create output directory '" + c.out_dir + "'");
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << content;
    if (!out) throw ConfigError("failed writing '" + path + "'");
}

void write_json(const std::string& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

std::string cell(const std::optional<double>& v) { return v ? format_number(*v) : "undefined"; }

json value_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string model_name(LearnerKind k) { return std::string(to_string(k)); }

std::string csv_field(std::string_view s) { return detail::quote_if_needed(s); }

std::string_view imputation_name(ImputationMode m) {
    return m == ImputationMode::per_fold ? "per-fold" : "global-leaky";
}

std::string_view schema_name(SchemaChoice s) {
    switch (s) {
    case SchemaChoice::stemcell7: return "stemcell7";
    case SchemaChoice::wedge15: return "wedge15";
    default: return "custom";
    }
}

json config_json(const RunConfig& c) {
    json models = json::array();
    for (auto m : c.models) models.push_back(model_name(m));
    return json{{"input", c.input},
                {"schema", schema_name(c.schema)},
                {"models", models},
                {"seed", c.seed},
                {"trees", c.trees},
                {"replicates", c.replicates},
                {"repetitions", c.repetitions},
                {"threshold", c.threshold},
                {"control", c.control},
                {"imputation", imputation_name(c.imputation)},
                {"imputer_bags", c.imputer_bags}};
}

json header(std::string_view command, const RunConfig& c) {
    return json{{"schema_version", schema_version}, {"command", command}, {"config", config_json(c)}};
}

json metrics_json(const MetricSet& m) {
    json out = json::object();
    for (auto metric : all_metrics) out[std::string(to_string(metric))] = value_or_null(m[metric]);
    return out;
}

json levels_json(const EvaluationReport& r) {
    json out = json::object();
    for (auto level : all_levels) out[std::string(to_string(level))] = metrics_json(r.metrics(level));
    return out;
}

json summary_json(const MetricSummary& s) {
    if (s.count == 0)
        return json{{"count", 0}, {"mean", nullptr}, {"ci_lower", nullptr}, {"ci_upper", nullptr},
                    {"min", nullptr}, {"max", nullptr}};
    return json{{"count", s.count}, {"mean", s.mean}, {"ci_lower", s.ci_lower},
                {"ci_upper", s.ci_upper}, {"min", s.min}, {"max", s.max}};
}

std::string summary_cells(const MetricSummary& s) {
    if (s.count == 0) return "0,undefined,undefined,undefined,undefined,undefined";
    return std::to_string(s.count) + ',' + format_number(s.mean) + ',' + format_number(s.ci_lower) + ',' +
           format_number(s.ci_upper) + ',' + format_number(s.min) + ',' + format_number(s.max);
}

// ---------------------------------------------------------------------------
// Inputs

Dataset load_input(const RunConfig& c) {
    if (c.input.empty()) throw ConfigError("no input file: set 'input' in the config or pass --input");
    auto in = open_input(c.input);
    try {
        switch (c.schema) {
        case SchemaChoice::stemcell7: return load_csv(in, PredictorSchema::stemcell7());
        case SchemaChoice::wedge15: return load_csv(in, PredictorSchema::wedge15());
        default: return load_csv_inferred(in);
        }
    } catch (const DataError& e) {
        throw DataError(c.input + ": " + e.what());
    }
}

json read_json_input(const std::string& path, std::string_view produced_by, std::string_view key) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open '" + path + "': run `ordrisk " + std::string(produced_by) +
                          "` with the same output directory first, or set '" + std::string(key) + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("'" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object() || j.value("schema_version", 0) != schema_version || j.value("command", "") != produced_by)
        throw DataError("'" + path + "' is not a " + std::string(produced_by) + " report of schema version " +
                        std::to_string(schema_version));
    return j;
}

std::string bootstrap_summary_path(const RunConfig& c) {
    return c.bootstrap_summary.empty() ? out_path(c, "bootstrap_summary.json") : c.bootstrap_summary;
}

const json* find_model(const json& report, LearnerKind kind) {
    for (const auto& m : report.at("models"))
        if (m.at("model") == model_name(kind)) return &m;
    return nullptr;
}

std::vector<DrugRate> rates_from_json(const json& model) {
    std::vector<DrugRate> out;
    for (const auto& r : model.at("drug_rates")) {
        const auto truth = parse_risk(r.at("truth").get<std::string>());
        if (!truth) throw DataError("bootstrap summary: bad risk label for drug " + r.at("drug").dump());
        out.push_back({r.at("drug").get<std::string>(), *truth, r.at("correct").get<std::size_t>(),
                       r.at("replicates").get<std::size_t>(), r.at("rate").get<double>()});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_validate(const RunConfig& c) {
    const Dataset data = load_input(c);
    ensure_out_dir(c);
    const auto options = evaluation_options(c);

    json j = header("validate", c);
    j["drugs"] = data.drug_count();
    j["observations"] = data.row_count();
    j["models"] = json::array();
    std::string csv = "model,level,metric,value,clamp_count\n";
    std::string predictions = "model,drug,truth,predicted,p_low,p_intermediate,p_high,observations,clamped\n";
    for (auto kind : c.models) {
        const auto report = lodo_cv(data, make_learner(kind, c), options);
        json drugs = json::array();
        for (const auto& d : report.drug_outcomes) {
            drugs.push_back({{"drug", d.drug},
                             {"truth", to_string(d.truth)},
                             {"predicted", to_string(d.predicted)},
                             {"probabilities",
                              {d.probabilities.low, d.probabilities.intermediate, d.probabilities.high}},
                             {"observations", d.observations},
                             {"clamped", d.clamped}});
            predictions += model_name(kind) + ',' + csv_field(d.drug) + ',' + std::string(to_string(d.truth)) + ',' +
                           std::string(to_string(d.predicted)) + ',' + format_number(d.probabilities.low) + ',' +
                           format_number(d.probabilities.intermediate) + ',' + format_number(d.probabilities.high) +
                           ',' + std::to_string(d.observations) + ',' + std::to_string(d.clamped) + '\n';
        }
        j["models"].push_back({{"model", model_name(kind)},
                               {"clamp_count", report.clamp_count},
                               {"metrics", levels_json(report)},
                               {"drug_predictions", drugs}});
        for (auto level : all_levels)
            for (auto metric : all_metrics)
                csv += model_name(kind) + ',' + std::string(to_string(level)) + ',' + std::string(to_string(metric)) +
                       ',' + cell(report.metrics(level)[metric]) + ',' + std::to_string(report.clamp_count) + '\n';
        std::cout << model_name(kind) << ": drug accuracy " << cell(report.drug_metrics[Metric::accuracy3])
                  << ", observation accuracy " << cell(report.observation_metrics[Metric::accuracy3])
                  << ", clamped " << report.clamp_count << '\n';
    }
    write_json(out_path(c, "point_estimates.json"), j);
    write_file(out_path(c, "point_estimates.csv"), csv);
    write_file(out_path(c, "drug_predictions.csv"), predictions);
    std::cout << "wrote point_estimates.{json,csv} and drug_predictions.csv to " << c.out_dir << '\n';
    return 0;
}

int cmd_bootstrap(const RunConfig& c) {
    const Dataset data = load_input(c);
    ensure_out_dir(c);
    const auto options = evaluation_options(c);

    std::vector<BootstrapReport> reports;
    for (auto kind : c.models) {
        reports.push_back(stratified_bootstrap(data, make_learner(kind, c), c.replicates, options));
        const auto& r = reports.back();
        std::cout << model_name(kind) << ": " << r.replicates.size() << " of " << r.requested
                  << " replicates succeeded, " << r.failed << " failed\n";
        if (r.replicates.empty()) throw FitError(model_name(kind) + ": every bootstrap replicate failed");
    }

    json j = header("bootstrap", c);
    j["models"] = json::array();
    std::string summary_csv = "model,level,metric,count,mean,ci_lower,ci_upper,min,max\n";
    std::string replicate_csv = "model,replicate,level,metric,value\n";
    std::string rates_csv = "model,drug,truth,correct,replicates,rate\n";
    for (const auto& r : reports) {
        const std::string name = model_name(r.learner);
        json summaries = json::object();
        for (auto level : all_levels) {
            json per_metric = json::object();
            for (auto metric : all_metrics) {
                per_metric[std::string(to_string(metric))] = summary_json(r.summary(level, metric));
                summary_csv += name + ',' + std::string(to_string(level)) + ',' + std::string(to_string(metric)) +
                               ',' + summary_cells(r.summary(level, metric)) + '\n';
            }
            summaries[std::string(to_string(level))] = per_metric;
        }
        json rates = json::array();
        for (const auto& d : r.drug_rates) {
            rates.push_back({{"drug", d.drug},
                             {"truth", to_string(d.truth)},
                             {"correct", d.correct},
                             {"replicates", d.replicates},
                             {"rate", d.rate}});
            rates_csv += name + ',' + csv_field(d.drug) + ',' + std::string(to_string(d.truth)) + ',' +
                         std::to_string(d.correct) + ',' + std::to_string(d.replicates) + ',' + format_number(d.rate) +
                         '\n';
        }
        j["models"].push_back({{"model", name},
                               {"requested", r.requested},
                               {"succeeded", r.replicates.size()},
                               {"failed", r.failed},
                               {"failures", r.failures},
                               {"summaries", summaries},
                               {"drug_rates", rates}});
        for (std::size_t i = 0; i < r.replicates.size(); ++i)
            for (auto level : all_levels)
                for (auto metric : all_metrics)
                    replicate_csv += name + ',' + std::to_string(r.replicate_numbers[i] + 1) + ',' +
                                     std::string(to_string(level)) + ',' + std::string(to_string(metric)) + ',' +
                                     cell(r.replicates[i].metrics(level)[metric]) + '\n';
    }
    write_json(out_path(c, "bootstrap_summary.json"), j);
    write_file(out_path(c, "bootstrap_summary.csv"), summary_csv);
    write_file(out_path(c, "bootstrap_replicates.csv"), replicate_csv);
    write_file(out_path(c, "drug_correct_rates.csv"), rates_csv);

    for (auto level : all_levels)
        for (auto metric : all_metrics) {
            std::vector<svg::Series> series;
            for (const auto& r : reports) series.push_back({model_name(r.learner), r.values(level, metric)});
            const std::string title = std::string(to_string(metric)) + " by " + std::string(to_string(level));
            write_file(out_path(c, "bootstrap_" + std::string(to_string(level)) + "_" +
                                       std::string(to_string(metric)) + ".svg"),
                       svg::histogram(title, std::string(to_string(metric)), series));
        }

    std::vector<std::string> names;
    for (const auto& r : reports) names.push_back(model_name(r.learner));
    std::vector<svg::DotGroup> groups;
    for (auto category : all_categories) {
        svg::DotGroup g{std::string(to_string(category)) + " risk", {}, std::vector<std::vector<double>>(reports.size())};
        for (std::size_t k = 0; k < data.drug_count(); ++k) {
            if (data.drug(k).label != category) continue;
            g.labels.push_back(data.drug(k).id);
            for (std::size_t s = 0; s < reports.size(); ++s) g.values[s].push_back(reports[s].drug_rates[k].rate);
        }
        groups.push_back(std::move(g));
    }
    write_file(out_path(c, "drug_correct_rates.svg"),
               svg::dot_plot("Per-drug correct rate across bootstrap replicates", names, groups, c.threshold));
    std::cout << "wrote bootstrap summaries, replicates, drug rates and plots to " << c.out_dir << '\n';
    return 0;
}

int cmd_outliers(const RunConfig& c) {
    const std::string path = bootstrap_summary_path(c);
    const json summary = read_json_input(path, "bootstrap", "bootstrap_summary");
    const json* logistic = find_model(summary, LearnerKind::logistic);
    const json* forest = find_model(summary, LearnerKind::forest);
    if (logistic == nullptr || forest == nullptr)
        throw ConfigError("outlier detection needs bootstrap drug rates of both models; rerun bootstrap with "
                          "models = logistic,forest");
    const auto a = rates_from_json(*logistic);
    const auto b = rates_from_json(*forest);
    const auto outliers = detect_outliers(a, b, c.threshold);
    ensure_out_dir(c);

    json j = header("outliers", c);
    j["threshold"] = c.threshold;
    j["outliers"] = json::array();
    std::string csv = "drug,truth,rate_logistic,rate_forest,average\n";
    for (const auto& o : outliers) {
        j["outliers"].push_back({{"drug", o.drug},
                                 {"truth", to_string(o.truth)},
                                 {"rate_logistic", o.rate_a},
                                 {"rate_forest", o.rate_b},
                                 {"average", o.average}});
        csv += csv_field(o.drug) + ',' + std::string(to_string(o.truth)) + ',' + format_number(o.rate_a) + ',' +
               format_number(o.rate_b) + ',' + format_number(o.average) + '\n';
    }
    write_json(out_path(c, "outliers.json"), j);
    write_file(out_path(c, "outliers.csv"), csv);
    std::cout << outliers.size() << " potential outlier drug(s) with correct rate < " << format_number(c.threshold)
              << " under both models\n";
    for (const auto& o : outliers) std::cout << "  " << o.drug << " (" << to_string(o.truth) << ")\n";
    return 0;
}

int cmd_sensitivity(const RunConfig& c) {
    const std::string path = c.outliers.empty() ? out_path(c, "outliers.json") : c.outliers;
    const json report = read_json_input(path, "outliers", "outliers");
    std::vector<std::string> removed;
    for (const auto& o : report.at("outliers")) removed.push_back(o.at("drug").get<std::string>());
    if (removed.empty()) {
        std::cout << "no potential outlier drugs in '" << path << "': nothing to remove, sensitivity not run\n";
        return 0;
    }
    const Dataset data = load_input(c);
    std::vector<Learner> learners;
    for (auto kind : c.models) learners.push_back(make_learner(kind, c));
    const auto s = sensitivity(data, removed, learners, evaluation_options(c));
    ensure_out_dir(c);

    json j = header("sensitivity", c);
    j["removed"] = s.removed;
    j["drugs_before"] = s.drugs_before;
    j["drugs_after"] = s.drugs_after;
    j["models"] = json::array();
    std::string csv = "model,level,metric,before,after\n";
    std::vector<svg::BarPanel> panels;
    for (const auto& arm : s.arms) {
        const std::string name = model_name(arm.learner);
        j["models"].push_back({{"model", name},
                               {"before", levels_json(arm.before)},
                               {"after", levels_json(arm.after)},
                               {"clamp_count_before", arm.before.clamp_count},
                               {"clamp_count_after", arm.after.clamp_count}});
        for (auto level : all_levels) {
            svg::BarPanel panel{name + ", by " + std::string(to_string(level)), {}, {{}, {}}};
            for (auto metric : all_metrics) {
                const auto& before = arm.before.metrics(level)[metric];
                const auto& after = arm.after.metrics(level)[metric];
                csv += name + ',' + std::string(to_string(level)) + ',' + std::string(to_string(metric)) + ',' +
                       cell(before) + ',' + cell(after) + '\n';
                panel.categories.emplace_back(to_string(metric));
                panel.values[0].push_back(before);
                panel.values[1].push_back(after);
            }
            panels.push_back(std::move(panel));
        }
    }
    write_json(out_path(c, "sensitivity.json"), j);
    write_file(out_path(c, "sensitivity.csv"), csv);
    write_file(out_path(c, "sensitivity.svg"),
               svg::grouped_bars("Before and after removing potential outlier drugs",
                                 {"before (" + std::to_string(s.drugs_before) + " drugs)",
                                  "after (" + std::to_string(s.drugs_after) + " drugs)"},
                                 panels));
    std::cout << "removed " << s.removed.size() << " drug(s); wrote sensitivity.{json,csv,svg} to " << c.out_dir
              << '\n';
    return 0;
}

int cmd_control(const RunConfig& c) {
    if (c.control.empty()) throw ConfigError("no control drug: set 'control' in the config or pass --control");
    const Dataset data = load_input(c);
    if (!data.find_drug(c.control)) throw ConfigError("control drug '" + c.control + "' is not in " + c.input);
    const auto options = evaluation_options(c);
    std::vector<ControlReport> reports;
    for (auto kind : c.models) reports.push_back(control_analysis(data, c.control, make_learner(kind, c), options));
    ensure_out_dir(c);

    json j = header("control", c);
    j["control"] = c.control;
    j["models"] = json::array();
    std::string csv = "model,level,metric,without_control,with_control\n";
    std::string folds_csv = "model,test_drug,control_predicted,control_correct\n";
    for (const auto& r : reports) {
        const std::string name = model_name(r.learner);
        json folds = json::array();
        for (const auto& f : r.folds) {
            folds.push_back({{"test_drug", f.test_drug},
                             {"control_predicted", to_string(f.control_predicted)},
                             {"control_correct", f.control_correct}});
            folds_csv += name + ',' + csv_field(f.test_drug) + ',' + std::string(to_string(f.control_predicted)) +
                         ',' + (f.control_correct ? "true" : "false") + '\n';
        }
        j["models"].push_back({{"model", name},
                               {"folds", r.folds.size()},
                               {"control_correct_folds", r.control_correct_folds},
                               {"control_correct_rate", r.control_correct_rate},
                               {"without_control", levels_json(r.without_control)},
                               {"with_control", r.with_control ? levels_json(*r.with_control) : json("undefined")},
                               {"fold_details", folds}});
        for (auto level : all_levels)
            for (auto metric : all_metrics)
                csv += name + ',' + std::string(to_string(level)) + ',' + std::string(to_string(metric)) + ',' +
                       cell(r.without_control.metrics(level)[metric]) + ',' +
                       (r.with_control ? cell(r.with_control->metrics(level)[metric]) : "undefined") + '\n';
        std::cout << name << ": control '" << c.control << "' correct in " << r.control_correct_folds << " of "
                  << r.folds.size() << " folds\n";
    }
    write_json(out_path(c, "control.json"), j);
    write_file(out_path(c, "control.csv"), csv);
    write_file(out_path(c, "control_folds.csv"), folds_csv);
    std::cout << "wrote control.{json,csv} and control_folds.csv to " << c.out_dir << '\n';
    return 0;
}

int cmd_importance(const RunConfig& c) {
    const std::string path = bootstrap_summary_path(c);
    const json summary = read_json_input(path, "bootstrap", "bootstrap_summary");
    std::vector<std::pair<LearnerKind, double>> baselines;
    for (auto kind : c.models) {
        const json* m = find_model(summary, kind);
        if (m == nullptr)
            throw ConfigError("'" + path + "' has no bootstrap results for " + model_name(kind) +
                              "; run bootstrap with that model first");
        const auto& upper = m->at("summaries").at("observations").at("accuracy3").at("ci_upper");
        if (upper.is_null()) throw DataError("'" + path + "': observation accuracy interval is undefined");
        baselines.emplace_back(kind, upper.get<double>());
    }
    const Dataset data = load_input(c);
    ImportanceOptions io;
    io.repetitions = c.repetitions;
    io.seed = c.seed;
    io.workers = c.workers;
    io.imputer_bags = c.imputer_bags;
    std::vector<ImportanceReport> reports;
    for (auto [kind, baseline] : baselines)
        reports.push_back(permutation_importance(data, make_learner(kind, c), baseline, io));
    ensure_out_dir(c);

    json j = header("importance", c);
    j["repetitions"] = c.repetitions;
    j["models"] = json::array();
    std::string csv = "model,predictor,imp,nimp,mean_permuted_accuracy\n";
    for (auto& r : reports) {
        const std::string name = model_name(r.learner);
        auto ranked = r.predictors;
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return a.normalized && b.normalized ? *a.normalized > *b.normalized : a.importance > b.importance;
        });
        json predictors = json::array();
        std::vector<std::string> labels;
        std::vector<double> bars;
        for (const auto& p : ranked) {
            predictors.push_back({{"predictor", p.predictor},
                                  {"imp", p.importance},
                                  {"nimp", value_or_null(p.normalized)},
                                  {"mean_permuted_accuracy", p.mean_permuted_accuracy}});
            csv += name + ',' + csv_field(p.predictor) + ',' + format_number(p.importance) + ',' + cell(p.normalized) +
                   ',' + format_number(p.mean_permuted_accuracy) + '\n';
            labels.push_back(p.predictor);
            bars.push_back(p.normalized.value_or(p.importance));
        }
        j["models"].push_back({{"model", name},
                               {"baseline_accuracy", r.baseline_accuracy},
                               {"unpermuted_accuracy", r.unpermuted_accuracy},
                               {"normalization_undefined", r.normalization_undefined},
                               {"predictors", predictors}});
        write_file(out_path(c, "importance_" + name + ".svg"),
                   svg::horizontal_bars("Permutation importance, ordinal " + name,
                                        r.normalization_undefined ? "importance" : "normalized importance", labels,
                                        bars));
        std::cout << name << ": top predictor " << ranked.front().predictor << " (baseline "
                  << format_number(r.baseline_accuracy) << ", G = " << r.repetitions << ")\n";
    }
    write_json(out_path(c, "importance.json"), j);
    write_file(out_path(c, "importance.csv"), csv);
    std::cout << "wrote importance.{json,csv} and plots to " << c.out_dir << '\n';
    return 0;
}

int cmd_impute(const RunConfig& c) {
    const Dataset data = load_input(c);
    const std::size_t before = [&] {
        std::size_t n = 0;
        for (std::size_t r = 0; r < data.row_count(); ++r)
            for (double v : data.row(r)) n += is_missing(v) ? 1 : 0;
        return n;
    }();
    const Dataset filled = data.has_missing() ? detail::global_imputation(data, evaluation_options(c)) : data;
    std::string path = c.output;
    if (path.empty()) {
        ensure_out_dir(c);
        path = out_path(c, "imputed.csv");
    }
    std::ostringstream csv;
    write_csv(filled, csv);
    write_file(path, csv.str());
    std::cout << "filled " << before << " missing cell(s); wrote " << path << '\n';
    return 0;
}

int cmd_synth(const RunConfig& c) {
    SyntheticOptions opt;
    opt.drugs_per_category = c.synth_drugs;
    opt.observations_per_drug = c.synth_observations;
    opt.noise_sd = c.synth_noise_sd;
    opt.drug_effect_sd = c.synth_drug_effect_sd;
    opt.nonlinear = c.synth_nonlinear;
    opt.missing_fraction = c.synth_missing_fraction;
    opt.seed = c.seed;
    const auto s = generate_synthetic(opt);

    std::string path = c.output;
    if (path.empty()) {
        ensure_out_dir(c);
        path = out_path(c, "synthetic.csv");
    }
    std::ostringstream csv;
    write_csv(s.data, csv);
    write_file(path, csv.str());

    json j{{"schema_version", schema_version},
           {"command", "synth"},
           {"generator",
            {{"drugs_per_category", {{"low", opt.drugs_per_category[0]},
                                     {"intermediate", opt.drugs_per_category[1]},
                                     {"high", opt.drugs_per_category[2]}}},
             {"observations_per_drug", opt.observations_per_drug},
             {"noise_sd", opt.noise_sd},
             {"drug_effect_sd", opt.drug_effect_sd},
             {"nonlinear", opt.nonlinear},
             {"missing_fraction", opt.missing_fraction},
             {"seed", opt.seed}}},
           {"predictors", json::array()},
           {"noise_predictor", {{"index", s.noise_predictor}, {"name", s.data.schema()[s.noise_predictor].name}}},
           {"signal_predictor",
            {{"index", s.dominant_predictor}, {"name", s.data.schema()[s.dominant_predictor].name}}},
           {"latent", json::array()}};
    for (const auto& p : s.data.schema().predictors())
        j["predictors"].push_back(
            {{"name", p.name}, {"kind", p.kind == PredictorKind::binary ? "binary" : "continuous"}});
    for (std::size_t k = 0; k < s.data.drug_count(); ++k)
        j["latent"].push_back({{"drug", s.data.drug(k).id}, {"mu", s.latent[k]}});
    const std::string sidecar = fs::path(path).replace_extension(".json").string();
    write_json(sidecar, j);
    std::cout << "wrote " << path << " and " << sidecar << " (noise predictor: "
              << s.data.schema()[s.noise_predictor].name << ")\n";
    return 0;
}

} // namespace
} // namespace ordrisk::cli

int main(int argc, char** argv) {
    using namespace ordrisk::cli;
    CLI::App app{"ordrisk: ordinal three-category risk prediction for grouped observations"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("-c,--config", config_path, "key = value configuration file");
    std::map<std::string, std::string> flag_values;
    std::map<std::string, CLI::Option*> flag_options;
    for (const auto& key : config_keys())
        flag_options[key] = app.add_option("--" + flag_name(key), flag_values[key], "overrides '" + key + "'");

    struct Command {
        const char* name;
        const char* help;
        int (*run)(const RunConfig&);
    };
    const Command commands[] = {
        {"validate", "leave-one-drug-out point estimates", cmd_validate},
        {"bootstrap", "stratified bootstrap of leave-one-drug-out validation", cmd_bootstrap},
        {"outliers", "potential outlier drugs from bootstrap correct rates", cmd_outliers},
        {"sensitivity", "validation before and after removing outlier drugs", cmd_sensitivity},
        {"control", "control-drug analysis", cmd_control},
        {"importance", "permutation predictor importance", cmd_importance},
        {"impute", "fill missing predictor cells", cmd_impute},
        {"synth", "generate a synthetic dataset", cmd_synth},
    };
    for (const auto& cmd : commands) app.add_subcommand(cmd.name, cmd.help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        Settings settings = config_path.empty() ? Settings{} : read_settings_file(config_path);
        for (const auto& [key, option] : flag_options)
            if (option->count() > 0) settings[key] = flag_values[key];
        const RunConfig config = make_config(settings);
        for (const auto& cmd : commands)
            if (app.got_subcommand(cmd.name)) return cmd.run(config);
        return 2;
    } catch (const ordrisk::ConfigError& e) {
        std::cerr << "ordrisk: configuration error: " << e.what() << '\n';
        return 2;
    } catch (const ordrisk::DataError& e) {
        std::cerr << "ordrisk: data error: " << e.what() << '\n';
        return 3;
    } catch (const ordrisk::FitError& e) {
        std::cerr << "ordrisk: fit error: " << e.what() << '\n';
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "ordrisk: configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "ordrisk: error: " << e.what() << '\n';
        return 1;
    }
}
