#pragma once

// Run configuration for the command-line tool: a flat `key = value` file
// overlaid by command-line flags.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ordrisk/dataset.hpp"
#include "ordrisk/error.hpp"
#include "ordrisk/evaluation.hpp"
#include "ordrisk/ordinal.hpp"

namespace ordrisk::cli {

inline constexpr int schema_version = 1;
inline constexpr const char* out_dir_env = "ORDRISK_OUT_DIR";

enum class SchemaChoice { custom, stemcell7, wedge15 };

struct RunConfig {
    std::string input;
    SchemaChoice schema = SchemaChoice::custom;
    std::vector<LearnerKind> models{LearnerKind::logistic, LearnerKind::forest};
    std::uint64_t seed = 1;
    std::size_t trees = 500;       // B
    std::size_t replicates = 1000; // R
    std::size_t repetitions = 100; // G
    double threshold = 0.25;
    std::string control;
    ImputationMode imputation = ImputationMode::per_fold;
    std::size_t imputer_bags = 25;
    std::string out_dir;
    std::size_t workers = 1;
    // inputs produced by earlier commands; empty means "<out_dir>/<default name>"
    std::string bootstrap_summary;
    std::string outliers;
    // impute / synth output file; empty means a default name in out_dir
    std::string output;

    std::array<std::size_t, 3> synth_drugs{6, 6, 6};
    std::size_t synth_observations = 8;
    double synth_noise_sd = 0.5;
    double synth_drug_effect_sd = 0.0;
    bool synth_nonlinear = false;
    double synth_missing_fraction = 0.0;
};

/// Every recognised key. Flags use the same names with '-' for '_'.
inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "input",          "schema",           "models",         "seed",          "trees",
        "replicates",     "repetitions",      "threshold",      "control",       "imputation",
        "imputer_bags",   "out",              "workers",        "bootstrap_summary", "outliers",
        "output",         "synth_drugs",      "synth_observations", "synth_noise_sd",
        "synth_drug_effect_sd", "synth_nonlinear", "synth_missing_fraction"};
    return keys;
}

inline std::string flag_name(std::string key) {
    for (auto& c : key)
        if (c == '_') c = '-';
    return key;
}

using Settings = std::map<std::string, std::string>;

inline bool is_known_key(std::string_view key) {
    for (const auto& k : config_keys())
        if (k == key) return true;
    return false;
}

/// Parses `key = value` lines. '#' starts a comment; blank lines are skipped.
inline Settings parse_settings(std::istream& in, const std::string& origin) {
    Settings out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto text = detail::trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        const std::string where = origin + ":" + std::to_string(line_no);
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key(detail::trim(text.substr(0, eq)));
        const std::string value(detail::trim(text.substr(eq + 1)));
        if (!is_known_key(key)) throw ConfigError(where + ": unknown key '" + key + "'");
        if (out.count(key)) throw ConfigError(where + ": key '" + key + "' given twice");
        out[key] = value;
    }
    return out;
}

inline Settings read_settings_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_settings(in, path);
}

namespace detail_cfg {

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    return out;
}

inline std::size_t parse_count(const std::string& key, const std::string& v) {
    const auto n = parse_u64(key, v);
    if (n == 0) throw ConfigError(key + ": must be positive");
    return static_cast<std::size_t>(n);
}

inline double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.emplace_back(ordrisk::detail::trim(item));
    return out;
}

} // namespace detail_cfg

/// Builds and validates a RunConfig. `out` falls back to $ORDRISK_OUT_DIR,
/// then to "ordrisk_out".
inline RunConfig make_config(const Settings& s) {
    using namespace detail_cfg;
    RunConfig c;
    auto get = [&](const char* key) -> const std::string* {
        const auto it = s.find(key);
        return it == s.end() ? nullptr : &it->second;
    };
    if (auto v = get("input")) c.input = *v;
    if (auto v = get("schema")) {
        if (*v == "stemcell7") c.schema = SchemaChoice::stemcell7;
        else if (*v == "wedge15") c.schema = SchemaChoice::wedge15;
        else if (*v == "custom") c.schema = SchemaChoice::custom;
        else throw ConfigError("schema: expected stemcell7, wedge15 or custom, got '" + *v + "'");
    }
    if (auto v = get("models")) {
        c.models.clear();
        for (const auto& m : split_list(*v)) {
            LearnerKind kind;
            if (m == "logistic") kind = LearnerKind::logistic;
            else if (m == "forest") kind = LearnerKind::forest;
            else throw ConfigError("models: unknown model '" + m + "' (use logistic, forest)");
            for (auto seen : c.models)
                if (seen == kind) throw ConfigError("models: '" + m + "' listed twice");
            c.models.push_back(kind);
        }
        if (c.models.empty()) throw ConfigError("models: at least one model is required");
    }
    if (auto v = get("seed")) c.seed = parse_u64("seed", *v);
    if (auto v = get("trees")) c.trees = parse_count("trees", *v);
    if (auto v = get("replicates")) c.replicates = parse_count("replicates", *v);
    if (auto v = get("repetitions")) c.repetitions = parse_count("repetitions", *v);
    if (auto v = get("threshold")) {
        c.threshold = parse_double("threshold", *v);
        if (!(c.threshold > 0.0 && c.threshold < 1.0)) throw ConfigError("threshold: must lie in (0, 1)");
    }
    if (auto v = get("control")) c.control = *v;
    if (auto v = get("imputation")) {
        if (*v == "per-fold") c.imputation = ImputationMode::per_fold;
        else if (*v == "global-leaky") c.imputation = ImputationMode::global_leaky;
        else throw ConfigError("imputation: expected per-fold or global-leaky, got '" + *v + "'");
    }
    if (auto v = get("imputer_bags")) c.imputer_bags = parse_count("imputer_bags", *v);
    if (auto v = get("workers")) c.workers = parse_count("workers", *v);
    if (auto v = get("bootstrap_summary")) c.bootstrap_summary = *v;
    if (auto v = get("outliers")) c.outliers = *v;
    if (auto v = get("output")) c.output = *v;

    if (auto v = get("out")) c.out_dir = *v;
    else if (const char* env = std::getenv(out_dir_env); env != nullptr && *env != '\0') c.out_dir = env;
    else c.out_dir = "ordrisk_out";

    if (auto v = get("synth_drugs")) {
        const auto parts = split_list(*v);
        if (parts.size() != 3) throw ConfigError("synth_drugs: expected three counts (low,intermediate,high)");
        for (std::size_t i = 0; i < 3; ++i) c.synth_drugs[i] = parse_count("synth_drugs", parts[i]);
    }
    if (auto v = get("synth_observations")) c.synth_observations = parse_count("synth_observations", *v);
    if (auto v = get("synth_noise_sd")) c.synth_noise_sd = parse_double("synth_noise_sd", *v);
    if (auto v = get("synth_drug_effect_sd")) c.synth_drug_effect_sd = parse_double("synth_drug_effect_sd", *v);
    if (auto v = get("synth_nonlinear")) c.synth_nonlinear = parse_bool("synth_nonlinear", *v);
    if (auto v = get("synth_missing_fraction")) c.synth_missing_fraction = parse_double("synth_missing_fraction", *v);
    if (c.synth_noise_sd < 0.0) throw ConfigError("synth_noise_sd: must be non-negative");
    if (c.synth_drug_effect_sd < 0.0) throw ConfigError("synth_drug_effect_sd: must be non-negative");
    if (!(c.synth_missing_fraction >= 0.0 && c.synth_missing_fraction < 1.0))
        throw ConfigError("synth_missing_fraction: must lie in [0, 1)");

    for (const auto& [key, value] : s)
        if (value.empty() && key != "control") throw ConfigError(key + ": empty value");
    return c;
}

inline Learner make_learner(LearnerKind kind, const RunConfig& c) {
    if (kind == LearnerKind::logistic) return LogisticLearner{};
    ForestLearner f;
    f.options.trees = c.trees;
    return f;
}

inline EvaluationOptions evaluation_options(const RunConfig& c) {
    EvaluationOptions o;
    o.seed = c.seed;
    o.imputation = c.imputation;
    o.imputer_bags = c.imputer_bags;
    o.workers = c.workers;
    return o;
}

} // namespace ordrisk::cli
