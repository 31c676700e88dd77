#include <catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ordrisk/ordrisk.hpp"
#include "run_config.hpp"
#include "support/xml_check.hpp"

using namespace ordrisk;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::string cli = ORDRISK_CLI_PATH;
const std::string data_dir = ORDRISK_DATA_DIR;
const std::string stemcell_csv = data_dir + "/stemcell_like.csv";

struct Run {
    int code = -1;
    std::string output;
};

Run run(const std::string& args) {
    Run r;
    FILE* pipe = ::popen((cli + " " + args + " 2>&1").c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

std::vector<std::vector<std::string>> read_rows(const fs::path& p) {
    std::istringstream in(slurp(p));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

/// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("ordrisk_cli_" + std::to_string(::getpid()) + "_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::string write_dataset(const fs::path& p, const Dataset& d) {
    std::ostringstream out;
    write_csv(d, out);
    spit(p, out.str());
    return p.string();
}

} // namespace

TEST_CASE("settings file: comments, blank lines, duplicate and unknown keys") {
    std::istringstream ok("# run\n\n seed = 7 # trailing\nmodels=logistic\n");
    const auto s = cli::parse_settings(ok, "cfg");
    REQUIRE(s.at("seed") == "7");
    REQUIRE(s.at("models") == "logistic");
    std::istringstream unknown("sede = 7\n");
    REQUIRE_THROWS_AS(cli::parse_settings(unknown, "cfg"), ConfigError);
    std::istringstream twice("seed = 1\nseed = 2\n");
    REQUIRE_THROWS_AS(cli::parse_settings(twice, "cfg"), ConfigError);
    std::istringstream no_eq("seed 1\n");
    REQUIRE_THROWS_AS(cli::parse_settings(no_eq, "cfg"), ConfigError);
}

TEST_CASE("run config invariants") {
    using S = cli::Settings;
    REQUIRE_THROWS_AS(cli::make_config(S{{"threshold", "0"}}), ConfigError);
    REQUIRE_THROWS_AS(cli::make_config(S{{"threshold", "1"}}), ConfigError);
    REQUIRE_THROWS_AS(cli::make_config(S{{"replicates", "0"}}), ConfigError);
    REQUIRE_THROWS_AS(cli::make_config(S{{"trees", "-3"}}), ConfigError);
    REQUIRE_THROWS_AS(cli::make_config(S{{"repetitions", "ten"}}), ConfigError);
    REQUIRE_THROWS_AS(cli::make_config(S{{"models", "logistic,svm"}}), ConfigError);
    REQUIRE_THROWS_AS(cli::make_config(S{{"models", "forest,forest"}}), ConfigError);
    REQUIRE_THROWS_AS(cli::make_config(S{{"imputation", "leaky"}}), ConfigError);
    REQUIRE_THROWS_AS(cli::make_config(S{{"input", ""}}), ConfigError);
    REQUIRE_THROWS_AS(cli::make_config(S{{"schema", "stemcell"}}), ConfigError);

    const auto c = cli::make_config(S{{"models", "forest"}, {"threshold", "0.3"}, {"imputation", "global-leaky"},
                                      {"out", "somewhere"}});
    REQUIRE(c.models == std::vector<LearnerKind>{LearnerKind::forest});
    REQUIRE(c.threshold == 0.3);
    REQUIRE(c.imputation == ImputationMode::global_leaky);
    REQUIRE(c.out_dir == "somewhere");

    const auto d = cli::make_config(S{});
    REQUIRE(d.replicates == 1000);
    REQUIRE(d.repetitions == 100);
    REQUIRE(d.threshold == 0.25);
    REQUIRE(d.models.size() == 2);
}

TEST_CASE("output directory falls back to the environment variable") {
    ::setenv(cli::out_dir_env, "/tmp/from_env", 1);
    REQUIRE(cli::make_config({}).out_dir == "/tmp/from_env");
    REQUIRE(cli::make_config({{"out", "explicit"}}).out_dir == "explicit");
    ::unsetenv(cli::out_dir_env);
    REQUIRE(cli::make_config({}).out_dir == "ordrisk_out");
}

TEST_CASE("exit codes for configuration and data errors") {
    const auto dir = scratch("exit_codes");
    REQUIRE(run("").code == 2);
    REQUIRE(run("frobnicate").code == 2);
    REQUIRE(run("validate --no-such-flag 1").code == 2);
    REQUIRE(run("validate --out " + q(dir)).code == 2); // no input
    REQUIRE(run("validate -c " + q(dir / "missing.conf")).code == 2);

    const auto missing = run("validate --input " + q(dir / "nope.csv") + " --out " + q(dir));
    REQUIRE(missing.code == 3);
    REQUIRE_THAT(missing.output, Catch::Matchers::ContainsSubstring("nope.csv"));

    spit(dir / "ragged.csv", "drug,risk,a,b\nx,low,1,2\ny,high,1\n");
    REQUIRE(run("validate --input " + q(dir / "ragged.csv") + " --out " + q(dir)).code == 3);

    spit(dir / "bad.conf", "threshold = 2\n");
    REQUIRE(run("validate -c " + q(dir / "bad.conf") + " --input " + q(stemcell_csv)).code == 2);
    REQUIRE(run("help").code == 2);
    REQUIRE(run("--help").code == 0);
}

TEST_CASE("fit errors exit 4 and name the fold") {
    const auto dir = scratch("fit_error");
    SyntheticOptions opt;
    opt.drugs_per_category = {3, 3, 1};
    const auto path = write_dataset(dir / "one_high.csv", generate_synthetic(opt).data);
    const auto r = run("validate --models logistic --input " + q(path) + " --out " + q(dir));
    REQUIRE(r.code == 4);
    REQUIRE_THAT(r.output, Catch::Matchers::ContainsSubstring("H01"));
}

TEST_CASE("validate: 16 metric rows, deterministic, worker-count invariant") {
    const auto a = scratch("validate_a");
    const auto b = scratch("validate_b");
    const std::string common = "validate --input " + q(stemcell_csv) + " --trees 20 --seed 5 --out ";
    REQUIRE(run(common + q(a)).code == 0);
    REQUIRE(run(common + q(b) + " --workers 3").code == 0);
    for (const char* f : {"point_estimates.json", "point_estimates.csv", "drug_predictions.csv"})
        REQUIRE(slurp(a / f) == slurp(b / f));

    const auto rows = read_rows(a / "point_estimates.csv");
    REQUIRE(rows.front() == std::vector<std::string>{"model", "level", "metric", "value", "clamp_count"});
    REQUIRE(rows.size() == 1 + 16);
    std::set<std::string> keys;
    for (std::size_t i = 1; i < rows.size(); ++i) keys.insert(rows[i][0] + "/" + rows[i][1] + "/" + rows[i][2]);
    REQUIRE(keys.size() == 16);

    const auto j = json::parse(slurp(a / "point_estimates.json"));
    REQUIRE(j["schema_version"] == cli::schema_version);
    REQUIRE(j["models"].size() == 2);
    REQUIRE(j["drugs"] == 28);
    for (const auto& m : j["models"]) {
        REQUIRE(m["drug_predictions"].size() == 28);
        for (const auto& d : m["drug_predictions"]) {
            double sum = 0;
            for (double p : d["probabilities"]) sum += p;
            REQUIRE(sum == Catch::Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("config file values are overridden by flags") {
    const auto dir = scratch("override");
    spit(dir / "run.conf", "seed = 3\nsynth_drugs = 2,2,2\nsynth_observations = 3\nout = " + dir.string() + "\n");
    REQUIRE(run("synth -c " + q(dir / "run.conf")).code == 0);
    REQUIRE(json::parse(slurp(dir / "synthetic.json"))["generator"]["seed"] == 3);
    REQUIRE(run("synth -c " + q(dir / "run.conf") + " --seed 9").code == 0);
    REQUIRE(json::parse(slurp(dir / "synthetic.json"))["generator"]["seed"] == 9);
}

TEST_CASE("synth: deterministic, sidecar names the noise column, CSV round-trips") {
    const auto dir = scratch("synth");
    const std::string args = "synth --seed 4 --synth-drugs 3,4,5 --synth-missing-fraction 0.1 --output ";
    REQUIRE(run(args + q(dir / "a.csv")).code == 0);
    REQUIRE(run(args + q(dir / "b.csv")).code == 0);
    REQUIRE(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    REQUIRE(slurp(dir / "a.json") == slurp(dir / "b.json"));

    const auto side = json::parse(slurp(dir / "a.json"));
    REQUIRE(side["noise_predictor"]["name"] == "noise");
    REQUIRE(side["noise_predictor"]["index"] == 3);

    std::ifstream in(dir / "a.csv");
    const auto d = load_csv(in, synthetic_schema());
    REQUIRE(d.drug_count() == 12);
    REQUIRE(d.has_missing());
    std::ostringstream again;
    write_csv(d, again);
    REQUIRE(again.str() == slurp(dir / "a.csv"));
}

TEST_CASE("impute: complete input is unchanged, incomplete input is filled") {
    const auto dir = scratch("impute");
    const auto complete = write_dataset(dir / "complete.csv", generate_synthetic({.seed = 3}).data);
    REQUIRE(run("impute --input " + q(complete) + " --output " + q(dir / "same.csv")).code == 0);
    REQUIRE(slurp(dir / "same.csv") == slurp(complete));

    REQUIRE(run("impute --input " + q(stemcell_csv) + " --output " + q(dir / "filled.csv")).code == 0);
    std::ifstream in(dir / "filled.csv");
    const auto filled = load_csv_inferred(in);
    REQUIRE_FALSE(filled.has_missing());
    std::ifstream orig_in(stemcell_csv);
    const auto orig = load_csv_inferred(orig_in);
    REQUIRE(filled.row_count() == orig.row_count());
    for (std::size_t r = 0; r < orig.row_count(); ++r)
        for (std::size_t c = 0; c < orig.predictor_count(); ++c)
            if (!is_missing(orig.row(r)[c])) REQUIRE(filled.row(r)[c] == orig.row(r)[c]);
}

TEST_CASE("bootstrap, outliers, sensitivity and importance chain") {
    const auto dir = scratch("chain");
    const std::string base = "--input " + q(stemcell_csv) + " --trees 15 --seed 8 --out " + q(dir);

    // importance needs a bootstrap summary
    const auto early = run("importance " + base);
    REQUIRE(early.code == 2);
    REQUIRE_THAT(early.output, Catch::Matchers::ContainsSubstring("bootstrap"));
    REQUIRE(run("outliers " + base).code == 2);

    const auto boot = run("bootstrap " + base + " --replicates 6");
    REQUIRE(boot.code == 0);
    REQUIRE_THAT(boot.output, Catch::Matchers::ContainsSubstring("0 failed"));

    const auto reps = read_rows(dir / "bootstrap_replicates.csv");
    REQUIRE(reps.size() == 1 + 6 * 2 * 2 * 4);
    std::map<std::string, int> per_key;
    for (std::size_t i = 1; i < reps.size(); ++i) ++per_key[reps[i][0] + reps[i][2] + reps[i][3]];
    for (const auto& [key, n] : per_key) REQUIRE(n == 6);

    const auto rates = read_rows(dir / "drug_correct_rates.csv");
    REQUIRE(rates.size() == 1 + 28 * 2);
    for (std::size_t i = 1; i < rates.size(); ++i) {
        const double rate = std::stod(rates[i][5]);
        REQUIRE(rate >= 0.0);
        REQUIRE(rate <= 1.0);
    }
    REQUIRE(read_rows(dir / "bootstrap_summary.csv").size() == 1 + 16);

    std::size_t svgs = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".svg") continue;
        ++svgs;
        INFO(entry.path());
        REQUIRE(ordrisk_test::xml_problem(slurp(entry.path())).empty());
    }
    REQUIRE(svgs == 9);

    REQUIRE(run("outliers " + base).code == 0);
    const auto outliers = json::parse(slurp(dir / "outliers.json"));
    const auto summary = json::parse(slurp(dir / "bootstrap_summary.json"));
    std::map<std::string, std::pair<double, double>> both;
    for (const auto& r : summary["models"][0]["drug_rates"]) both[r["drug"]].first = r["rate"];
    for (const auto& r : summary["models"][1]["drug_rates"]) both[r["drug"]].second = r["rate"];
    std::set<std::string> expected;
    for (const auto& [drug, pair] : both)
        if (pair.first < 0.25 && pair.second < 0.25) expected.insert(drug);
    std::set<std::string> got;
    for (const auto& o : outliers["outliers"]) got.insert(o["drug"]);
    REQUIRE(got == expected);

    if (!got.empty()) {
        REQUIRE(run("sensitivity " + base).code == 0);
        const auto s = json::parse(slurp(dir / "sensitivity.json"));
        REQUIRE(s["drugs_after"] == 28 - got.size());
        REQUIRE(read_rows(dir / "sensitivity.csv").size() == 1 + 16);
        REQUIRE(ordrisk_test::xml_problem(slurp(dir / "sensitivity.svg")).empty());
    }

    REQUIRE(run("importance " + base + " --repetitions 10").code == 0);
    const auto imp = json::parse(slurp(dir / "importance.json"));
    REQUIRE(imp["repetitions"] == 10);
    for (const auto& m : imp["models"]) {
        const double ci_upper = summary["models"][m["model"] == "logistic" ? 0 : 1]["summaries"]["observations"]
                                       ["accuracy3"]["ci_upper"];
        REQUIRE(m["baseline_accuracy"] == ci_upper);
        REQUIRE_FALSE(m["normalization_undefined"].get<bool>());
        REQUIRE(m["predictors"][0]["nimp"] == 1.0);
        for (std::size_t i = 1; i < m["predictors"].size(); ++i)
            REQUIRE(m["predictors"][i - 1]["nimp"].get<double>() >= m["predictors"][i]["nimp"].get<double>());
    }
    const auto imp_rows = read_rows(dir / "importance.csv");
    REQUIRE(imp_rows.size() == 1 + 2 * 4);
}

TEST_CASE("sensitivity: empty outlier set is a no-op, emptied category exits 4") {
    const auto dir = scratch("sensitivity");
    const std::string header = R"("schema_version": 1, "command": "outliers", "config": {}, "threshold": 0.25)";
    spit(dir / "none.json", "{" + header + R"(, "outliers": []})");
    const auto none = run("sensitivity --input " + q(stemcell_csv) + " --outliers " + q(dir / "none.json") +
                          " --out " + q(dir));
    REQUIRE(none.code == 0);
    REQUIRE_THAT(none.output, Catch::Matchers::ContainsSubstring("nothing to remove"));
    REQUIRE_FALSE(fs::exists(dir / "sensitivity.json"));

    std::string list;
    for (int i = 1; i <= 8; ++i)
        list += std::string(list.empty() ? "" : ",") + R"({"drug": "H0)" + std::to_string(i) +
                R"(", "truth": "high", "rate_logistic": 0, "rate_forest": 0, "average": 0})";
    spit(dir / "all_high.json", "{" + header + ", \"outliers\": [" + list + "]}");
    REQUIRE(run("sensitivity --models logistic --input " + q(stemcell_csv) + " --outliers " +
                q(dir / "all_high.json") + " --out " + q(dir))
                .code == 4);
}

TEST_CASE("control: absent drug exits 2, never-correct control is undefined") {
    const auto dir = scratch("control");
    REQUIRE(run("control --input " + q(stemcell_csv) + " --out " + q(dir)).code == 2);
    REQUIRE(run("control --control ZZZ --input " + q(stemcell_csv) + " --out " + q(dir)).code == 2);

    // a low-risk drug relabelled high sits among low drugs and is never predicted high
    const auto clean = generate_synthetic({.noise_sd = 0.3, .seed = 12}).data;
    std::vector<RiskCategory> labels;
    for (const auto& d : clean.drugs()) labels.push_back(d.id == "L01" ? RiskCategory::high : d.label);
    const auto path = write_dataset(dir / "relabelled.csv", clean.with_labels(labels));
    REQUIRE(run("control --control L01 --models logistic --input " + q(path) + " --out " + q(dir)).code == 0);

    const auto rows = read_rows(dir / "control.csv");
    REQUIRE(rows.size() == 1 + 8);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(rows[i][4] == "undefined");
        REQUIRE(rows[i][3] != "undefined");
    }
    const auto j = json::parse(slurp(dir / "control.json"));
    REQUIRE(j["models"][0]["with_control"] == "undefined");
    REQUIRE(j["models"][0]["folds"] == clean.drug_count() - 1);
    REQUIRE(j["models"][0]["control_correct_rate"] == 0.0);
}
