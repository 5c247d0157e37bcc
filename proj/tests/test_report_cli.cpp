#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "dia/cli.hpp"

using namespace dia;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("dia_tests_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

struct CliRun {
    int code;
    std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "dia_sim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

const char* kSmallConfig = R"({
  "fleet": {"k": 4, "horizon": 40},
  "run": {"trials": 3, "master_seed": 7}
})";

SimConfig tiny() {
    SimConfig cfg;
    cfg.fleet.k = 4;
    cfg.fleet.horizon = 20;
    cfg.run.trials = 3;
    cfg.workers = 1;
    return cfg;
}

}  // namespace

TEST_CASE("configuration file format", "[config]") {
    SECTION("defaults are valid and round-trip through JSON") {
        SimConfig cfg;
        CHECK_NOTHROW(cfg.validate());
        SimConfig copy;
        copy.fleet.k = 99;
        apply_json(to_json(cfg), copy);
        CHECK(to_json(copy) == to_json(cfg));
    }
    SECTION("partial files overlay the defaults") {
        SimConfig cfg;
        apply_json(nlohmann::json::parse(R"({"fleet": {"k": 3}, "run": {"scheme": "feedback"}})"), cfg);
        CHECK(cfg.fleet.k == 3);
        CHECK(cfg.fleet.horizon == 500);
        CHECK(cfg.run.scheme == Scheme::feedback);
    }
    SECTION("unknown keys name the file and the key") {
        SimConfig cfg;
        try {
            apply_json(nlohmann::json::parse(R"({"fleet": {"kk": 3}})"), cfg, "my.json");
            FAIL("expected a configuration error");
        } catch (const ConfigError& e) {
            CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("my.json") &&
                                     Catch::Matchers::ContainsSubstring("fleet.kk"));
        }
        CHECK_THROWS_AS(apply_json(nlohmann::json::parse(R"({"extra": {}})"), cfg), ConfigError);
        CHECK_THROWS_AS(apply_json(nlohmann::json::parse(R"({"fleet": 3})"), cfg), ConfigError);
        CHECK_THROWS_AS(apply_json(nlohmann::json::parse(R"([1, 2])"), cfg), ConfigError);
    }
    SECTION("bad values") {
        SimConfig cfg;
        CHECK_THROWS_AS(apply_json(nlohmann::json::parse(R"({"fleet": {"k": "ten"}})"), cfg), ConfigError);
        CHECK_THROWS_AS(apply_json(nlohmann::json::parse(R"({"run": {"scheme": "magic"}})"), cfg), ConfigError);
        const fs::path dir = scratch("cfg");
        spit(dir / "zero.json", R"({"fleet": {"k": 0}})");
        CHECK_THROWS_AS(load_config(dir / "zero.json"), ConfigError);
        spit(dir / "broken.json", "{ not json");
        CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
        CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
    }
    SECTION("scheme names") {
        for (Scheme s : kAllSchemes) CHECK(parse_scheme(scheme_name(s)) == s);
    }
}

TEST_CASE("result rows and summaries", "[report]") {
    const SimConfig cfg = tiny();
    const auto results = run_trials(cfg, Scheme::velocity_isac);
    const auto rows = rows_from_trials(results);
    REQUIRE(rows.size() == 3u * 20u * 4u);

    SECTION("the summary reproduces the per-trial accounting") {
        const Summary s = summarize(rows, "velocity-isac", 3);
        double mean = 0.0;
        for (int t = 0; t < 3; ++t) {
            CHECK(s.trial_accuracy[t] == Approx(results[t].accuracy()).epsilon(1e-14));
            mean += results[t].accuracy() / 3.0;
        }
        CHECK(s.accuracy_mean == Approx(mean).epsilon(1e-14));
        double var = 0.0;
        for (int t = 0; t < 3; ++t) var += (results[t].accuracy() - mean) * (results[t].accuracy() - mean) / 3.0;
        CHECK(s.accuracy_std == Approx(std::sqrt(var)).margin(1e-14));

        double all = 0.0, last = 0.0;
        for (const auto& r : results) {
            all += r.mean_rate() / 3.0;
            last += r.mean_rate(15) / 3.0;
        }
        CHECK(s.mean_rate == Approx(all).epsilon(1e-12));
        CHECK(s.final_quarter_rate == Approx(last).epsilon(1e-12));
        CHECK(s.slots.size() == 20);
        CHECK(s.slots.front() == 1);
    }
    SECTION("a single trial has zero spread") {
        const Summary s = summarize(rows_from_trial(results[0]), "x", 1);
        CHECK(s.accuracy_std == 0.0);
    }
    SECTION("trials without rows are vacuous") {
        const Summary s = summarize(rows_from_trial(results[0]), "x", 2);
        CHECK(s.vacuous_trials == std::vector<int>{1});
        CHECK(s.trial_accuracy[1] == 1.0);
    }
    SECTION("CSV round trip is exact") {
        const fs::path dir = scratch("csv");
        write_csv(dir / "t.csv", rows);
        const auto back = read_csv(dir / "t.csv");
        REQUIRE(back.size() == rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            REQUIRE(detail::format_row(back[i]) == detail::format_row(rows[i]));
        }
        CHECK(slurp(dir / "t.csv").rfind(std::string(kCsvHeader) + "\n", 0) == 0);
    }
    SECTION("malformed CSV files are reported") {
        const fs::path dir = scratch("bad");
        spit(dir / "h.csv", "trial,slot\n");
        CHECK_THROWS_AS(read_csv(dir / "h.csv"), IoError);
        spit(dir / "f.csv", std::string(kCsvHeader) + "\n1,2,3\n");
        CHECK_THROWS_WITH(read_csv(dir / "f.csv"), Catch::Matchers::ContainsSubstring("f.csv:2"));
        spit(dir / "v.csv", std::string(kCsvHeader) + "\n0,1,0,a,0,0,0,1,0,0\n");
        CHECK_THROWS_AS(read_csv(dir / "v.csv"), IoError);
        CHECK_THROWS_AS(read_csv(dir / "none.csv"), IoError);
        CHECK_THROWS_AS(summarize(rows, "x", 2), IoError);
    }
    SECTION("a stored run regenerates an identical summary") {
        const fs::path dir = scratch("run");
        write_run(dir, cfg, Scheme::velocity_isac, results);
        const std::string before = slurp(dir / kSummaryJson);
        fs::remove(dir / kSummaryJson);
        rebuild_summary(dir);
        CHECK(slurp(dir / kSummaryJson) == before);
    }
}

TEST_CASE("command line", "[cli]") {
    const fs::path dir = scratch("cli");
    spit(dir / "small.json", kSmallConfig);
    const std::string config = (dir / "small.json").string();

    SECTION("usage errors exit with 1") {
        CHECK(cli({}).code == kExitConfig);
        CHECK(cli({"frobnicate"}).code == kExitConfig);
        CHECK(cli({"simulate", "--trials", "0"}).code == kExitConfig);
        CHECK(cli({"simulate", "--scheme", "magic", "--config", config}).code == kExitConfig);
        const auto missing = cli({"simulate", "--config", (dir / "nope.json").string()});
        CHECK(missing.code == kExitConfig);
        CHECK_THAT(missing.err, Catch::Matchers::ContainsSubstring("nope.json"));
    }
    SECTION("help exits with 0") {
        const auto h = cli({"--help"});
        CHECK(h.code == kExitOk);
        CHECK_THAT(h.out, Catch::Matchers::ContainsSubstring("simulate"));
    }
    SECTION("simulate is deterministic") {
        const auto a = dir / "a", b = dir / "b";
        REQUIRE(cli({"simulate", "--config", config, "--out", a.string()}).code == kExitOk);
        REQUIRE(cli({"simulate", "--config", config, "--out", b.string(), "--jobs", "2"}).code == kExitOk);
        for (const char* f : {kTrialsCsv, kSummaryJson, kRunConfigJson}) {
            REQUIRE(fs::exists(a / f));
            CHECK(slurp(a / f) == slurp(b / f));
        }
        const auto c = dir / "c";
        REQUIRE(cli({"simulate", "--config", config, "--out", c.string(), "--seed", "8"}).code == kExitOk);
        CHECK(slurp(a / kTrialsCsv) != slurp(c / kTrialsCsv));
    }
    SECTION("compare writes every scheme and report regenerates them") {
        const auto out = dir / "cmp";
        REQUIRE(cli({"compare", "--config", config, "--out", out.string()}).code == kExitOk);
        CHECK(fs::exists(out / "comparison.csv"));
        CHECK(fs::exists(out / "rates.csv"));
        CHECK(fs::exists(out / "angle_rmse.csv"));
        std::vector<std::string> before;
        for (Scheme s : kAllSchemes) before.push_back(slurp(out / std::string(scheme_name(s)) / kSummaryJson));
        for (Scheme s : kAllSchemes) fs::remove(out / std::string(scheme_name(s)) / kSummaryJson);
        REQUIRE(cli({"report", "--out", out.string()}).code == kExitOk);
        for (std::size_t i = 0; i < before.size(); ++i) {
            CHECK(slurp(out / std::string(scheme_name(kAllSchemes[i])) / kSummaryJson) == before[i]);
        }
        // comparison.csv: header plus one row per scheme.
        std::istringstream table(slurp(out / "comparison.csv"));
        std::string line;
        int lines = 0;
        while (std::getline(table, line)) ++lines;
        CHECK(lines == 6);
    }
    SECTION("report without results is a runtime error") {
        CHECK(cli({"report", "--out", (dir / "empty").string()}).code == kExitRuntime);
    }
    SECTION("sweep covers the requested grid") {
        const auto out = dir / "sweep";
        REQUIRE(cli({"sweep", "--config", config, "--out", out.string(), "--k", "2", "3", "--v-max",
                     "10", "30", "--trials", "2"})
                    .code == kExitOk);
        std::istringstream cells(slurp(out / "sweep.csv"));
        std::string line;
        int lines = 0;
        while (std::getline(cells, line)) ++lines;
        CHECK(lines == 1 + 2 * 2 * 3);
        std::istringstream trials(slurp(out / "sweep_trials.csv"));
        lines = 0;
        while (std::getline(trials, line)) ++lines;
        CHECK(lines == 1 + 2 * 2 * 3 * 2);
    }
}
