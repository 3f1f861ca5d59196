#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include <json.hpp>

#include "trendlab/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Sandbox {
    fs::path root;
    Sandbox() {
        root = fs::temp_directory_path() /
               ("trendlab_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::create_directories(root);
    }
    ~Sandbox() { fs::remove_all(root); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string dir(const std::string& name) const { return (root / name).string(); }
    std::string path(const std::string& name) const { return (root / name).string(); }
};

std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(std::initializer_list<std::string> args) {
    return trendlab::cli::run(std::vector<std::string>(args));
}

}  // namespace

TEST_CASE("help exits 0, unknown flags exit 2, bad inputs exit 1", "[cli]") {
    REQUIRE(run({"trend", "--help"}) == 0);
    REQUIRE(run({"--help"}) == 0);
    REQUIRE(run({"trend", "--no-such-flag"}) == 2);
    REQUIRE(run({"nonsense"}) == 2);
    Sandbox box;
    REQUIRE(run({"trend", "--input", box.path("missing.csv"), "--out", box.dir("o")}) == 1);
}

TEST_CASE("pipeline stages compose end to end", "[cli]") {
    Sandbox box;
    // simulate -> prices.csv
    REQUIRE(run({"simulate", "--b", "0.02", "--c", "-0.01", "--T", "8", "--assets", "3",
                 "--intervals", "3000", "--seed", "11", "--out", box.dir("sim")}) == 0);
    std::string prices = box.dir("sim") + "/prices.csv";
    REQUIRE(fs::exists(prices));

    // ingest consumes simulate's output unchanged
    REQUIRE(run({"ingest", "--input", prices, "--frequency", "daily", "--out",
                 box.dir("ing")}) == 0);
    REQUIRE(fs::exists(box.dir("ing") + "/returns.csv"));
    REQUIRE(fs::exists(box.dir("ing") + "/returns.csv.meta.json"));

    // trend -> panel
    REQUIRE(run({"trend", "--input", prices, "--frequency", "daily", "--horizons", "1..3",
                 "--out", box.dir("tr")}) == 0);
    std::string panel = box.dir("tr") + "/panel.csv";
    REQUIRE(fs::exists(panel));
    REQUIRE(fs::exists(panel + ".meta.json"));

    // buckets on the panel
    REQUIRE(run({"buckets", "--panel", panel, "--out", box.dir("bk")}) == 0);
    REQUIRE(fs::exists(box.dir("bk") + "/buckets.csv"));
    REQUIRE(run({"buckets", "--panel", panel, "--json", "--out", box.dir("bkj")}) == 0);
    REQUIRE(fs::exists(box.dir("bkj") + "/buckets.json"));

    // regress on the serialized panel
    REQUIRE(run({"regress", "--panel", panel, "--model", "cubic", "--bootstrap", "60", "--folds",
                 "3", "--seed", "7", "--out", box.dir("rg")}) == 0);
    auto fit = nlohmann::json::parse(slurp(box.dir("rg") + "/fit.json"));
    REQUIRE(fit.at("coefficients").contains("b"));
    REQUIRE(fit.at("coefficients").at("b").at("stderr").get<double>() > 0.0);
    REQUIRE(fit.at("coefficients").at("b").contains("significant"));
    REQUIRE(fit.at("seed").get<std::uint64_t>() == 7);
    REQUIRE(fit.at("t_threshold").get<double>() == 2.0);  // daily default
    REQUIRE_FALSE(fit.at("cv_renormalized").get<bool>());

    // fold count defaults to the paper's 15 for daily data
    REQUIRE(run({"regress", "--panel", panel, "--model", "cubic", "--bootstrap", "60", "--seed",
                 "7", "--out", box.dir("rgd")}) == 0);
    auto fitd = nlohmann::json::parse(slurp(box.dir("rgd") + "/fit.json"));
    REQUIRE(fitd.at("n_folds").get<int>() == 15);

    // regress from raw prices re-normalizes inside CV
    REQUIRE(run({"regress", "--input", prices, "--frequency", "daily", "--horizons", "2..2",
                 "--model", "cubic", "--bootstrap", "60", "--folds", "3", "--seed", "7", "--out",
                 box.dir("rg2")}) == 0);
    auto fit2 = nlohmann::json::parse(slurp(box.dir("rg2") + "/fit.json"));
    REQUIRE(fit2.at("cv_renormalized").get<bool>());

    // scan -> per-horizon fits + curve
    REQUIRE(run({"scan", "--input", prices, "--frequency", "daily", "--horizons", "1..3",
                 "--model", "cubic", "--bootstrap", "60", "--seed", "7", "--dataset", "daily",
                 "--out", box.dir("sc")}) == 0);
    REQUIRE(fs::exists(box.dir("sc") + "/fits.json"));
    REQUIRE(fs::exists(box.dir("sc") + "/curve.csv"));

    // report bundles scan outputs
    REQUIRE(run({"report", "--fits", box.dir("sc") + "/fits.json", "--buckets",
                 box.dir("bk") + "/buckets.csv", "--gnuplot", "--out", box.dir("rp")}) == 0);
    REQUIRE(fs::exists(box.dir("rp") + "/curve.csv"));
    REQUIRE(fs::exists(box.dir("rp") + "/curve.gnuplot"));
    auto bundle = nlohmann::json::parse(slurp(box.dir("rp") + "/bundle.json"));
    REQUIRE(bundle.contains("curve"));
    REQUIRE(bundle.at("buckets").size() == 1);
}

TEST_CASE("echoed config alone reproduces a run", "[cli]") {
    Sandbox box;
    REQUIRE(run({"simulate", "--b", "0.015", "--T", "4", "--assets", "2", "--intervals", "2000",
                 "--seed", "21", "--out", box.dir("d1")}) == 0);
    std::string echo = box.dir("d1") + "/resolved_config.txt";
    REQUIRE(fs::exists(echo));
    std::string echoed = slurp(echo);
    REQUIRE(echoed.find("seed=21") != std::string::npos);
    REQUIRE(run({"simulate", "--config", echo, "--out", box.dir("d2")}) == 0);
    REQUIRE(slurp(box.dir("d1") + "/prices.csv") == slurp(box.dir("d2") + "/prices.csv"));
}

TEST_CASE("seed is echoed even when defaulted", "[cli]") {
    Sandbox box;
    REQUIRE(run({"simulate", "--intervals", "500", "--out", box.dir("d")}) == 0);
    REQUIRE(slurp(box.dir("d") + "/resolved_config.txt").find("seed=0") != std::string::npos);
}

TEST_CASE("recovery verdict runs on a small custom process", "[cli][slow]") {
    Sandbox box;
    int rc = run({"simulate", "--recover", "--b", "0.02", "--c", "-0.01", "--T", "8", "--assets",
                  "6", "--intervals", "30000", "--bootstrap", "200", "--model", "cubic", "--seed",
                  "42", "--out", box.dir("rec")});
    REQUIRE(rc == 0);
    auto verdict = nlohmann::json::parse(slurp(box.dir("rec") + "/verdict.json"));
    REQUIRE(verdict.at("pass").get<bool>());
    REQUIRE(verdict.at("checks").size() >= 2);
}

TEST_CASE("day-by-day intraday pipeline wires sessions through", "[cli]") {
    Sandbox box;
    // synthesize a 6-day minute market on a 390-minute session
    std::ofstream csv(box.path("mins.csv"));
    csv << "timestamp,asset,price\n";
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 0.0006);
    double p = 4000.0;
    for (int d = 0; d < 6; ++d)
        for (int m = 0; m < 390; ++m) {
            p *= std::exp(gauss(rng));
            csv << d * 1440 + 570 + m << ",ES," << p << "\n";
        }
    csv.close();
    std::ofstream cal(box.path("cal.txt"));
    cal << "ES=09:30-16:00\n";
    cal.close();

    REQUIRE(run({"trend", "--input", box.path("mins.csv"), "--frequency", "minute", "--mode",
                 "day-by-day", "--sessions", box.path("cal.txt"), "--horizons", "1..4", "--out",
                 box.dir("pan")}) == 0);
    auto meta = nlohmann::json::parse(slurp(box.dir("pan") + "/panel.csv.meta.json"));
    REQUIRE(meta.at("mode").get<std::string>() == "day-by-day");
    // 6 sessions x (388 returns - 16 warmup - 1 response) rows
    REQUIRE(meta.at("rows").get<int>() == 6 * (388 - 16 - 1));
}
