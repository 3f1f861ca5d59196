#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "trendlab/ingest.hpp"

using namespace trendlab;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("trendlab_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name, const std::string& content) const {
        auto p = (path / name).string();
        std::ofstream out(p);
        out << content;
        return p;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PriceSeries series_from_returns(const std::vector<double>& raw, Frequency f = Frequency::daily) {
    PriceSeries s;
    s.asset_id = "x";
    s.frequency = f;
    double p = 1.0;
    s.timestamps.push_back(0);
    s.prices.push_back(p);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        p *= std::exp(raw[i]);
        s.timestamps.push_back(static_cast<std::int64_t>(i + 1));
        s.prices.push_back(p);
    }
    return s;
}

}  // namespace

TEST_CASE("three-row file loads into one series", "[ingest][csv]") {
    TempDir dir;
    auto path = dir.file("p.csv", "timestamp,asset,price\n1,ES,100\n2,ES,101\n3,ES,102.5\n");
    auto series = load_price_csv(path, Frequency::daily);
    REQUIRE(series.size() == 1);
    REQUIRE(series[0].asset_id == "ES");
    REQUIRE(series[0].size() == 3);
    REQUIRE(series[0].prices[2] == 102.5);
}

TEST_CASE("interleaved assets split into per-asset series", "[ingest][csv]") {
    TempDir dir;
    std::string body = "timestamp,asset,price\n";
    for (int t = 0; t < 5; ++t) {
        body += std::to_string(t) + ",A," + std::to_string(100 + t) + "\n";
        body += std::to_string(t) + ",B," + std::to_string(200 + t) + "\n";
    }
    auto series = load_price_csv(dir.file("p.csv", body), Frequency::daily);
    REQUIRE(series.size() == 2);
    REQUIRE(series[0].asset_id == "A");
    REQUIRE(series[0].size() == 5);
    REQUIRE(series[1].asset_id == "B");
    REQUIRE(series[1].size() == 5);
}

TEST_CASE("bad rows are rejected with precise diagnostics", "[ingest][csv]") {
    TempDir dir;
    SECTION("non-positive price") {
        auto path = dir.file("p.csv", "timestamp,asset,price\n1,ES,100\n2,ES,0\n");
        REQUIRE_THROWS_AS(load_price_csv(path, Frequency::daily), DataError);
    }
    SECTION("duplicate timestamp") {
        auto path = dir.file("p.csv", "timestamp,asset,price\n1,ES,100\n1,ES,101\n");
        REQUIRE_THROWS_WITH(load_price_csv(path, Frequency::daily),
                            Catch::Matchers::ContainsSubstring("duplicate"));
    }
    SECTION("non-monotone timestamps") {
        auto path = dir.file("p.csv", "timestamp,asset,price\n2,ES,100\n1,ES,101\n");
        REQUIRE_THROWS_AS(load_price_csv(path, Frequency::daily), DataError);
    }
    SECTION("malformed row names the line") {
        auto path = dir.file("p.csv", "timestamp,asset,price\n1,ES,100\nnot-a-number,ES,1\n");
        REQUIRE_THROWS_WITH(load_price_csv(path, Frequency::daily),
                            Catch::Matchers::ContainsSubstring(":3"));
    }
    SECTION("missing header") {
        auto path = dir.file("p.csv", "1,ES,100\n2,ES,101\n");
        REQUIRE_THROWS_AS(load_price_csv(path, Frequency::daily), ParseError);
    }
}

TEST_CASE("write/load round trip preserves bytes", "[ingest][csv]") {
    TempDir dir;
    PriceSeries a;
    a.asset_id = "A";
    a.frequency = Frequency::daily;
    a.timestamps = {1, 2, 3};
    a.prices = {100.5, 101.25, 99.875};
    PriceSeries b = a;
    b.asset_id = "B";
    b.prices = {0.072, 1e6, 3.14159};
    write_price_csv(dir.file("w.csv"), {a, b});
    std::string first = slurp(dir.file("w.csv"));
    auto loaded = load_price_csv(dir.file("w.csv"), Frequency::daily);
    REQUIRE(loaded.size() == 2);
    REQUIRE(loaded[0].prices == a.prices);
    REQUIRE(loaded[1].prices == b.prices);
    write_price_csv(dir.file("w2.csv"), loaded);
    REQUIRE(slurp(dir.file("w2.csv")) == first);
}

TEST_CASE("returns of [1, e, 1] normalize to [+1, -1]", "[ingest][returns]") {
    PriceSeries s;
    s.asset_id = "x";
    s.frequency = Frequency::daily;
    s.timestamps = {0, 1, 2};
    s.prices = {1.0, std::exp(1.0), 1.0};
    auto nr = compute_returns(s, {});
    REQUIRE(nr.mu == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(nr.sigma == Catch::Approx(1.0).margin(1e-12));  // population convention
    REQUIRE(nr.values[0] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(nr.values[1] == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("constant returns are a degenerate series", "[ingest][returns]") {
    PriceSeries s;
    s.asset_id = "x";
    s.frequency = Frequency::daily;
    for (int t = 0; t < 3; ++t) {
        s.timestamps.push_back(t);
        s.prices.push_back(100.0 * std::exp(0.01 * t));
    }
    REQUIRE_THROWS_AS(compute_returns(s, {}), DegenerateSeriesError);
}

TEST_CASE("outliers clip exactly to the boundary", "[ingest][returns]") {
    std::vector<double> raw;
    for (int i = 0; i < 40; ++i) raw.push_back(i % 2 ? 0.01 : -0.01);
    raw.push_back(0.5);  // far outlier
    auto s = series_from_returns(raw);
    ReturnOptions opt;
    opt.clip_sigma = 2.0;
    auto nr = compute_returns(s, opt);
    // stored value is exactly (mu + 2 sigma) / sigma
    REQUIRE(nr.values.back() == Catch::Approx(nr.mu / nr.sigma + 2.0).margin(1e-12));
    for (std::size_t i = 0; i < nr.size(); ++i)
        REQUIRE(std::fabs(nr.values[i] - nr.mu / nr.sigma) <= 2.0 + 1e-12);
}

TEST_CASE("normalization yields unit sample deviation when nothing clips", "[ingest][returns]") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> gauss(0.0005, 0.02);
    std::vector<double> raw(5000);
    for (auto& r : raw) r = gauss(rng);
    auto nr = compute_returns(series_from_returns(raw), {});
    double sum = 0.0, sum2 = 0.0;
    for (double v : nr.values) {
        sum += v;
        sum2 += v * v;
    }
    double n = static_cast<double>(nr.size());
    double sd = std::sqrt((sum2 - sum * sum / n) / (n - 1.0));
    REQUIRE(sd == Catch::Approx(1.0).epsilon(0.05));
}

TEST_CASE("clipping is an idempotent projection", "[ingest][returns]") {
    std::mt19937_64 rng(21);
    std::student_t_distribution<double> heavy(2.5);
    std::vector<double> raw(2000);
    for (auto& r : raw) r = 0.01 * heavy(rng);
    double mu = 0.0001, sigma = 0.012, clip = 3.0;
    auto once = normalize_returns(raw, mu, sigma, clip);
    // re-clip the already clipped raw values with the same estimates
    std::vector<double> clipped_raw(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) clipped_raw[i] = once[i] * sigma;
    auto twice = normalize_returns(clipped_raw, mu, sigma, clip);
    for (std::size_t i = 0; i < raw.size(); ++i) REQUIRE(once[i] == twice[i]);
}

TEST_CASE("ewma sigma is defined everywhere and tracks regime changes", "[ingest][ewma]") {
    std::mt19937_64 rng(33);
    std::normal_distribution<double> quiet(0.0, 0.01), loud(0.0, 0.05);
    std::vector<double> raw;
    for (int i = 0; i < 400; ++i) raw.push_back(quiet(rng));
    for (int i = 0; i < 400; ++i) raw.push_back(loud(rng));
    ReturnOptions opt;
    opt.vol_mode = VolMode::ewma;
    opt.ewma_half_life = 60.0;
    auto nr = compute_returns(series_from_returns(raw), opt);
    REQUIRE(nr.sigma_series.size() == raw.size());
    for (double s : nr.sigma_series) REQUIRE(s > 0.0);
    REQUIRE(std::isnan(nr.sigma));
    // late-sample sigma reflects the loud regime, early the quiet one
    REQUIRE(nr.sigma_series[350] < 0.02);
    REQUIRE(nr.sigma_series.back() > 0.03);
    // value = clipped raw / sigma(t), raw as recomputed from the price path
    for (std::size_t i = 0; i < nr.size(); ++i) {
        double lo = nr.mu - opt.clip_sigma * nr.sigma_series[i];
        double hi = nr.mu + opt.clip_sigma * nr.sigma_series[i];
        double expect = std::min(std::max(nr.raw[i], lo), hi) / nr.sigma_series[i];
        REQUIRE(nr.values[i] == expect);
    }
}

TEST_CASE("ewma mode needs a seed window", "[ingest][ewma]") {
    ReturnOptions opt;
    opt.vol_mode = VolMode::ewma;
    auto s = series_from_returns({0.01, -0.02, 0.005, 0.01, -0.01});
    REQUIRE_THROWS_AS(compute_returns(s, opt), DataError);
}

TEST_CASE("minimum-sigma floor excludes near-pegged series", "[ingest][returns]") {
    std::vector<double> raw(100, 0.0);
    raw[50] = 1e-9;  // almost, but not exactly, constant
    auto s = series_from_returns(raw);
    ReturnOptions opt;
    REQUIRE_NOTHROW(compute_returns(s, opt));
    opt.min_sigma = 1e-6;
    REQUIRE_THROWS_AS(compute_returns(s, opt), DegenerateSeriesError);
}

namespace {

PriceSeries two_session_minutes(int days, int minutes_per_day, std::uint64_t seed) {
    PriceSeries s;
    s.asset_id = "ES";
    s.frequency = Frequency::minute;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 0.001);
    double p = 100.0;
    for (int d = 0; d < days; ++d) {
        for (int m = 0; m < minutes_per_day; ++m) {
            p *= std::exp(gauss(rng));
            s.timestamps.push_back(d * 1440 + 570 + m);  // 09:30 open
            s.prices.push_back(p);
        }
    }
    return s;
}

}  // namespace

TEST_CASE("two 390-minute sessions give two 388-return segments", "[ingest][split]") {
    auto s = two_session_minutes(2, 390, 41);
    SessionCalendar cal;
    cal.set("ES", {570, 960});
    DaySplit split = split_trading_days(s, cal);
    REQUIRE(split.segments.size() == 2);
    REQUIRE(split.segments[0].values.size() == 388);
    REQUIRE(split.segments[1].values.size() == 388);
    // 1 overnight + 2 dropped first-minute returns
    REQUIRE(split.excluded.size() == 3);
    int overnight = 0, first_minute = 0;
    for (const auto& e : split.excluded)
        (e.kind == ExcludedKind::overnight ? overnight : first_minute) += 1;
    REQUIRE(overnight == 1);
    REQUIRE(first_minute == 2);
}

TEST_CASE("segments plus exclusions partition the session return stream", "[ingest][split]") {
    auto s = two_session_minutes(4, 390, 43);
    SessionCalendar cal;
    cal.set("ES", {570, 960});
    DaySplit split = split_trading_days(s, cal);

    // continuous stream over the same observations
    std::vector<std::pair<std::int64_t, double>> stream;
    for (std::size_t i = 1; i < s.size(); ++i)
        stream.push_back({s.timestamps[i], std::log(s.prices[i] / s.prices[i - 1])});

    std::vector<std::pair<std::int64_t, double>> pieces;
    for (const auto& seg : split.segments)
        for (std::size_t i = 0; i < seg.raw.size(); ++i)
            pieces.push_back({seg.timestamps[i], seg.raw[i]});
    for (const auto& e : split.excluded) pieces.push_back({e.timestamp, e.raw});
    std::sort(pieces.begin(), pieces.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    REQUIRE(pieces.size() == stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i) {
        REQUIRE(pieces[i].first == stream[i].first);
        REQUIRE(pieces[i].second == stream[i].second);
    }
}

TEST_CASE("degenerate sessions are skipped", "[ingest][split]") {
    PriceSeries s;
    s.asset_id = "ES";
    s.frequency = Frequency::minute;
    // day 0: a single in-session minute; day 1: a full session
    s.timestamps.push_back(600);
    s.prices.push_back(100.0);
    std::mt19937_64 rng(47);
    std::normal_distribution<double> gauss(0.0, 0.001);
    double p = 100.0;
    for (int m = 0; m < 390; ++m) {
        p *= std::exp(gauss(rng));
        s.timestamps.push_back(1440 + 570 + m);
        s.prices.push_back(p);
    }
    SessionCalendar cal;
    cal.set("ES", {570, 960});
    DaySplit split = split_trading_days(s, cal);
    REQUIRE(split.segments.size() == 1);
    REQUIRE(split.skipped_sessions == 1);
}

TEST_CASE("continuous mode keeps one return per adjacent price pair", "[ingest][split]") {
    auto s = two_session_minutes(2, 390, 51);
    REQUIRE(s.size() == 780);
    auto nr = compute_returns(s, {});
    REQUIRE(nr.size() == 779);  // includes the overnight pair
}

TEST_CASE("session calendar parses and wraps", "[ingest][split]") {
    TempDir dir;
    auto path = dir.file("cal.txt", "# sessions\nES=09:30-16:00\nNK=23:00-06:00\n*=00:00-24:00\n");
    SessionCalendar cal = SessionCalendar::from_file(path);
    REQUIRE(cal.lookup("ES").open_minute == 570);
    REQUIRE(cal.lookup("ES").close_minute == 960);
    REQUIRE(cal.lookup("NK").open_minute == 1380);
    REQUIRE(cal.lookup("NK").close_minute == 360);
    REQUIRE(cal.lookup("unknown").close_minute == 1440);

    // wrapping session groups post-midnight minutes with the opening day
    PriceSeries s;
    s.asset_id = "NK";
    s.frequency = Frequency::minute;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 0.001);
    double p = 50.0;
    for (int d = 0; d < 2; ++d)
        for (int m = 0; m < 420; ++m) {  // 23:00 .. 05:59
            p *= std::exp(gauss(rng));
            s.timestamps.push_back(d * 1440 + 1380 + m);
            s.prices.push_back(p);
        }
    DaySplit split = split_trading_days(s, SessionCalendar::from_file(path));
    REQUIRE(split.segments.size() == 2);
    REQUIRE(split.segments[0].values.size() == 418);
}
