#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "test_oracles.hpp"
#include "trendlab/ingest.hpp"
#include "trendlab/trend.hpp"

using namespace trendlab;

namespace {

NormalizedReturns series_from_values(std::vector<double> values, double mu = 0.0,
                                     double sigma = 1.0,
                                     Frequency freq = Frequency::daily) {
    NormalizedReturns nr;
    nr.asset_id = "test";
    nr.frequency = freq;
    nr.mu = mu;
    nr.sigma = sigma;
    nr.values = std::move(values);
    nr.raw.resize(nr.values.size());
    for (std::size_t i = 0; i < nr.values.size(); ++i) {
        nr.raw[i] = nr.values[i] * sigma;
        nr.timestamps.push_back(static_cast<std::int64_t>(i));
    }
    return nr;
}

std::vector<int> all_grid_horizons() {
    std::vector<int> out;
    for (Frequency f :
         {Frequency::minute, Frequency::daily, Frequency::monthly, Frequency::yearly}) {
        auto range = grid_k_range(f);
        for (int k = range[0]; k <= range[1]; ++k) out.push_back(grid_horizon(f, k));
    }
    return out;
}

}  // namespace

TEST_CASE("kernel normalization matches the summation oracle", "[trend][kernel]") {
    // frozen from the oracle: M_2 = 1/sqrt(sum n^2 e^{-2n}) = 2.05124
    REQUIRE(kernel_normalization(2.0) == Catch::Approx(2.0512).margin(5e-4));
    for (int T : all_grid_horizons()) {
        double closed = kernel_normalization(T);
        double summed = oracle::kernel_normalization(T);
        REQUIRE(closed == Catch::Approx(summed).epsilon(1e-12));
        // sum of squared weights = 1 by construction
        double s = 0.0;
        double w;
        long n = 0;
        do {
            ++n;
            w = kernel_weight(T, n);
            s += w * w;
        } while (w * w > 1e-24 || n < 8 * T);
        REQUIRE(std::fabs(s - 1.0) < 1e-10);
    }
}

TEST_CASE("kernel weight at lag zero vanishes", "[trend][kernel]") {
    for (int T : {2, 8, 64, 1024}) REQUIRE(kernel_weight(T, 0) == 0.0);
    REQUIRE_THROWS_AS(kernel_normalization(1.0), ConfigError);
    REQUIRE_THROWS_AS(mean_lookback(0.0), ConfigError);
}

TEST_CASE("mean lookback is 2/(1-q), about T+1", "[trend][kernel]") {
    // frozen from the summation oracle
    REQUIRE(mean_lookback(16.0) == Catch::Approx(17.0209).margin(1e-3));
    REQUIRE(mean_lookback(64.0) == Catch::Approx(65.0).margin(0.01));
    for (int T : {2, 16, 64, 384}) {
        REQUIRE(mean_lookback(T) == Catch::Approx(oracle::mean_lookback(T)).epsilon(1e-10));
    }
    // asymptotics: value/T -> 1
    REQUIRE(mean_lookback(1e6) / 1e6 == Catch::Approx(1.0).margin(1e-5));

    // excess over T+1 lies in [0, 0.2] for T >= 4 and shrinks with T
    double prev = 1e9;
    for (int T : {4, 8, 16, 32, 64, 128, 256, 512, 1024}) {
        double excess = mean_lookback(T) - (T + 1.0);
        REQUIRE(excess >= 0.0);
        REQUIRE(excess <= 0.2);
        REQUIRE(excess < prev);
        prev = excess;
    }
}

TEST_CASE("recursion state follows A' = x + qA, B' = q(B + A)", "[trend]") {
    TrendState s(8.0);
    double q = std::exp(-2.0 / 8.0);
    double a = 0.0, b = 0.0;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        double x = u(rng);
        double b_next = q * (b + a);
        double a_next = x + q * a;
        s.update(x);
        REQUIRE(s.a == Catch::Approx(a_next).margin(1e-15));
        REQUIRE(s.b == Catch::Approx(b_next).margin(1e-15));
        a = a_next;
        b = b_next;
    }
}

TEST_CASE("zero excess returns give identically zero trend", "[trend]") {
    auto nr = series_from_values(std::vector<double>(200, 0.0));
    TrendConfig cfg;
    cfg.horizons = {8};
    auto phi = trend_series(nr, 8, cfg);
    REQUIRE(phi.size() == 200 - 40);
    for (const auto& [ts, v] : phi) REQUIRE(v == 0.0);
}

TEST_CASE("unit impulse reproduces the kernel, peaking at T/2", "[trend]") {
    const int T = 8;
    std::vector<double> values(400, 0.0);
    const std::size_t t0 = 120;
    values[t0] = 1.0;
    auto nr = series_from_values(std::move(values));
    TrendConfig cfg;
    cfg.horizons = {T};
    cfg.clip_phi = 100.0;  // keep the raw kernel visible
    auto phi = trend_series(nr, T, cfg);
    std::int64_t first_ts = phi.front().first;
    double m = kernel_normalization(T);
    double peak = -1.0;
    int peak_n = -1;
    for (const auto& [ts, v] : phi) {
        std::int64_t n = ts - static_cast<std::int64_t>(t0);
        double expected = n >= 0 ? m * static_cast<double>(n) * std::exp(-2.0 * n / T) : 0.0;
        REQUIRE(v == Catch::Approx(expected).margin(1e-12));
        if (v > peak) {
            peak = v;
            peak_n = static_cast<int>(n);
        }
    }
    REQUIRE(first_ts == 40);  // warmup_multiplier * T
    REQUIRE(peak_n == T / 2);
}

TEST_CASE("recursion equals direct convolution after warmup", "[trend]") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> x(10000);
    for (auto& v : x) v = gauss(rng);
    auto nr = series_from_values(x);
    for (int T : {2, 3, 64, 384}) {
        TrendConfig cfg;
        cfg.horizons = {T};
        cfg.clip_phi = 1e9;
        auto phi = trend_series(nr, T, cfg);
        auto conv = oracle::convolution_phi(x, T);
        double max_err = 0.0;
        for (const auto& [ts, v] : phi)
            max_err = std::max(max_err, std::fabs(v - conv[static_cast<std::size_t>(ts)]));
        REQUIRE(max_err <= 1e-9);
    }
}

TEST_CASE("iid normal input yields unit-variance trend strength", "[trend]") {
    std::mt19937_64 rng(29);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> x(1000000);
    for (auto& v : x) v = gauss(rng);
    auto nr = series_from_values(std::move(x));
    TrendConfig cfg;
    cfg.horizons = {32};
    cfg.clip_phi = 1e9;
    auto phi = trend_series(nr, 32, cfg);
    double sum = 0.0, sum2 = 0.0;
    for (const auto& [ts, v] : phi) {
        sum += v;
        sum2 += v * v;
    }
    double n = static_cast<double>(phi.size());
    double sd = std::sqrt(sum2 / n - (sum / n) * (sum / n));
    REQUIRE(sd > 0.97);
    REQUIRE(sd < 1.03);
}

TEST_CASE("clipping bounds every emitted value", "[trend]") {
    std::mt19937_64 rng(5);
    std::student_t_distribution<double> heavy(3.0);
    std::vector<double> x(20000);
    for (auto& v : x) v = heavy(rng);
    auto nr = series_from_values(std::move(x));
    TrendConfig cfg;
    cfg.horizons = {4};
    auto phi = trend_series(nr, 4, cfg);
    for (const auto& [ts, v] : phi) REQUIRE(std::fabs(v) <= 2.5);
}

TEST_CASE("prepending quiet history leaves aligned values unchanged", "[trend]") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int T = 16;
    std::vector<double> x(800);
    for (auto& v : x) v = gauss(rng);
    std::vector<double> padded(5 * T, 0.0);
    padded.insert(padded.end(), x.begin(), x.end());

    TrendConfig cfg;
    cfg.horizons = {T};
    auto phi_a = trend_series(series_from_values(x), T, cfg);
    auto phi_b = trend_series(series_from_values(padded), T, cfg);

    std::map<std::int64_t, double> b_by_ts;
    for (const auto& [ts, v] : phi_b) b_by_ts[ts - 5 * T] = v;
    for (const auto& [ts, v] : phi_a) {
        auto it = b_by_ts.find(ts);
        REQUIRE(it != b_by_ts.end());
        REQUIRE(v == Catch::Approx(it->second).margin(1e-9));
    }
}

TEST_CASE("short series produce an empty trend series", "[trend]") {
    auto nr = series_from_values(std::vector<double>(10, 0.5));
    TrendConfig cfg;
    cfg.horizons = {8};
    REQUIRE(trend_series(nr, 8, cfg).empty());
}

TEST_CASE("day-by-day panel: T-interval ramp-up and within-day responses", "[trend][panel]") {
    DaySplit split;
    split.asset_id = "x";
    split.mu = 0.0;
    split.sigma = 1.0;
    TradingDaySegment seg;
    seg.asset_id = "x";
    seg.date = 0;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < 388; ++i) {
        seg.timestamps.push_back(600 + i);
        double v = gauss(rng);
        seg.raw.push_back(v);
        seg.values.push_back(v);
    }
    split.segments.push_back(seg);

    TrendConfig cfg;
    cfg.horizons = {8};
    cfg.k_indices = {3};
    Panel panel = build_panel(std::vector<DaySplit>{split}, cfg);
    REQUIRE(panel.rows() == 379);  // 388 returns, first 8 ramp up, last has no response
    // response is the next within-day return
    REQUIRE(panel.timestamps.front() == 600 + 8);
    REQUIRE(panel.response.front() == seg.values[9]);

    cfg.lag = 1;
    Panel lagged = build_panel(std::vector<DaySplit>{split}, cfg);
    REQUIRE(lagged.rows() == 378);
    REQUIRE(lagged.response.front() == seg.values[10]);
}

TEST_CASE("day-by-day state resets between sessions", "[trend][panel]") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> day(60);
    for (auto& v : day) v = gauss(rng);

    DaySplit split;
    split.asset_id = "x";
    split.mu = 0.0;
    split.sigma = 1.0;
    for (int d = 0; d < 2; ++d) {
        TradingDaySegment seg;
        seg.asset_id = "x";
        seg.date = d;
        for (int i = 0; i < 60; ++i) {
            seg.timestamps.push_back(d * 1440 + 600 + i);
            seg.raw.push_back(day[i]);
            seg.values.push_back(day[i]);
        }
        split.segments.push_back(seg);
    }
    TrendConfig cfg;
    cfg.horizons = {8};
    Panel panel = build_panel(std::vector<DaySplit>{split}, cfg);
    std::size_t per_day = panel.rows() / 2;
    for (std::size_t i = 0; i < per_day; ++i)
        REQUIRE(panel.phi[0][i] == panel.phi[0][per_day + i]);  // identical input, reset state
}

TEST_CASE("wrapped sessions keep their session date as the resampling day", "[trend][panel]") {
    DaySplit split;
    split.asset_id = "nk";
    split.mu = 0.0;
    split.sigma = 1.0;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    TradingDaySegment seg;
    seg.asset_id = "nk";
    seg.date = 5;
    for (int m = 0; m < 300; ++m) {  // 23:00 open, runs past midnight
        seg.timestamps.push_back(5 * 1440 + 1380 + m);
        double v = gauss(rng);
        seg.raw.push_back(v);
        seg.values.push_back(v);
    }
    split.segments.push_back(seg);
    TrendConfig cfg;
    cfg.horizons = {8};
    Panel panel = build_panel(std::vector<DaySplit>{split}, cfg);
    REQUIRE(panel.rows() > 0);
    bool crossed_midnight = false;
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        REQUIRE(panel.day_of_row(r) == 5);
        if (panel.timestamps[r] / 1440 == 6) crossed_midnight = true;
    }
    REQUIRE(crossed_midnight);
}

TEST_CASE("day-by-day rejects horizons above 64", "[trend][panel]") {
    DaySplit split;
    split.asset_id = "x";
    TrendConfig cfg;
    cfg.horizons = {128};
    REQUIRE_THROWS_AS(build_panel(std::vector<DaySplit>{split}, cfg), ConfigError);
}

TEST_CASE("continuous panel aligns responses and merges by time then asset", "[trend][panel]") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<NormalizedReturns> assets;
    for (int a = 0; a < 3; ++a) {
        std::vector<double> x(300 + 40 * a);
        for (auto& v : x) v = gauss(rng);
        auto nr = series_from_values(std::move(x));
        nr.asset_id = "a" + std::to_string(a);
        assets.push_back(std::move(nr));
    }
    TrendConfig cfg;
    cfg.horizons = {4, 8};
    cfg.k_indices = {2, 3};
    cfg.lag = 0;
    Panel panel = build_panel(assets, cfg);
    REQUIRE(panel.n_horizons() == 2);
    // warmup is the longest horizon's: ceil(5*8) = 40
    std::size_t expected = 0;
    for (const auto& a : assets) expected += a.size() - 40 - 1;
    REQUIRE(panel.rows() == expected);
    for (std::size_t r = 1; r < panel.rows(); ++r) {
        bool ordered = panel.timestamps[r] > panel.timestamps[r - 1] ||
                       (panel.timestamps[r] == panel.timestamps[r - 1] &&
                        panel.asset_index[r] > panel.asset_index[r - 1]);
        REQUIRE(ordered);
    }
    // responses come from the row's own asset at t+1
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        const auto& a = assets[panel.asset_index[r]];
        std::size_t t = static_cast<std::size_t>(panel.timestamps[r]);
        REQUIRE(panel.response[r] == a.values[t + 1]);
    }
}

TEST_CASE("panels reject mixed frequencies", "[trend][panel]") {
    auto a = series_from_values(std::vector<double>(100, 0.1));
    auto b = series_from_values(std::vector<double>(100, 0.1), 0.0, 1.0, Frequency::monthly);
    b.asset_id = "b";
    TrendConfig cfg;
    cfg.horizons = {4};
    REQUIRE_THROWS_AS(build_panel(std::vector<NormalizedReturns>{a, b}, cfg), ConfigError);
}

TEST_CASE("grid horizons follow the four frequency ladders", "[trend]") {
    REQUIRE(grid_horizon(Frequency::minute, 1) == 2);
    REQUIRE(grid_horizon(Frequency::minute, 10) == 1024);
    REQUIRE(grid_horizon(Frequency::daily, 8) == 256);
    REQUIRE(grid_horizon(Frequency::monthly, 1) == 3);
    REQUIRE(grid_horizon(Frequency::monthly, 3) == 12);
    REQUIRE(grid_horizon(Frequency::monthly, 8) == 384);
    REQUIRE(grid_horizon(Frequency::yearly, 7) == 128);
    REQUIRE_THROWS_AS(grid_horizon(Frequency::yearly, 8), ConfigError);
}
