#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "trendlab/common.hpp"
#include "trendlab/csvio.hpp"
#include "trendlab/ingest.hpp"

namespace trendlab {

// Horizon unit bridges, fixed across the project:
// 2^10 minutes = 1 trading day, 260 trading days = 1 year, 260/12 days = 1 month.
inline constexpr double kMinutesPerTradingDay = 1024.0;
inline constexpr double kTradingDaysPerYear = 260.0;
inline constexpr double kTradingDaysPerMonth = 260.0 / 12.0;

/// Full horizon grid for a frequency, in native intervals:
/// minute/daily T = 2^k (k = 1..10), monthly T = 1.5 * 2^k (k = 1..8),
/// yearly T = 2^k (k = 1..7).
inline std::vector<int> grid_k_range(Frequency f) {
    switch (f) {
        case Frequency::minute:
        case Frequency::daily: return {1, 10};
        case Frequency::monthly: return {1, 8};
        case Frequency::yearly: return {1, 7};
    }
    return {1, 1};
}

inline int grid_horizon(Frequency f, int k) {
    auto range = grid_k_range(f);
    if (k < range[0] || k > range[1])
        throw ConfigError("horizon index k=" + std::to_string(k) + " outside grid for " +
                          to_string(f));
    if (f == Frequency::monthly) return 3 << (k - 1);  // 1.5 * 2^k
    return 1 << k;
}

inline std::vector<int> grid_horizons(Frequency f, int k_lo, int k_hi) {
    if (k_lo > k_hi) throw ConfigError("empty horizon range");
    std::vector<int> out;
    for (int k = k_lo; k <= k_hi; ++k) out.push_back(grid_horizon(f, k));
    return out;
}

/// Kernel weight normalization M_T for w(n) = M_T * n * exp(-2n/T):
/// sum_n w(n)^2 = 1 requires M_T = [p(1+p)/(1-p)^3]^(-1/2) with p = exp(-4/T),
/// the closed form of sum n^2 p^n.
inline double kernel_normalization(double T) {
    if (!(T >= 2.0)) throw ConfigError("horizon must be >= 2");
    double p = std::exp(-4.0 / T);
    double s = p * (1.0 + p) / std::pow(1.0 - p, 3);
    return 1.0 / std::sqrt(s);
}

/// Kernel weight at lag n (n = 0 is the current interval and has weight 0).
inline double kernel_weight(double T, std::int64_t n) {
    return kernel_normalization(T) * static_cast<double>(n) *
           std::exp(-2.0 * static_cast<double>(n) / T);
}

/// Weighted average lookback E[n+1] of the kernel = 2/(1-q), q = exp(-2/T).
/// This is ~T+1 rather than exactly T; see the kernel tests.
inline double mean_lookback(double T) {
    if (!(T >= 2.0)) throw ConfigError("horizon must be >= 2");
    return 2.0 / (1.0 - std::exp(-2.0 / T));
}

/// Exact rolling state for phi(t) = M_T * B(t):
///   A(t) = x(t) + q A(t-1),  B(t) = q (B(t-1) + A(t-1)),  q = exp(-2/T).
struct TrendState {
    double q = 0.0;
    double m = 0.0;  // M_T
    double a = 0.0;
    double b = 0.0;
    std::int64_t count = 0;

    explicit TrendState(double T = 2.0)
        : q(std::exp(-2.0 / T)), m(kernel_normalization(T)) {}

    void update(double x) {
        b = q * (b + a);
        a = x + q * a;
        ++count;
    }

    double phi() const { return m * b; }

    void reset() {
        a = b = 0.0;
        count = 0;
    }
};

struct TrendConfig {
    std::vector<int> horizons;      // T values in native intervals
    std::vector<int> k_indices;     // matching grid k index per horizon (for labels)
    double clip_phi = 2.5;
    double warmup_multiplier = 5.0;
    int lag = 0;

    void validate() const {
        if (horizons.empty()) throw ConfigError("no horizons configured");
        for (int T : horizons)
            if (T < 2) throw ConfigError("horizon T must be >= 2, got " + std::to_string(T));
        if (!(clip_phi > 0.0)) throw ConfigError("clip_phi must be positive");
        if (warmup_multiplier < 3.0) throw ConfigError("warmup_multiplier must be >= 3");
        if (lag < 0) throw ConfigError("lag must be non-negative");
    }

    static TrendConfig for_grid(Frequency f, int k_lo, int k_hi) {
        TrendConfig cfg;
        cfg.horizons = grid_horizons(f, k_lo, k_hi);
        for (int k = k_lo; k <= k_hi; ++k) cfg.k_indices.push_back(k);
        return cfg;
    }
};

/// Trend strengths of one series at one horizon (continuous convention):
/// phi(t) emitted for t >= ceil(warmup_multiplier * T), clipped to +-clip_phi.
/// Excess returns are R(t) - mu/sigma(t).
inline std::vector<std::pair<std::int64_t, double>> trend_series(const NormalizedReturns& returns,
                                                                 int T, const TrendConfig& cfg) {
    cfg.validate();
    std::vector<std::pair<std::int64_t, double>> out;
    std::int64_t warmup = static_cast<std::int64_t>(std::ceil(cfg.warmup_multiplier * T));
    if (static_cast<std::int64_t>(returns.size()) <= warmup) return out;  // caller warns
    TrendState state(T);
    for (std::size_t t = 0; t < returns.size(); ++t) {
        double excess = returns.values[t] - returns.mu / returns.sigma_at(t);
        state.update(excess);
        if (static_cast<std::int64_t>(t) >= warmup) {
            double phi = std::clamp(state.phi(), -cfg.clip_phi, cfg.clip_phi);
            out.emplace_back(returns.timestamps[t], phi);
        }
    }
    return out;
}

enum class PanelMode { day_by_day, continuous };

inline const char* to_string(PanelMode m) {
    return m == PanelMode::day_by_day ? "day-by-day" : "continuous";
}

/// Per-asset normalization echo kept in panel metadata.
struct PanelAssetInfo {
    std::string asset_id;
    double mu = 0.0;
    double sigma = 0.0;
    VolMode vol_mode = VolMode::full_sample;
};

/// The Table-2 structure: one row per (interval, asset) carrying the K
/// per-horizon trend strengths and the next-interval normalized return.
/// Rows are ordered by (timestamp, asset). Stored column-wise.
struct Panel {
    Frequency frequency = Frequency::daily;
    PanelMode mode = PanelMode::continuous;
    std::vector<int> horizons;
    std::vector<int> k_indices;
    int lag = 0;
    double clip_phi = 2.5;
    double warmup_multiplier = 5.0;
    std::int64_t intervals_per_day = 1;  // bootstrap resampling unit
    std::vector<PanelAssetInfo> assets;

    std::vector<std::int64_t> timestamps;
    std::vector<std::uint32_t> asset_index;
    std::vector<std::int64_t> day_ids;  // explicit session dates (day-by-day mode), else empty
    std::vector<std::vector<double>> phi;  // [horizon][row]
    std::vector<double> response;

    std::size_t rows() const { return response.size(); }
    std::size_t n_horizons() const { return phi.size(); }

    /// Bootstrap/CV resampling unit: the session date when recorded, otherwise
    /// the timestamp divided into trading days.
    std::int64_t day_of_row(std::size_t row) const {
        if (!day_ids.empty()) return day_ids[row];
        std::int64_t ts = timestamps[row];
        return ts >= 0 ? ts / intervals_per_day : -((-ts - 1) / intervals_per_day) - 1;
    }

    /// Panel restricted to a single horizon column (metadata preserved).
    Panel select_horizon(std::size_t column) const {
        Panel out = header_copy();
        out.horizons = {horizons[column]};
        out.k_indices = {k_indices.empty() ? 0 : k_indices[column]};
        out.timestamps = timestamps;
        out.asset_index = asset_index;
        out.day_ids = day_ids;
        out.phi = {phi[column]};
        out.response = response;
        return out;
    }

    /// All (row, horizon) pairs stacked into a single-column panel; this is
    /// the shape the pooled regressions consume.
    Panel stack_pairs() const {
        Panel out = header_copy();
        out.horizons = {0};
        out.k_indices = {0};
        std::size_t n = rows() * n_horizons();
        out.timestamps.reserve(n);
        out.asset_index.reserve(n);
        out.response.reserve(n);
        if (!day_ids.empty()) out.day_ids.reserve(n);
        out.phi.assign(1, {});
        out.phi[0].reserve(n);
        for (std::size_t r = 0; r < rows(); ++r)
            for (std::size_t k = 0; k < n_horizons(); ++k) {
                out.timestamps.push_back(timestamps[r]);
                out.asset_index.push_back(asset_index[r]);
                if (!day_ids.empty()) out.day_ids.push_back(day_ids[r]);
                out.phi[0].push_back(phi[k][r]);
                out.response.push_back(response[r]);
            }
        return out;
    }

    Panel header_copy() const {
        Panel out;
        out.frequency = frequency;
        out.mode = mode;
        out.horizons = horizons;
        out.k_indices = k_indices;
        out.lag = lag;
        out.clip_phi = clip_phi;
        out.warmup_multiplier = warmup_multiplier;
        out.intervals_per_day = intervals_per_day;
        out.assets = assets;
        return out;
    }
};

namespace detail {

struct RowBuf {
    std::vector<std::int64_t> ts;
    std::vector<std::int64_t> day;  // session dates; empty in continuous mode
    std::vector<std::vector<double>> phi;  // [horizon][row]
    std::vector<double> resp;
};

// continuous mode: one pass per asset over its normalized returns
inline RowBuf continuous_rows(const NormalizedReturns& nr, const TrendConfig& cfg) {
    RowBuf buf;
    std::size_t K = cfg.horizons.size();
    buf.phi.resize(K);
    std::vector<TrendState> states;
    states.reserve(K);
    std::int64_t warmup = 0;
    for (int T : cfg.horizons) {
        states.emplace_back(static_cast<double>(T));
        warmup = std::max(warmup,
                          static_cast<std::int64_t>(std::ceil(cfg.warmup_multiplier * T)));
    }
    std::int64_t n = static_cast<std::int64_t>(nr.size());
    for (std::int64_t t = 0; t < n; ++t) {
        double excess = nr.values[t] - nr.mu / nr.sigma_at(t);
        for (auto& s : states) s.update(excess);
        std::int64_t resp_idx = t + 1 + cfg.lag;
        if (t < warmup || resp_idx >= n) continue;
        buf.ts.push_back(nr.timestamps[t]);
        for (std::size_t k = 0; k < K; ++k)
            buf.phi[k].push_back(std::clamp(states[k].phi(), -cfg.clip_phi, cfg.clip_phi));
        buf.resp.push_back(nr.values[resp_idx]);
    }
    return buf;
}

// day-by-day mode: state reset each session, per-day warmup of max(T) intervals
inline RowBuf day_by_day_rows(const DaySplit& split, const TrendConfig& cfg) {
    RowBuf buf;
    std::size_t K = cfg.horizons.size();
    buf.phi.resize(K);
    std::int64_t warmup = *std::max_element(cfg.horizons.begin(), cfg.horizons.end());
    std::vector<TrendState> states;
    for (int T : cfg.horizons) states.emplace_back(static_cast<double>(T));
    double mu_over_sigma = split.mu / split.sigma;
    for (const auto& seg : split.segments) {
        for (auto& s : states) s.reset();
        std::int64_t n = static_cast<std::int64_t>(seg.values.size());
        for (std::int64_t t = 0; t < n; ++t) {
            double excess = seg.values[t] - mu_over_sigma;
            for (auto& s : states) s.update(excess);
            std::int64_t resp_idx = t + 1 + cfg.lag;
            if (t < warmup || resp_idx >= n) continue;
            buf.ts.push_back(seg.timestamps[t]);
            buf.day.push_back(seg.date);
            for (std::size_t k = 0; k < K; ++k)
                buf.phi[k].push_back(std::clamp(states[k].phi(), -cfg.clip_phi, cfg.clip_phi));
            buf.resp.push_back(seg.values[resp_idx]);
        }
    }
    return buf;
}

inline void merge_rows(Panel& panel, std::vector<RowBuf>& per_asset) {
    // deterministic ordered merge by (timestamp, asset index)
    std::size_t K = panel.horizons.size();
    bool with_days = !per_asset.empty() && !per_asset.front().day.empty();
    std::size_t total = 0;
    for (const auto& b : per_asset) total += b.ts.size();
    panel.timestamps.reserve(total);
    panel.asset_index.reserve(total);
    panel.response.reserve(total);
    if (with_days) panel.day_ids.reserve(total);
    panel.phi.assign(K, {});
    for (auto& col : panel.phi) col.reserve(total);
    std::vector<std::size_t> pos(per_asset.size(), 0);
    while (true) {
        std::size_t best = per_asset.size();
        std::int64_t best_ts = 0;
        for (std::size_t a = 0; a < per_asset.size(); ++a) {
            if (pos[a] >= per_asset[a].ts.size()) continue;
            std::int64_t ts = per_asset[a].ts[pos[a]];
            if (best == per_asset.size() || ts < best_ts) {
                best = a;
                best_ts = ts;
            }
        }
        if (best == per_asset.size()) break;
        panel.timestamps.push_back(best_ts);
        panel.asset_index.push_back(static_cast<std::uint32_t>(best));
        if (with_days) panel.day_ids.push_back(per_asset[best].day[pos[best]]);
        for (std::size_t k = 0; k < K; ++k)
            panel.phi[k].push_back(per_asset[best].phi[k][pos[best]]);
        panel.response.push_back(per_asset[best].resp[pos[best]]);
        ++pos[best];
    }
}

}  // namespace detail

/// Builds the panel from continuous normalized-return series. Warmup is
/// warmup_multiplier * T intervals; rows need every horizon defined and a
/// response at t + 1 + lag.
inline Panel build_panel(const std::vector<NormalizedReturns>& assets, const TrendConfig& cfg) {
    cfg.validate();
    if (assets.empty()) throw ConfigError("build_panel: no assets");
    Frequency freq = assets.front().frequency;
    for (const auto& a : assets)
        if (a.frequency != freq)
            throw ConfigError("build_panel: inconsistent frequencies across assets");

    Panel panel;
    panel.frequency = freq;
    panel.mode = PanelMode::continuous;
    panel.horizons = cfg.horizons;
    panel.k_indices = cfg.k_indices;
    panel.lag = cfg.lag;
    panel.clip_phi = cfg.clip_phi;
    panel.warmup_multiplier = cfg.warmup_multiplier;
    panel.intervals_per_day =
        freq == Frequency::minute ? static_cast<std::int64_t>(kMinutesPerTradingDay) : 1;
    for (const auto& a : assets)
        panel.assets.push_back({a.asset_id, a.mu, a.sigma, a.vol_mode});

    std::vector<detail::RowBuf> per_asset(assets.size());
    parallel_for(assets.size(),
                 [&](std::size_t i) { per_asset[i] = detail::continuous_rows(assets[i], cfg); });
    detail::merge_rows(panel, per_asset);
    return panel;
}

/// Builds the panel in the intraday day-by-day scheme: per-session state
/// reset, per-day warmup of T intervals, responses never cross a session
/// boundary. Horizons above 64 intervals are rejected (use continuous mode).
inline Panel build_panel(const std::vector<DaySplit>& assets, const TrendConfig& cfg) {
    cfg.validate();
    if (assets.empty()) throw ConfigError("build_panel: no assets");
    for (int T : cfg.horizons)
        if (T > 64)
            throw ConfigError("day-by-day mode supports horizons up to 64 intervals, got T=" +
                              std::to_string(T));

    Panel panel;
    panel.frequency = Frequency::minute;
    panel.mode = PanelMode::day_by_day;
    panel.horizons = cfg.horizons;
    panel.k_indices = cfg.k_indices;
    panel.lag = cfg.lag;
    panel.clip_phi = cfg.clip_phi;
    panel.warmup_multiplier = cfg.warmup_multiplier;
    panel.intervals_per_day = 1440;  // session dates are calendar days
    for (const auto& a : assets)
        panel.assets.push_back({a.asset_id, a.mu, a.sigma, VolMode::full_sample});

    std::vector<detail::RowBuf> per_asset(assets.size());
    parallel_for(assets.size(),
                 [&](std::size_t i) { per_asset[i] = detail::day_by_day_rows(assets[i], cfg); });
    detail::merge_rows(panel, per_asset);
    return panel;
}

/// Writes the Table-2 CSV layout: timestamp,asset,phi_k<k1>..phi_k<kK>,response.
inline void write_panel_csv(const std::string& path, const Panel& panel) {
    auto out = open_output(path);
    out << "timestamp,asset";
    for (std::size_t k = 0; k < panel.n_horizons(); ++k)
        out << ",phi_k" << (panel.k_indices.empty() ? static_cast<int>(k + 1) : panel.k_indices[k]);
    out << ",response\n";
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        out << panel.timestamps[r] << ',' << panel.assets[panel.asset_index[r]].asset_id;
        for (std::size_t k = 0; k < panel.n_horizons(); ++k)
            out << ',' << format_double(panel.phi[k][r]);
        out << ',' << format_double(panel.response[r]) << '\n';
    }
}

}  // namespace trendlab
