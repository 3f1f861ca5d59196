#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trendlab/common.hpp"
#include "trendlab/csvio.hpp"

namespace trendlab {

/// Timestamped closing prices for one asset at one frequency. Timestamps are
/// integer counts of the native interval (minutes/days/months/years since an
/// arbitrary epoch); calendar arithmetic stops here, downstream modules only
/// see the integer grid.
struct PriceSeries {
    std::string asset_id;
    Frequency frequency = Frequency::daily;
    std::vector<std::int64_t> timestamps;
    std::vector<double> prices;

    std::size_t size() const { return timestamps.size(); }
};

enum class VolMode { full_sample, ewma };

inline const char* to_string(VolMode m) {
    return m == VolMode::full_sample ? "full_sample" : "ewma";
}

/// Clipped, variance-normalized log-returns R(t) = r(t)/sigma, plus the raw
/// log-returns and the estimates used, so later stages can re-normalize
/// (cross-validation re-estimates mu/sigma on training folds only).
struct NormalizedReturns {
    std::string asset_id;
    Frequency frequency = Frequency::daily;
    std::vector<std::int64_t> timestamps;  // timestamp of each return
    std::vector<double> raw;               // unclipped log-returns
    std::vector<double> values;            // clipped normalized returns
    double mu = 0.0;                       // per-interval mean of raw log-returns
    double sigma = 0.0;                    // full-sample sigma (population); NaN in ewma mode
    std::vector<double> sigma_series;      // per-return sigma in ewma mode, else empty
    double clip_sigma = 20.0;
    VolMode vol_mode = VolMode::full_sample;

    std::size_t size() const { return values.size(); }
    double sigma_at(std::size_t i) const {
        return sigma_series.empty() ? sigma : sigma_series[i];
    }
};

/// One trading session of minute returns, first-minute return removed,
/// already normalized with the asset's full-sample estimates.
struct TradingDaySegment {
    std::string asset_id;
    std::int64_t date = 0;  // calendar day index (timestamp / 1440)
    std::vector<std::int64_t> timestamps;
    std::vector<double> raw;
    std::vector<double> values;  // normalized, clipped
};

enum class ExcludedKind { overnight, first_minute };

/// Result of splitting a minute series into sessions. `excluded` keeps the
/// overnight and dropped first-minute returns so the segments plus exclusions
/// remain an order-preserving partition of the continuous return stream.
struct DaySplit {
    std::string asset_id;
    std::vector<TradingDaySegment> segments;
    struct Excluded {
        std::int64_t timestamp;
        double raw;
        ExcludedKind kind;
    };
    std::vector<Excluded> excluded;
    double mu = 0.0;     // estimated over the included (segment) returns
    double sigma = 0.0;  // population convention
    double clip_sigma = 20.0;
    int skipped_sessions = 0;
};

/// Session clock window per asset, minutes from midnight; half-open
/// [open, close). close < open means the session wraps past midnight.
struct SessionWindow {
    int open_minute = 0;
    int close_minute = 1440;
};

class SessionCalendar {
public:
    void set(const std::string& asset, SessionWindow w) { windows_[asset] = w; }

    SessionWindow lookup(const std::string& asset) const {
        auto it = windows_.find(asset);
        if (it != windows_.end()) return it->second;
        it = windows_.find("*");
        if (it != windows_.end()) return it->second;
        return SessionWindow{};  // whole day
    }

    /// Parses `asset=HH:MM-HH:MM` lines; '#' starts a comment; '*' is the default.
    static SessionCalendar from_file(const std::string& path) {
        SessionCalendar cal;
        LineReader reader(path);
        std::string line;
        while (reader.next(line)) {
            std::string s = trim(line);
            if (s.empty() || s[0] == '#') continue;
            auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ParseError(reader.where() + ": expected asset=HH:MM-HH:MM");
            std::string asset = trim(s.substr(0, eq));
            std::string range = trim(s.substr(eq + 1));
            auto dash = range.find('-');
            if (dash == std::string::npos)
                throw ParseError(reader.where() + ": expected HH:MM-HH:MM");
            cal.set(asset, SessionWindow{parse_clock(trim(range.substr(0, dash)), reader.where()),
                                         parse_clock(trim(range.substr(dash + 1)), reader.where())});
        }
        return cal;
    }

    static int parse_clock(const std::string& hm, const std::string& context) {
        auto colon = hm.find(':');
        if (colon == std::string::npos) throw ParseError(context + ": bad clock '" + hm + "'");
        int h = static_cast<int>(parse_int(hm.substr(0, colon), context));
        int m = static_cast<int>(parse_int(hm.substr(colon + 1), context));
        if (h < 0 || h > 24 || m < 0 || m > 59)
            throw ParseError(context + ": clock out of range '" + hm + "'");
        return h * 60 + m;
    }

private:
    std::map<std::string, SessionWindow> windows_;
};

/// Loads `timestamp,asset,price` long-format CSV (header required) into one
/// series per asset, ordered by asset id. Rejects duplicate (timestamp, asset)
/// rows, non-positive prices and non-monotone timestamps.
inline std::vector<PriceSeries> load_price_csv(const std::string& path, Frequency frequency) {
    LineReader reader(path);
    std::string line;
    if (!reader.next(line)) throw ParseError(path + ": empty file (header required)");
    {
        auto header = split(line, ',');
        if (header.size() != 3 || trim(header[0]) != "timestamp" || trim(header[1]) != "asset" ||
            trim(header[2]) != "price")
            throw ParseError(reader.where() + ": expected header 'timestamp,asset,price'");
    }
    std::map<std::string, PriceSeries> by_asset;
    while (reader.next(line)) {
        if (trim(line).empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != 3)
            throw ParseError(reader.where() + ": expected 3 fields, got " +
                             std::to_string(fields.size()));
        std::int64_t ts = parse_int(fields[0], reader.where());
        std::string asset = trim(fields[1]);
        if (asset.empty()) throw ParseError(reader.where() + ": empty asset id");
        double price = parse_double(fields[2], reader.where());
        if (!(price > 0.0) || !std::isfinite(price))
            throw DataError(reader.where() + ": non-positive price for asset '" + asset + "'");
        auto& series = by_asset[asset];
        if (series.asset_id.empty()) {
            series.asset_id = asset;
            series.frequency = frequency;
        }
        if (!series.timestamps.empty()) {
            if (ts == series.timestamps.back())
                throw DataError(reader.where() + ": duplicate timestamp " + std::to_string(ts) +
                                " for asset '" + asset + "'");
            if (ts < series.timestamps.back())
                throw DataError(reader.where() + ": non-monotone timestamp for asset '" + asset +
                                "'");
        }
        series.timestamps.push_back(ts);
        series.prices.push_back(price);
    }
    std::vector<PriceSeries> out;
    out.reserve(by_asset.size());
    for (auto& [id, s] : by_asset) out.push_back(std::move(s));
    if (out.empty()) throw DataError(path + ": no data rows");
    return out;
}

/// Writes the same long format back; assets in the given order, shortest
/// round-trip number formatting.
inline void write_price_csv(const std::string& path, const std::vector<PriceSeries>& series) {
    auto out = open_output(path);
    out << "timestamp,asset,price\n";
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.size(); ++i)
            out << s.timestamps[i] << ',' << s.asset_id << ',' << format_double(s.prices[i])
                << '\n';
}

namespace detail {

inline void mean_and_popvar(const std::vector<double>& xs, std::size_t lo, std::size_t hi,
                            double& mean, double& var) {
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) sum += xs[i];
    std::size_t n = hi - lo;
    mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        double d = xs[i] - mean;
        ss += d * d;
    }
    var = ss / static_cast<double>(n);
}

inline double clip_to(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

}  // namespace detail

/// Normalizes raw log-returns with the given full-sample estimates: clip raw
/// at mu +- clip_sigma * sigma, then divide by sigma. Shared by compute_returns
/// and the per-fold re-normalization in cross-validation.
inline std::vector<double> normalize_returns(const std::vector<double>& raw, double mu,
                                             double sigma, double clip_sigma) {
    std::vector<double> out(raw.size());
    double lo = mu - clip_sigma * sigma;
    double hi = mu + clip_sigma * sigma;
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = detail::clip_to(raw[i], lo, hi) / sigma;
    return out;
}

struct ReturnOptions {
    VolMode vol_mode = VolMode::full_sample;
    double ewma_half_life = 360.0;  // in native intervals (30 years of months)
    double clip_sigma = 20.0;
    double min_sigma = 0.0;  // pegged-price filter; 0 disables
};

/// Log-returns normalized per the trend-strength convention: population
/// mu/sigma over the whole sample, or a causal EWMA sigma(t) (half-life in
/// intervals, seeded with the population variance of the first 12 returns,
/// sigma(t) excludes the return at t). Returns more than clip_sigma standard
/// deviations from the mean are clipped to the boundary.
inline NormalizedReturns compute_returns(const PriceSeries& series, const ReturnOptions& opt) {
    if (series.size() < 3)
        throw DataError(series.asset_id + ": need at least 3 observations, have " +
                        std::to_string(series.size()));
    if (opt.vol_mode == VolMode::ewma && !(opt.ewma_half_life > 0.0))
        throw ConfigError("ewma half-life must be positive");

    NormalizedReturns out;
    out.asset_id = series.asset_id;
    out.frequency = series.frequency;
    out.clip_sigma = opt.clip_sigma;
    out.vol_mode = opt.vol_mode;
    std::size_t n = series.size() - 1;
    out.timestamps.resize(n);
    out.raw.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.timestamps[i] = series.timestamps[i + 1];
        out.raw[i] = std::log(series.prices[i + 1] / series.prices[i]);
    }

    double mean, var;
    detail::mean_and_popvar(out.raw, 0, n, mean, var);
    out.mu = mean;

    // a floating-point-level variance counts as zero (constant series differ
    // only by rounding of the price reconstruction)
    constexpr double kSigmaFloor = 1e-12;
    if (opt.vol_mode == VolMode::full_sample) {
        if (var <= 0.0 || std::sqrt(var) <= std::max(opt.min_sigma, kSigmaFloor))
            throw DegenerateSeriesError(series.asset_id + ": zero (or sub-floor) sample variance");
        out.sigma = std::sqrt(var);
        out.values = normalize_returns(out.raw, out.mu, out.sigma, out.clip_sigma);
        return out;
    }

    // ewma mode
    constexpr std::size_t kSeed = 12;
    if (n < kSeed + 1)
        throw DataError(series.asset_id + ": ewma mode needs more than " + std::to_string(kSeed) +
                        " returns");
    double seed_mean, seed_var;
    detail::mean_and_popvar(out.raw, 0, kSeed, seed_mean, seed_var);
    if (seed_var <= 0.0)
        throw DegenerateSeriesError(series.asset_id + ": zero variance in ewma seed window");
    double lambda = std::exp2(-1.0 / opt.ewma_half_life);
    out.sigma = std::numeric_limits<double>::quiet_NaN();
    out.sigma_series.resize(n);
    out.values.resize(n);
    double m = seed_mean, v = seed_var;
    for (std::size_t i = 0; i < n; ++i) {
        double sigma_t = std::sqrt(v);  // estimate from returns before i (seed for i < 12)
        if (!(sigma_t > opt.min_sigma) || !(sigma_t > 0.0))
            throw DegenerateSeriesError(series.asset_id + ": ewma sigma hit the floor at t=" +
                                        std::to_string(out.timestamps[i]));
        out.sigma_series[i] = sigma_t;
        double r = detail::clip_to(out.raw[i], out.mu - opt.clip_sigma * sigma_t,
                                   out.mu + opt.clip_sigma * sigma_t);
        out.values[i] = r / sigma_t;
        if (i >= kSeed) {  // returns before kSeed are already inside the seed variance
            double d = out.raw[i] - m;
            v = lambda * v + (1.0 - lambda) * d * d;
            m = lambda * m + (1.0 - lambda) * out.raw[i];
        }
    }
    return out;
}

/// Splits a minute series into per-session segments. The overnight return and
/// the first within-session return of each day are excluded from segments but
/// recorded in `excluded` in stream order, so segments plus exclusions remain
/// an order-preserving partition of the session return stream. Sessions left
/// with no returns are skipped (counted in skipped_sessions). Normalization
/// (population mu/sigma, clip) is estimated over the included returns only.
inline DaySplit split_trading_days(const PriceSeries& series, const SessionCalendar& calendar,
                                   double clip_sigma = 20.0) {
    if (series.frequency != Frequency::minute)
        throw ConfigError(series.asset_id + ": split_trading_days requires minute frequency");
    SessionWindow w = calendar.lookup(series.asset_id);

    DaySplit out;
    out.asset_id = series.asset_id;
    out.clip_sigma = clip_sigma;

    auto in_session = [&](std::int64_t ts) {
        int mod = static_cast<int>(ts % 1440);
        if (w.close_minute >= w.open_minute) return mod >= w.open_minute && mod < w.close_minute;
        return mod >= w.open_minute || mod < w.close_minute;  // wraps midnight
    };
    // minutes past midnight of a wrapping session belong to the day it opened
    auto session_day = [&](std::int64_t ts) {
        std::int64_t day = ts / 1440;
        if (w.close_minute < w.open_minute && static_cast<int>(ts % 1440) < w.close_minute) --day;
        return day;
    };

    // group session observations by session day, preserving order
    std::vector<std::pair<std::int64_t, std::vector<std::size_t>>> days;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!in_session(series.timestamps[i])) continue;
        std::int64_t day = session_day(series.timestamps[i]);
        if (days.empty() || days.back().first != day) days.push_back({day, {}});
        days.back().second.push_back(i);
    }

    bool have_prev = false;
    double prev_price = 0.0;
    for (const auto& [day, idx] : days) {
        TradingDaySegment seg;
        seg.asset_id = series.asset_id;
        seg.date = day;
        bool dropped_first = false;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            std::size_t i = idx[j];
            if (!have_prev) {
                have_prev = true;
                prev_price = series.prices[i];
                continue;
            }
            double r = std::log(series.prices[i] / prev_price);
            prev_price = series.prices[i];
            if (j == 0) {
                out.excluded.push_back({series.timestamps[i], r, ExcludedKind::overnight});
            } else if (!dropped_first) {
                out.excluded.push_back({series.timestamps[i], r, ExcludedKind::first_minute});
                dropped_first = true;
            } else {
                seg.timestamps.push_back(series.timestamps[i]);
                seg.raw.push_back(r);
            }
        }
        if (seg.raw.empty()) {
            ++out.skipped_sessions;
        } else {
            out.segments.push_back(std::move(seg));
        }
    }

    if (out.segments.empty()) return out;

    std::vector<double> all;
    for (const auto& seg : out.segments) all.insert(all.end(), seg.raw.begin(), seg.raw.end());
    double mean, var;
    detail::mean_and_popvar(all, 0, all.size(), mean, var);
    if (var <= 0.0)
        throw DegenerateSeriesError(series.asset_id + ": zero variance across sessions");
    out.mu = mean;
    out.sigma = std::sqrt(var);
    for (auto& seg : out.segments)
        seg.values = normalize_returns(seg.raw, out.mu, out.sigma, clip_sigma);
    return out;
}

}  // namespace trendlab
