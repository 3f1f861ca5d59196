#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trendlab/buckets.hpp"
#include "trendlab/common.hpp"
#include "trendlab/ingest.hpp"
#include "trendlab/panel_io.hpp"
#include "trendlab/pipeline.hpp"
#include "trendlab/presets.hpp"
#include "trendlab/regress.hpp"
#include "trendlab/report.hpp"
#include "trendlab/simulate.hpp"
#include "trendlab/trend.hpp"

namespace trendlab::cli {

struct Ctx {
    // common
    std::string out = ".";
    std::uint64_t seed = 0;
    bool json = false;
    // inputs
    std::string input;
    std::string panel_path;
    std::string sessions;
    std::string preset;
    std::string dataset;
    std::string fits;          // comma-separated scan outputs (report)
    std::string bucket_files;  // comma-separated bucket tables (report)
    // pipeline settings
    std::string frequency = "daily";
    std::string horizons;  // "k1..k2" grid indices
    std::string mode = "continuous";
    std::string model = "cubic";
    std::string features;  // comma list, overrides --model
    std::string subgroup;
    std::string session_window;
    std::string vol_mode = "full_sample";
    double ewma_half_life = 360.0;
    double clip_sigma = 20.0;
    double clip_phi = 2.5;
    double min_sigma = 0.0;
    double warmup = 5.0;
    int lag = 0;
    int folds = -1;      // -1: 15 daily, 12 otherwise
    int bootstrap = -1;  // -1: 5000 daily/minute, 500 monthly/yearly
    double t_threshold = -1.0;  // -1: 3 monthly/yearly, 2 otherwise
    int buckets_per_unit = 3;
    int k_max = 7;
    bool equal_asset_weight = false;
    bool keep_bootstrap = false;
    bool aggregate = false;
    bool gnuplot = false;
    bool recover = false;
    // simulate
    double sim_a = 0.0, sim_b = 0.0, sim_c = 0.0, sim_d = 0.0, sim_e = 0.0;
    double noise_sigma = 1.0, tick = 0.0, initial_price = 100.0, target_vol = 0.01;
    int sim_T = 32, n_assets = 1;
    std::int64_t intervals = 10000;
};

inline void warn(const std::string& msg) { std::cerr << "trendlab: warning: " << msg << "\n"; }

/// Deterministic resolved-config echo in the same format --config reads.
class Echo {
public:
    explicit Echo(const std::string& command) { lines_.push_back("[" + command + "]"); }
    template <typename T>
    void add(const std::string& key, const T& value) {
        std::ostringstream os;
        os << key << "=" << value;
        lines_.push_back(os.str());
    }
    void add(const std::string& key, double value) {
        lines_.push_back(key + "=" + format_double(value));
    }
    void add(const std::string& key, bool value) {
        lines_.push_back(key + "=" + (value ? "true" : "false"));
    }
    void write(const std::string& path) const {
        auto out = open_output(path);
        out << "# trendlab resolved configuration\n";
        for (const auto& l : lines_) out << l << '\n';
    }

private:
    std::vector<std::string> lines_;
};

namespace detail {

inline std::pair<int, int> parse_horizon_range(const std::string& text, Frequency freq) {
    auto range = grid_k_range(freq);
    if (text.empty()) return {range[0], range[1]};
    auto pos = text.find("..");
    if (pos == std::string::npos) {
        int k = static_cast<int>(parse_int(trim(text), "--horizons"));
        return {k, k};
    }
    int k1 = static_cast<int>(parse_int(trim(text.substr(0, pos)), "--horizons"));
    int k2 = static_cast<int>(parse_int(trim(text.substr(pos + 2)), "--horizons"));
    return {k1, k2};
}

inline ModelSpec model_from_ctx(const Ctx& ctx) {
    if (!ctx.features.empty()) {
        ModelSpec spec;
        for (const auto& f : split(ctx.features, ','))
            spec.features.push_back(feature_from_string(trim(f)));
        spec.validate();
        return spec;
    }
    return ModelSpec::named(ctx.model);
}

inline RowFilter filter_from_ctx(const Ctx& ctx) {
    RowFilter f;
    f.asset_prefix = ctx.subgroup;
    if (!ctx.session_window.empty()) {
        auto dash = ctx.session_window.find('-');
        if (dash == std::string::npos)
            throw ConfigError("--session-window expects HH:MM-HH:MM");
        f.session_lo = SessionCalendar::parse_clock(trim(ctx.session_window.substr(0, dash)),
                                                    "--session-window");
        f.session_hi = SessionCalendar::parse_clock(trim(ctx.session_window.substr(dash + 1)),
                                                    "--session-window");
    }
    return f;
}

inline ReturnOptions return_opt_from_ctx(const Ctx& ctx) {
    ReturnOptions opt;
    opt.vol_mode = ctx.vol_mode == "ewma" ? VolMode::ewma : VolMode::full_sample;
    if (ctx.vol_mode != "ewma" && ctx.vol_mode != "full_sample")
        throw ConfigError("--vol-mode must be full_sample or ewma");
    opt.ewma_half_life = ctx.ewma_half_life;
    opt.clip_sigma = ctx.clip_sigma;
    opt.min_sigma = ctx.min_sigma;
    return opt;
}

inline int default_folds(Frequency f) { return f == Frequency::daily ? 15 : 12; }

inline int default_bootstrap(Frequency f) {
    return (f == Frequency::daily || f == Frequency::minute) ? 5000 : 500;
}

inline std::string out_path(const Ctx& ctx, const std::string& name) {
    std::filesystem::create_directories(ctx.out);
    return (std::filesystem::path(ctx.out) / name).string();
}

/// Per-asset returns with the paper's exclusion rule: degenerate series are
/// dropped with a warning instead of aborting the run.
inline std::vector<NormalizedReturns> lenient_returns(const std::vector<PriceSeries>& prices,
                                                      const ReturnOptions& opt) {
    std::vector<NormalizedReturns> out;
    for (const auto& p : prices) {
        try {
            out.push_back(compute_returns(p, opt));
        } catch (const DegenerateSeriesError& e) {
            warn(std::string(e.what()) + " (asset excluded)");
        }
    }
    if (out.empty()) throw DataError("all assets excluded as degenerate");
    return out;
}

inline std::vector<DaySplit> lenient_splits(const std::vector<PriceSeries>& prices,
                                            const SessionCalendar& cal, double clip_sigma) {
    std::vector<DaySplit> out;
    for (const auto& p : prices) {
        try {
            DaySplit split = split_trading_days(p, cal, clip_sigma);
            if (split.skipped_sessions > 0)
                warn(p.asset_id + ": skipped " + std::to_string(split.skipped_sessions) +
                     " empty session(s)");
            if (split.segments.empty()) {
                warn(p.asset_id + ": no usable sessions (asset excluded)");
                continue;
            }
            out.push_back(std::move(split));
        } catch (const DegenerateSeriesError& e) {
            warn(std::string(e.what()) + " (asset excluded)");
        }
    }
    if (out.empty()) throw DataError("all assets excluded");
    return out;
}

struct BuiltPanel {
    Panel panel;
    std::optional<PanelSource> source;  // present when built from prices
};

inline BuiltPanel build_from_ctx(const Ctx& ctx) {
    BuiltPanel bp;
    if (!ctx.input.empty()) {
        Frequency freq = frequency_from_string(ctx.frequency);
        auto [k1, k2] = parse_horizon_range(ctx.horizons, freq);
        TrendConfig cfg = TrendConfig::for_grid(freq, k1, k2);
        cfg.clip_phi = ctx.clip_phi;
        cfg.warmup_multiplier = ctx.warmup;
        cfg.lag = ctx.lag;
        auto prices = load_price_csv(ctx.input, freq);
        if (ctx.mode == "day-by-day") {
            if (freq != Frequency::minute)
                throw ConfigError("day-by-day mode requires minute frequency");
            SessionCalendar cal;
            if (!ctx.sessions.empty()) cal = SessionCalendar::from_file(ctx.sessions);
            auto splits = lenient_splits(prices, cal, ctx.clip_sigma);
            bp.source = PanelSource::day_by_day(std::move(splits), cfg);
        } else if (ctx.mode == "continuous") {
            auto rets = lenient_returns(prices, return_opt_from_ctx(ctx));
            bp.source = PanelSource::continuous(std::move(rets), cfg, return_opt_from_ctx(ctx));
        } else {
            throw ConfigError("--mode must be day-by-day or continuous");
        }
        bp.panel = bp.source->build();
    } else if (!ctx.panel_path.empty()) {
        bp.panel = load_panel_csv(ctx.panel_path, "", frequency_from_string(ctx.frequency));
    } else {
        throw ConfigError("need --input (prices) or --panel (serialized panel)");
    }
    if (bp.panel.rows() == 0) throw DataError("panel is empty (series shorter than warmup?)");
    return bp;
}

inline Panel stack_columns(const Panel& panel, int k_lo, int k_hi) {
    std::vector<std::size_t> cols;
    for (std::size_t k = 0; k < panel.n_horizons(); ++k) {
        int kk = k < panel.k_indices.size() ? panel.k_indices[k] : static_cast<int>(k + 1);
        if (kk >= k_lo && kk <= k_hi) cols.push_back(k);
    }
    if (cols.empty()) throw ConfigError("no panel columns in the requested horizon range");
    if (cols.size() == panel.n_horizons()) return panel.stack_pairs();
    Panel sub = panel.header_copy();
    sub.horizons.clear();
    sub.k_indices.clear();
    for (std::size_t c : cols) {
        sub.horizons.push_back(panel.horizons[c]);
        sub.k_indices.push_back(panel.k_indices[c]);
    }
    sub.timestamps = panel.timestamps;
    sub.asset_index = panel.asset_index;
    sub.day_ids = panel.day_ids;
    sub.response = panel.response;
    for (std::size_t c : cols) sub.phi.push_back(panel.phi[c]);
    return sub.stack_pairs();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

inline int cmd_ingest(const Ctx& ctx) {
    Frequency freq = frequency_from_string(ctx.frequency);
    auto prices = load_price_csv(ctx.input, freq);
    ReturnOptions ropt = detail::return_opt_from_ctx(ctx);
    auto rets = detail::lenient_returns(prices, ropt);

    std::string csv_path = detail::out_path(ctx, "returns.csv");
    auto out = open_output(csv_path);
    out << "timestamp,asset,value,raw\n";
    for (const auto& r : rets)
        for (std::size_t i = 0; i < r.size(); ++i)
            out << r.timestamps[i] << ',' << r.asset_id << ',' << format_double(r.values[i]) << ','
                << format_double(r.raw[i]) << '\n';

    nlohmann::json meta;
    meta["frequency"] = to_string(freq);
    nlohmann::json assets = nlohmann::json::array();
    for (const auto& r : rets) {
        nlohmann::json a;
        a["id"] = r.asset_id;
        a["mu"] = r.mu;
        a["sigma"] = std::isnan(r.sigma) ? nlohmann::json() : nlohmann::json(r.sigma);
        a["vol_mode"] = to_string(r.vol_mode);
        a["clip_sigma"] = r.clip_sigma;
        a["n_returns"] = r.size();
        assets.push_back(a);
    }
    meta["assets"] = assets;
    {
        auto mf = open_output(csv_path + ".meta.json");
        mf << meta.dump(2) << '\n';
    }

    if (!ctx.sessions.empty()) {
        if (freq != Frequency::minute) throw ConfigError("--sessions requires minute frequency");
        SessionCalendar cal = SessionCalendar::from_file(ctx.sessions);
        nlohmann::json sess = nlohmann::json::array();
        for (const auto& p : prices) {
            DaySplit split = split_trading_days(p, cal, ctx.clip_sigma);
            nlohmann::json s;
            s["id"] = p.asset_id;
            s["sessions"] = split.segments.size();
            s["skipped_sessions"] = split.skipped_sessions;
            s["excluded_returns"] = split.excluded.size();
            sess.push_back(s);
        }
        auto sf = open_output(detail::out_path(ctx, "sessions_summary.json"));
        sf << sess.dump(2) << '\n';
    }

    Echo echo("ingest");
    echo.add("input", ctx.input);
    echo.add("frequency", ctx.frequency);
    echo.add("vol-mode", ctx.vol_mode);
    echo.add("ewma-half-life", ctx.ewma_half_life);
    echo.add("clip-sigma", ctx.clip_sigma);
    echo.add("min-sigma", ctx.min_sigma);
    if (!ctx.sessions.empty()) echo.add("sessions", ctx.sessions);
    echo.add("seed", ctx.seed);
    echo.add("out", ctx.out);
    echo.write(detail::out_path(ctx, "resolved_config.txt"));
    std::cout << "wrote " << csv_path << " (" << rets.size() << " assets)\n";
    return 0;
}

inline int cmd_trend(const Ctx& ctx) {
    detail::BuiltPanel bp = detail::build_from_ctx(ctx);
    std::vector<std::size_t> rows_per_asset(bp.panel.assets.size(), 0);
    for (std::size_t r = 0; r < bp.panel.rows(); ++r) ++rows_per_asset[bp.panel.asset_index[r]];
    for (std::size_t a = 0; a < rows_per_asset.size(); ++a)
        if (rows_per_asset[a] == 0)
            warn(bp.panel.assets[a].asset_id + ": series shorter than the warmup, no panel rows");
    std::string csv_path = detail::out_path(ctx, "panel.csv");
    write_panel_csv(csv_path, bp.panel);
    write_panel_meta(csv_path + ".meta.json", bp.panel);

    Echo echo("trend");
    echo.add("input", ctx.input);
    echo.add("frequency", ctx.frequency);
    echo.add("horizons", ctx.horizons.empty() ? "(full grid)" : ctx.horizons);
    echo.add("mode", ctx.mode);
    echo.add("lag", ctx.lag);
    echo.add("clip-phi", ctx.clip_phi);
    echo.add("warmup", ctx.warmup);
    echo.add("vol-mode", ctx.vol_mode);
    echo.add("ewma-half-life", ctx.ewma_half_life);
    echo.add("clip-sigma", ctx.clip_sigma);
    if (!ctx.sessions.empty()) echo.add("sessions", ctx.sessions);
    echo.add("seed", ctx.seed);
    echo.add("out", ctx.out);
    echo.write(detail::out_path(ctx, "resolved_config.txt"));
    std::cout << "wrote " << csv_path << " (" << bp.panel.rows() << " rows, "
              << bp.panel.n_horizons() << " horizons)\n";
    return 0;
}

inline int cmd_buckets(const Ctx& ctx) {
    if (ctx.panel_path.empty()) throw ConfigError("buckets needs --panel");
    Panel panel = load_panel_csv(ctx.panel_path, "", frequency_from_string(ctx.frequency));
    Panel stacked;
    if (!ctx.horizons.empty()) {
        auto [k1, k2] = detail::parse_horizon_range(ctx.horizons, panel.frequency);
        stacked = detail::stack_columns(panel, k1, k2);
    } else {
        stacked = panel.n_horizons() == 1 ? panel : panel.stack_pairs();
    }
    BucketStats stats = bucketize(stacked, ctx.buckets_per_unit, ctx.k_max);

    std::string path;
    if (ctx.json) {
        path = detail::out_path(ctx, "buckets.json");
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& p : bucket_curve(stats)) {
            nlohmann::json r;
            r["k"] = p.k;
            r["phi_lo"] = std::isinf(p.lo) ? nlohmann::json() : nlohmann::json(p.lo);
            r["phi_hi"] = std::isinf(p.hi) ? nlohmann::json() : nlohmann::json(p.hi);
            r["count"] = p.count;
            r["mean_phi"] = p.mean_phi;
            r["mean_response"] = p.mean_response;
            r["stderr"] = p.stderr_response;
            rows.push_back(r);
        }
        nlohmann::json doc;
        doc["buckets_per_unit"] = stats.buckets_per_unit;
        doc["k_max"] = stats.k_max;
        doc["stderr_convention"] = "naive iid";
        doc["rows"] = rows;
        auto f = open_output(path);
        f << doc.dump(2) << '\n';
    } else {
        path = detail::out_path(ctx, "buckets.csv");
        write_bucket_csv(path, stats);
    }

    Echo echo("buckets");
    echo.add("panel", ctx.panel_path);
    echo.add("buckets-per-unit", ctx.buckets_per_unit);
    echo.add("k-max", ctx.k_max);
    if (!ctx.horizons.empty()) echo.add("horizons", ctx.horizons);
    echo.add("json", ctx.json);
    echo.add("seed", ctx.seed);
    echo.add("out", ctx.out);
    echo.write(detail::out_path(ctx, "resolved_config.txt"));
    std::cout << "wrote " << path << "\n";
    return 0;
}

inline int cmd_regress(const Ctx& ctx) {
    detail::BuiltPanel bp = detail::build_from_ctx(ctx);
    ModelSpec spec = detail::model_from_ctx(ctx);
    RowFilter filter = detail::filter_from_ctx(ctx);
    if (filter.active()) {
        spec.grouping = Grouping::subgroup;
        spec.subgroup = !ctx.subgroup.empty() ? ctx.subgroup : ctx.session_window;
    }

    Panel working = ctx.aggregate ? aggregate_scales(bp.panel) : bp.panel;
    FitInput input{&working, working.n_horizons() == 1 ? 0 : -1, filter,
                   ctx.equal_asset_weight};
    std::size_t pairs = input.count_pairs();
    if (pairs <= 10 * spec.n_features())
        throw DataError("regress: " + std::to_string(pairs) + " rows is too few for " +
                        std::to_string(spec.n_features()) + " features (need > 10x)");

    BootstrapConfig bc;
    bc.n_samples = ctx.bootstrap > 0 ? ctx.bootstrap : detail::default_bootstrap(working.frequency);
    bc.seed = ctx.seed;
    bc.keep_samples = ctx.keep_bootstrap;
    FitResult fit = bootstrap(input, spec, bc);
    if (ctx.t_threshold > 0.0) fit.t_threshold = ctx.t_threshold;

    int folds = ctx.folds >= 0 ? ctx.folds : detail::default_folds(working.frequency);
    if (folds >= 2) {
        fit.n_folds = folds;
        if (bp.source) {
            fit.r2_adj_bp = cross_validate_source(*bp.source, spec, folds, -1, filter,
                                                  ctx.equal_asset_weight, ctx.aggregate);
            fit.cv_renormalized = true;
        } else {
            fit.r2_adj_bp = cross_validate(input, spec, folds);
            fit.cv_renormalized = false;
        }
    }

    std::string fit_path = detail::out_path(ctx, "fit.json");
    {
        auto f = open_output(fit_path);
        f << fit_to_json(fit).dump(2) << '\n';
    }
    if (ctx.keep_bootstrap)
        write_bootstrap_csv(detail::out_path(ctx, "bootstrap_samples.csv"), fit);

    Echo echo("regress");
    if (!ctx.input.empty()) echo.add("input", ctx.input);
    if (!ctx.panel_path.empty()) echo.add("panel", ctx.panel_path);
    echo.add("frequency", ctx.frequency);
    if (!ctx.horizons.empty()) echo.add("horizons", ctx.horizons);
    echo.add("mode", ctx.mode);
    echo.add("model", ctx.model);
    if (!ctx.features.empty()) echo.add("features", ctx.features);
    echo.add("bootstrap", bc.n_samples);
    echo.add("folds", folds);
    if (!ctx.subgroup.empty()) echo.add("subgroup", ctx.subgroup);
    if (!ctx.session_window.empty()) echo.add("session-window", ctx.session_window);
    echo.add("aggregate", ctx.aggregate);
    echo.add("equal-asset-weight", ctx.equal_asset_weight);
    echo.add("keep-bootstrap", ctx.keep_bootstrap);
    echo.add("t-threshold", fit.t_threshold);
    echo.add("lag", ctx.lag);
    echo.add("clip-phi", ctx.clip_phi);
    echo.add("vol-mode", ctx.vol_mode);
    echo.add("seed", ctx.seed);
    echo.add("out", ctx.out);
    echo.write(detail::out_path(ctx, "resolved_config.txt"));

    std::cout << "n_rows=" << fit.n_rows << " r2_bp=" << format_double(fit.r2_bp, 6);
    if (!std::isnan(fit.r2_adj_bp)) std::cout << " r2_adj_bp=" << format_double(fit.r2_adj_bp, 6);
    std::cout << "\n";
    for (std::size_t j = 0; j < fit.features.size(); ++j)
        std::cout << "  " << coef_name(fit.features[j]) << " = " << format_double(fit.values[j], 6)
                  << " +- " << format_double(fit.stderrs[j], 6)
                  << "  (t = " << format_double(fit.tstats[j], 4) << ")\n";
    std::cout << "wrote " << fit_path << "\n";
    return 0;
}

inline int cmd_scan(const Ctx& ctx) {
    detail::BuiltPanel bp = detail::build_from_ctx(ctx);
    RowFilter filter = detail::filter_from_ctx(ctx);
    ModelSpec base = detail::model_from_ctx(ctx);
    bool quintic_rule = ctx.features.empty() && ctx.model == "quintic";
    auto tmpl = [&](int k, int /*T*/) {
        ModelSpec spec = base;
        if (quintic_rule && k >= 7) {
            spec.features.erase(
                std::remove(spec.features.begin(), spec.features.end(), Feature::phi5),
                spec.features.end());
        }
        return spec;
    };

    BootstrapConfig bc;
    bc.n_samples =
        ctx.bootstrap > 0 ? ctx.bootstrap : detail::default_bootstrap(bp.panel.frequency);
    bc.seed = ctx.seed;
    auto fits = fit_by_horizon(bp.panel, tmpl, filter, bc, ctx.equal_asset_weight);
    if (ctx.t_threshold > 0.0)
        for (auto& hf : fits)
            if (hf.fit) hf.fit->t_threshold = ctx.t_threshold;

    std::string dataset = !ctx.dataset.empty()
                              ? ctx.dataset
                              : (bp.panel.frequency == Frequency::minute
                                     ? "intraday"
                                     : to_string(bp.panel.frequency));

    nlohmann::json jfits = nlohmann::json::array();
    for (const auto& hf : fits) {
        nlohmann::json j;
        j["T"] = hf.T;
        j["k"] = hf.k;
        if (hf.fit)
            j["fit"] = fit_to_json(*hf.fit);
        else
            j["error"] = hf.error;
        jfits.push_back(j);
    }
    nlohmann::json doc;
    doc["dataset"] = dataset;
    doc["frequency"] = to_string(bp.panel.frequency);
    doc["fits"] = jfits;
    std::string fits_path = detail::out_path(ctx, "fits.json");
    {
        auto f = open_output(fits_path);
        f << doc.dump(2) << '\n';
    }

    HorizonCurve curve = assemble_curve({{dataset, bp.panel.frequency, fits}});
    write_curve_csv(detail::out_path(ctx, "curve.csv"), curve);
    if (ctx.gnuplot) write_curve_gnuplot(detail::out_path(ctx, "curve.gnuplot"), curve);

    Echo echo("scan");
    if (!ctx.input.empty()) echo.add("input", ctx.input);
    if (!ctx.panel_path.empty()) echo.add("panel", ctx.panel_path);
    echo.add("frequency", ctx.frequency);
    echo.add("horizons", ctx.horizons.empty() ? "(full grid)" : ctx.horizons);
    echo.add("mode", ctx.mode);
    echo.add("model", ctx.model);
    echo.add("bootstrap", bc.n_samples);
    echo.add("dataset", dataset);
    echo.add("vol-mode", ctx.vol_mode);
    echo.add("seed", ctx.seed);
    echo.add("out", ctx.out);
    echo.write(detail::out_path(ctx, "resolved_config.txt"));

    int ok = 0;
    for (const auto& hf : fits)
        if (hf.fit)
            ++ok;
        else
            warn("horizon T=" + std::to_string(hf.T) + ": " + hf.error);
    std::cout << "wrote " << fits_path << " (" << ok << "/" << fits.size() << " horizons)\n";
    return 0;
}

inline int cmd_simulate(const Ctx& ctx, const std::function<bool(const std::string&)>& given) {
    SimConfig sc;
    ModelSpec model = detail::model_from_ctx(ctx);
    int bootstrap_samples = ctx.bootstrap;
    std::vector<Feature> checks;
    bool require_t2 = false;
    ReturnOptions ropt = detail::return_opt_from_ctx(ctx);
    std::optional<TrendConfig> grid;

    if (!ctx.preset.empty()) {
        Preset p = preset_by_name(ctx.preset);
        sc = p.sim;
        if (!given("--model") && ctx.features.empty()) model = p.model;
        if (bootstrap_samples <= 0) bootstrap_samples = p.bootstrap_samples;
        if (!given("--vol-mode")) ropt = p.return_opt;
        checks = p.check_features;
        require_t2 = p.require_t2;
        if (p.grid_k_lo > 0)
            grid = TrendConfig::for_grid(p.sim.frequency, p.grid_k_lo, p.grid_k_hi);
    }
    if (given("--a")) sc.a = ctx.sim_a;
    if (given("--b")) sc.b = ctx.sim_b;
    if (given("--c")) sc.c = ctx.sim_c;
    if (given("--d")) sc.d = ctx.sim_d;
    if (given("--e")) sc.e = ctx.sim_e;
    if (given("--T")) sc.T = ctx.sim_T;
    if (given("--assets")) sc.n_assets = ctx.n_assets;
    if (given("--intervals")) sc.n_intervals = ctx.intervals;
    if (given("--noise-sigma")) sc.noise_sigma = ctx.noise_sigma;
    if (given("--tick")) sc.tick_size = ctx.tick;
    if (given("--initial-price")) sc.initial_price = ctx.initial_price;
    if (given("--target-vol")) sc.target_vol = ctx.target_vol;
    if (given("--frequency") || ctx.preset.empty())
        sc.frequency = frequency_from_string(ctx.frequency);
    sc.clip_phi = ctx.clip_phi;
    sc.seed = ctx.seed;
    if (bootstrap_samples <= 0) bootstrap_samples = detail::default_bootstrap(sc.frequency);
    if (checks.empty()) {
        for (Feature f : model.features)
            if (f != Feature::constant) checks.push_back(f);
    }

    Echo echo("simulate");
    if (!ctx.preset.empty()) echo.add("preset", ctx.preset);
    echo.add("a", sc.a);
    echo.add("b", sc.b);
    echo.add("c", sc.c);
    echo.add("d", sc.d);
    echo.add("e", sc.e);
    echo.add("T", sc.T);
    echo.add("assets", sc.n_assets);
    echo.add("intervals", sc.n_intervals);
    echo.add("noise-sigma", sc.noise_sigma);
    echo.add("tick", sc.tick_size);
    echo.add("initial-price", sc.initial_price);
    echo.add("target-vol", sc.target_vol);
    echo.add("frequency", std::string(to_string(sc.frequency)));
    echo.add("clip-phi", sc.clip_phi);
    echo.add("recover", ctx.recover);
    echo.add("bootstrap", bootstrap_samples);
    echo.add("seed", ctx.seed);
    echo.add("out", ctx.out);
    echo.write(detail::out_path(ctx, "resolved_config.txt"));

    if (!ctx.recover) {
        auto prices = simulate_market(sc);
        std::string path = detail::out_path(ctx, "prices.csv");
        write_price_csv(path, prices);
        std::cout << "wrote " << path << " (" << prices.size() << " assets x "
                  << sc.n_intervals + 1 << " prices)\n";
        return 0;
    }

    RecoveryExperiment exp;
    exp.sim = sc;
    exp.return_opt = ropt;
    exp.model = model;
    exp.boot.n_samples = bootstrap_samples;
    exp.boot.seed = ctx.seed;
    exp.check_features = checks;
    exp.require_t2 = require_t2;
    exp.clip_phi = ctx.clip_phi;
    exp.warmup_multiplier = ctx.warmup;
    exp.panel_grid = grid;
    RecoveryReport report = run_recovery(exp);

    nlohmann::json checks_json = nlohmann::json::array();
    for (const auto& chk : report.checks) {
        nlohmann::json j;
        j["coef"] = coef_name(chk.feature);
        j["truth"] = chk.truth;
        j["estimate"] = chk.estimate;
        j["stderr"] = chk.stderr_value;
        j["t"] = chk.t_stat;
        j["within_2se"] = chk.within_2se;
        j["sign_ok"] = chk.sign_ok;
        j["t_ok"] = chk.t_ok;
        checks_json.push_back(j);
        std::printf("[recover] %s: truth=%+.6g est=%+.6g stderr=%.6g t=%+.3g %s\n",
                    coef_name(chk.feature), chk.truth, chk.estimate, chk.stderr_value, chk.t_stat,
                    (chk.within_2se && chk.sign_ok && chk.t_ok) ? "ok" : "FAIL");
    }
    nlohmann::json verdict;
    verdict["preset"] = ctx.preset;
    verdict["seed"] = ctx.seed;
    verdict["pass"] = report.pass;
    verdict["checks"] = checks_json;
    verdict["fit"] = fit_to_json(report.fit);
    if (report.pooled_fit) verdict["pooled_fit"] = fit_to_json(*report.pooled_fit);
    {
        auto f = open_output(detail::out_path(ctx, "verdict.json"));
        f << verdict.dump(2) << '\n';
    }
    std::cout << (report.pass ? "RECOVERY PASS" : "RECOVERY FAIL") << "\n";
    return report.pass ? 0 : 1;
}

inline int cmd_report(const Ctx& ctx) {
    if (ctx.fits.empty()) throw ConfigError("report needs --fits file1.json,file2.json");
    std::vector<TaggedFits> inputs;
    nlohmann::json all_fits = nlohmann::json::array();
    for (const auto& path : split(ctx.fits, ',')) {
        std::ifstream f(trim(path));
        if (!f) throw Error(trim(path) + ": cannot open");
        nlohmann::json doc = nlohmann::json::parse(f);
        TaggedFits tf;
        tf.dataset = doc.at("dataset").get<std::string>();
        tf.frequency = frequency_from_string(doc.at("frequency").get<std::string>());
        for (const auto& e : doc.at("fits")) {
            HorizonFit hf;
            hf.T = e.at("T").get<int>();
            hf.k = e.value("k", 0);
            if (e.contains("fit")) {
                hf.fit = fit_from_json(e.at("fit"));
                all_fits.push_back(e.at("fit"));
            } else {
                hf.error = e.value("error", "unknown");
            }
            tf.fits.push_back(std::move(hf));
        }
        inputs.push_back(std::move(tf));
    }

    HorizonCurve curve = assemble_curve(inputs);
    std::string curve_path = detail::out_path(ctx, "curve.csv");
    write_curve_csv(curve_path, curve);
    if (ctx.gnuplot) write_curve_gnuplot(detail::out_path(ctx, "curve.gnuplot"), curve);

    nlohmann::json buckets = nlohmann::json::array();
    if (!ctx.bucket_files.empty()) {
        for (const auto& raw_path : split(ctx.bucket_files, ',')) {
            std::string path = trim(raw_path);
            std::ifstream f(path);
            if (!f) throw Error(path + ": cannot open");
            if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
                buckets.push_back(nlohmann::json::parse(f));
            } else {
                // bucket CSV k,phi_lo,phi_hi,count,mean_phi,mean_response,stderr
                nlohmann::json rows = nlohmann::json::array();
                std::string line;
                std::getline(f, line);  // header
                while (std::getline(f, line)) {
                    if (trim(line).empty()) continue;
                    auto fields = split(line, ',');
                    if (fields.size() != 7) throw ParseError(path + ": bad bucket row");
                    nlohmann::json r;
                    r["k"] = parse_int(fields[0], path);
                    r["phi_lo"] = parse_double(fields[1], path);
                    r["phi_hi"] = parse_double(fields[2], path);
                    r["count"] = parse_int(fields[3], path);
                    r["mean_phi"] = parse_double(fields[4], path);
                    r["mean_response"] = parse_double(fields[5], path);
                    r["stderr"] = parse_double(fields[6], path);
                    rows.push_back(r);
                }
                nlohmann::json doc;
                doc["source"] = path;
                doc["rows"] = rows;
                buckets.push_back(doc);
            }
        }
    }

    nlohmann::json bundle;
    bundle["curve"] = curve_to_json(curve);
    bundle["fits"] = all_fits;
    bundle["buckets"] = buckets;
    {
        auto f = open_output(detail::out_path(ctx, "bundle.json"));
        f << bundle.dump(2) << '\n';
    }

    Echo echo("report");
    echo.add("fits", ctx.fits);
    if (!ctx.bucket_files.empty()) echo.add("buckets", ctx.bucket_files);
    echo.add("gnuplot", ctx.gnuplot);
    echo.add("seed", ctx.seed);
    echo.add("out", ctx.out);
    echo.write(detail::out_path(ctx, "resolved_config.txt"));
    std::cout << "wrote " << curve_path << " (" << curve.points.size() << " points)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// argument wiring
// ---------------------------------------------------------------------------

inline void add_common(CLI::App* cmd, Ctx& ctx) {
    cmd->add_option("--out", ctx.out, "Output directory");
    cmd->add_option("--seed", ctx.seed, "Random seed (echoed in the resolved config)");
    cmd->add_flag("--json", ctx.json, "JSON output variant where applicable");
}

inline void add_pipeline(CLI::App* cmd, Ctx& ctx, bool with_panel) {
    cmd->add_option("--input", ctx.input, "Price CSV (timestamp,asset,price)");
    if (with_panel) cmd->add_option("--panel", ctx.panel_path, "Serialized panel CSV");
    cmd->add_option("--frequency", ctx.frequency, "minute|daily|monthly|yearly");
    cmd->add_option("--horizons", ctx.horizons, "Grid index range k1..k2");
    cmd->add_option("--mode", ctx.mode, "day-by-day|continuous");
    cmd->add_option("--lag", ctx.lag, "Extra intervals between trend and response");
    cmd->add_option("--clip-phi", ctx.clip_phi, "Trend strength ceiling/floor");
    cmd->add_option("--warmup", ctx.warmup, "Warmup multiplier (continuous mode)");
    cmd->add_option("--sessions", ctx.sessions, "Session calendar file (asset=HH:MM-HH:MM)");
    cmd->add_option("--vol-mode", ctx.vol_mode, "full_sample|ewma");
    cmd->add_option("--ewma-half-life", ctx.ewma_half_life, "EWMA half-life in intervals");
    cmd->add_option("--clip-sigma", ctx.clip_sigma, "Return clip in standard deviations");
    cmd->add_option("--min-sigma", ctx.min_sigma, "Exclude assets with sigma below this floor");
}

inline void add_model(CLI::App* cmd, Ctx& ctx) {
    cmd->add_option("--model", ctx.model, "linear|cubic|quintic|general");
    cmd->add_option("--features", ctx.features,
                    "Comma list of const,phi,phi2,phi3,phi4,phi5,sign_phi (overrides --model)");
    cmd->add_option("--bootstrap", ctx.bootstrap, "Bootstrap samples");
    cmd->add_option("--folds", ctx.folds, "Cross-validation folds");
    cmd->add_option("--subgroup", ctx.subgroup, "Asset-id prefix filter");
    cmd->add_option("--session-window", ctx.session_window, "Minute-of-day window HH:MM-HH:MM");
    cmd->add_option("--t-threshold", ctx.t_threshold,
                    "Significance flag threshold (default 3 monthly/yearly, 2 otherwise)");
    cmd->add_flag("--equal-asset-weight", ctx.equal_asset_weight,
                  "Weight assets equally instead of by row count");
}

inline int run(std::vector<std::string> args) {
    Ctx ctx;
    CLI::App app{"trendlab: trend persistence and reversion measurement pipeline"};
    app.fallthrough();
    app.set_config("--config", "", "Plain-text key-value config (sections per subcommand)");
    app.require_subcommand(1);
    int rc = 0;

    auto* ingest = app.add_subcommand("ingest", "Load prices, compute normalized returns");
    add_common(ingest, ctx);
    add_pipeline(ingest, ctx, false);

    auto* trend = app.add_subcommand("trend", "Build the trend-strength panel (Table-2 layout)");
    add_common(trend, ctx);
    add_pipeline(trend, ctx, false);

    auto* buckets = app.add_subcommand("buckets", "Bucket statistics of next-interval returns");
    add_common(buckets, ctx);
    buckets->add_option("--panel", ctx.panel_path, "Serialized panel CSV")->required();
    buckets->add_option("--frequency", ctx.frequency, "Fallback frequency when no sidecar");
    buckets->add_option("--horizons", ctx.horizons, "Grid index range to pool");
    buckets->add_option("--buckets-per-unit", ctx.buckets_per_unit, "3 or 5");
    buckets->add_option("--k-max", ctx.k_max, "Outermost bucket index");

    auto* regress = app.add_subcommand("regress", "Polynomial fit with bootstrap errors and CV");
    add_common(regress, ctx);
    add_pipeline(regress, ctx, true);
    add_model(regress, ctx);
    regress->add_flag("--aggregate", ctx.aggregate,
                      "Replace the K trend strengths by their equally-weighted mean");
    regress->add_flag("--keep-bootstrap", ctx.keep_bootstrap,
                      "Export the bootstrap coefficient distribution CSV");

    auto* scan = app.add_subcommand("scan", "Per-horizon fits, rescaled coefficient curve");
    add_common(scan, ctx);
    add_pipeline(scan, ctx, true);
    add_model(scan, ctx);
    scan->add_option("--dataset", ctx.dataset, "Dataset tag for the curve");
    scan->add_flag("--gnuplot", ctx.gnuplot, "Also write a gnuplot-friendly curve file");

    auto* simulate = app.add_subcommand("simulate", "Synthetic market generator / recovery check");
    add_common(simulate, ctx);
    simulate->add_option("--preset", ctx.preset,
                         "table3|table5|table6|table8-short|table8-long|table9");
    simulate->add_option("--a", ctx.sim_a, "Risk premium per interval");
    simulate->add_option("--b", ctx.sim_b, "Linear (persistence) coefficient");
    simulate->add_option("--c", ctx.sim_c, "Cubic (reversion) coefficient");
    simulate->add_option("--d", ctx.sim_d, "Quintic coefficient");
    simulate->add_option("--e", ctx.sim_e, "sign(phi) coefficient");
    simulate->add_option("--T", ctx.sim_T, "Driving trend horizon (native intervals)");
    simulate->add_option("--assets", ctx.n_assets, "Number of assets");
    simulate->add_option("--intervals", ctx.intervals, "Returns per asset");
    simulate->add_option("--noise-sigma", ctx.noise_sigma, "Noise standard deviation");
    simulate->add_option("--tick", ctx.tick, "Round prices to this tick size (0 = off)");
    simulate->add_option("--initial-price", ctx.initial_price, "Starting price");
    simulate->add_option("--target-vol", ctx.target_vol, "Per-interval log-return scale");
    simulate->add_option("--frequency", ctx.frequency, "Output frequency tag");
    simulate->add_option("--clip-phi", ctx.clip_phi, "Trend clip inside the drift");
    simulate->add_option("--warmup", ctx.warmup, "Warmup multiplier for the recovery panel");
    simulate->add_option("--model", ctx.model, "Recovery fit model");
    simulate->add_option("--features", ctx.features, "Recovery fit features");
    simulate->add_option("--bootstrap", ctx.bootstrap, "Bootstrap samples for recovery");
    simulate->add_option("--vol-mode", ctx.vol_mode, "Recovery normalization mode");
    simulate->add_option("--ewma-half-life", ctx.ewma_half_life, "EWMA half-life in intervals");
    simulate->add_flag("--recover", ctx.recover,
                       "Run the end-to-end recovery experiment and print a verdict");

    auto* report = app.add_subcommand("report", "Assemble multi-dataset coefficient curves");
    add_common(report, ctx);
    report->add_option("--fits", ctx.fits, "Comma-separated scan fits.json files")->required();
    report->add_option("--buckets", ctx.bucket_files, "Comma-separated bucket tables to bundle");
    report->add_flag("--gnuplot", ctx.gnuplot, "Also write a gnuplot-friendly curve file");

    std::vector<const char*> argv;
    argv.push_back("trendlab");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;  // usage error
    }

    // dispatch after parsing so flag errors always win over stage errors
    try {
        if (ingest->parsed()) rc = cmd_ingest(ctx);
        if (trend->parsed()) rc = cmd_trend(ctx);
        if (buckets->parsed()) rc = cmd_buckets(ctx);
        if (regress->parsed()) rc = cmd_regress(ctx);
        if (scan->parsed()) rc = cmd_scan(ctx);
        if (simulate->parsed())
            rc = cmd_simulate(
                ctx, [&](const std::string& name) { return simulate->count(name) > 0; });
        if (report->parsed()) rc = cmd_report(ctx);
    } catch (const Error& e) {
        std::cerr << "trendlab: error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "trendlab: error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args));
}

}  // namespace trendlab::cli
