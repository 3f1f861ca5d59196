#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trendlab/common.hpp"
#include "trendlab/csvio.hpp"
#include "trendlab/leastsq.hpp"
#include "trendlab/rng.hpp"
#include "trendlab/trend.hpp"

namespace trendlab {

enum class Feature { constant, phi, phi2, phi3, phi4, phi5, sign_phi };

inline const char* feature_name(Feature f) {
    switch (f) {
        case Feature::constant: return "const";
        case Feature::phi: return "phi";
        case Feature::phi2: return "phi2";
        case Feature::phi3: return "phi3";
        case Feature::phi4: return "phi4";
        case Feature::phi5: return "phi5";
        case Feature::sign_phi: return "sign_phi";
    }
    return "?";
}

/// Coefficient letter as the tables name them: a, b, c2, c, c4, d, e.
inline const char* coef_name(Feature f) {
    switch (f) {
        case Feature::constant: return "a";
        case Feature::phi: return "b";
        case Feature::phi2: return "c2";
        case Feature::phi3: return "c";
        case Feature::phi4: return "c4";
        case Feature::phi5: return "d";
        case Feature::sign_phi: return "e";
    }
    return "?";
}

inline Feature feature_from_string(const std::string& s) {
    if (s == "const") return Feature::constant;
    if (s == "phi") return Feature::phi;
    if (s == "phi2") return Feature::phi2;
    if (s == "phi3") return Feature::phi3;
    if (s == "phi4") return Feature::phi4;
    if (s == "phi5") return Feature::phi5;
    if (s == "sign_phi" || s == "sign") return Feature::sign_phi;
    throw ConfigError("unknown feature '" + s + "'");
}

inline double eval_feature(Feature f, double phi) {
    switch (f) {
        case Feature::constant: return 1.0;
        case Feature::phi: return phi;
        case Feature::phi2: return phi * phi;
        case Feature::phi3: return phi * phi * phi;
        case Feature::phi4: return (phi * phi) * (phi * phi);
        case Feature::phi5: return (phi * phi) * (phi * phi) * phi;
        case Feature::sign_phi: return phi > 0.0 ? 1.0 : (phi < 0.0 ? -1.0 : 0.0);
    }
    return 0.0;
}

/// Default significance threshold: |t| >= 3 for the noisy long histories,
/// |t| >= 2 elsewhere.
inline double default_t_threshold(Frequency f) {
    return (f == Frequency::monthly || f == Frequency::yearly) ? 3.0 : 2.0;
}

enum class Grouping { pooled, per_horizon, subgroup };

inline const char* to_string(Grouping g) {
    switch (g) {
        case Grouping::pooled: return "pooled";
        case Grouping::per_horizon: return "per_horizon";
        case Grouping::subgroup: return "subgroup";
    }
    return "?";
}

struct ModelSpec {
    std::vector<Feature> features;
    Grouping grouping = Grouping::pooled;
    std::string subgroup;  // label only; the predicate lives in RowFilter

    ModelSpec() = default;
    ModelSpec(std::vector<Feature> f, Grouping g = Grouping::pooled)
        : features(std::move(f)), grouping(g) {}

    std::size_t n_features() const { return features.size(); }

    void validate() const {
        if (features.empty()) throw ConfigError("model has no features");
        if (std::find(features.begin(), features.end(), Feature::constant) == features.end())
            throw ConfigError("model must include the constant feature");
        for (std::size_t i = 0; i < features.size(); ++i)
            for (std::size_t j = i + 1; j < features.size(); ++j)
                if (features[i] == features[j]) throw ConfigError("duplicate feature in model");
    }

    std::vector<std::string> feature_names() const {
        std::vector<std::string> out;
        for (Feature f : features) out.push_back(feature_name(f));
        return out;
    }

    static ModelSpec linear() { return {{Feature::constant, Feature::phi}}; }
    static ModelSpec cubic() { return {{Feature::constant, Feature::phi, Feature::phi3}}; }
    static ModelSpec quintic() {
        return {{Feature::constant, Feature::phi, Feature::phi3, Feature::phi5,
                 Feature::sign_phi}};
    }
    static ModelSpec general() {
        return {{Feature::constant, Feature::phi, Feature::phi2, Feature::phi3, Feature::phi4,
                 Feature::phi5, Feature::sign_phi}};
    }

    static ModelSpec named(const std::string& name) {
        if (name == "linear") return linear();
        if (name == "cubic") return cubic();
        if (name == "quintic") return quintic();
        if (name == "general") return general();
        throw ConfigError("unknown model '" + name + "' (linear|cubic|quintic|general)");
    }
};

/// Row predicate for subgroup fits: restrict by asset-id prefix and/or a
/// minute-of-day session window (half-open, may wrap midnight).
struct RowFilter {
    std::string asset_prefix;
    int session_lo = -1;
    int session_hi = -1;

    bool active() const { return !asset_prefix.empty() || session_lo >= 0; }

    bool pass(const Panel& panel, std::size_t row) const {
        if (!asset_prefix.empty()) {
            const std::string& id = panel.assets[panel.asset_index[row]].asset_id;
            if (id.size() < asset_prefix.size() ||
                id.compare(0, asset_prefix.size(), asset_prefix) != 0)
                return false;
        }
        if (session_lo >= 0) {
            int mod = static_cast<int>(((panel.timestamps[row] % 1440) + 1440) % 1440);
            bool in = session_lo <= session_hi ? (mod >= session_lo && mod < session_hi)
                                               : (mod >= session_lo || mod < session_hi);
            if (!in) return false;
        }
        return true;
    }
};

/// A fit's data source: a panel, an optional single horizon column (-1 stacks
/// all columns into pooled pairs), a row filter, and optional equal-asset
/// weighting (each asset contributes the same total weight).
struct FitInput {
    const Panel* panel = nullptr;
    int column = -1;
    RowFilter filter;
    bool equal_asset_weight = false;

    /// f(phi, y, day_id, asset_idx, weight) per (row, horizon) pair.
    template <typename F>
    void for_each(F&& f) const {
        const Panel& p = *panel;
        std::vector<double> w = weights();
        std::size_t k_lo = column < 0 ? 0 : static_cast<std::size_t>(column);
        std::size_t k_hi = column < 0 ? p.n_horizons() : static_cast<std::size_t>(column) + 1;
        for (std::size_t r = 0; r < p.rows(); ++r) {
            if (filter.active() && !filter.pass(p, r)) continue;
            std::int64_t day = p.day_of_row(r);
            std::uint32_t a = p.asset_index[r];
            for (std::size_t k = k_lo; k < k_hi; ++k) f(p.phi[k][r], p.response[r], day, a, w[a]);
        }
    }

    std::size_t count_pairs() const {
        std::size_t n = 0;
        for_each([&](double, double, std::int64_t, std::uint32_t, double) { ++n; });
        return n;
    }

    std::vector<double> weights() const {
        const Panel& p = *panel;
        std::vector<double> w(p.assets.size(), 1.0);
        if (!equal_asset_weight) return w;
        std::vector<std::size_t> rows_per_asset(p.assets.size(), 0);
        for (std::size_t r = 0; r < p.rows(); ++r) {
            if (filter.active() && !filter.pass(p, r)) continue;
            ++rows_per_asset[p.asset_index[r]];
        }
        for (std::size_t a = 0; a < w.size(); ++a)
            w[a] = rows_per_asset[a] ? 1.0 / static_cast<double>(rows_per_asset[a]) : 0.0;
        return w;
    }
};

struct FitResult {
    std::vector<Feature> features;
    std::vector<double> values;
    std::vector<double> stderrs;  // NaN until a bootstrap fills them
    std::vector<double> tstats;   // value / bootstrap stderr
    double r2_bp = std::numeric_limits<double>::quiet_NaN();
    double r2_adj_bp = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_rows = 0;
    Grouping grouping = Grouping::pooled;
    std::string subgroup;
    std::uint64_t seed = 0;
    int n_bootstrap = 0;
    int n_folds = 0;
    double t_threshold = 2.0;  // 3 is the long-history (monthly/yearly) default
    bool cv_renormalized = false;
    int horizon_T = 0;  // 0 = pooled across horizons
    int horizon_k = 0;
    Frequency frequency = Frequency::daily;
    bool rescaled = false;
    std::vector<std::vector<double>> bootstrap_samples;  // [replicate][coef], optional

    double value_of(Feature f) const {
        for (std::size_t i = 0; i < features.size(); ++i)
            if (features[i] == f) return values[i];
        throw Error(std::string("fit has no feature ") + feature_name(f));
    }
    double stderr_of(Feature f) const {
        for (std::size_t i = 0; i < features.size(); ++i)
            if (features[i] == f) return stderrs[i];
        throw Error(std::string("fit has no feature ") + feature_name(f));
    }
    double t_of(Feature f) const {
        for (std::size_t i = 0; i < features.size(); ++i)
            if (features[i] == f) return tstats[i];
        throw Error(std::string("fit has no feature ") + feature_name(f));
    }
    bool has_feature(Feature f) const {
        return std::find(features.begin(), features.end(), f) != features.end();
    }
};

namespace detail {

inline void eval_row(const ModelSpec& spec, double phi, double* out) {
    for (std::size_t j = 0; j < spec.features.size(); ++j)
        out[j] = eval_feature(spec.features[j], phi);
}

}  // namespace detail

/// Pooled least squares of the next-interval return on the phi features.
/// Uses the streaming orthogonal factorization; in-sample R^2 in basis points.
/// Throws SingularFitError on rank deficiency, naming the offending feature.
inline FitResult ols_fit(const FitInput& input, const ModelSpec& spec) {
    spec.validate();
    std::size_t p = spec.n_features();
    StreamingQr qr(p);
    std::vector<double> x(p);
    double sum_w = 0.0, sum_wy = 0.0, sum_wyy = 0.0;
    std::size_t n = 0;
    input.for_each([&](double phi, double y, std::int64_t, std::uint32_t, double w) {
        detail::eval_row(spec, phi, x.data());
        double sw = std::sqrt(w);
        for (std::size_t j = 0; j < p; ++j) x[j] *= sw;
        qr.add_row(x.data(), sw * y);
        sum_w += w;
        sum_wy += w * y;
        sum_wyy += w * y * y;
        ++n;
    });
    if (n < p + 1) throw DataError("ols_fit: " + std::to_string(n) + " rows cannot identify " +
                                   std::to_string(p) + " coefficients");
    Eigen::VectorXd beta = qr.solve(spec.feature_names());
    double sse = qr.sse();
    double mean_y = sum_wy / sum_w;
    double sst = sum_wyy - sum_w * mean_y * mean_y;

    FitResult fit;
    fit.features = spec.features;
    fit.grouping = spec.grouping;
    fit.subgroup = spec.subgroup;
    fit.n_rows = n;
    fit.values.assign(beta.data(), beta.data() + p);
    fit.stderrs.assign(p, std::numeric_limits<double>::quiet_NaN());
    fit.tstats.assign(p, std::numeric_limits<double>::quiet_NaN());
    fit.r2_bp = sst > 0.0 ? std::max(0.0, 1.0 - sse / sst) * 1e4 : 0.0;
    if (input.panel) {
        fit.frequency = input.panel->frequency;
        if (input.column >= 0) {
            fit.horizon_T = input.panel->horizons[input.column];
            fit.horizon_k =
                input.column < static_cast<int>(input.panel->k_indices.size())
                    ? input.panel->k_indices[input.column]
                    : 0;
        }
    }
    return fit;
}

struct BootstrapConfig {
    int n_samples = 5000;  // 500 is the monthly-data default
    std::uint64_t seed = 0;
    bool keep_samples = false;

    void validate() const {
        if (n_samples < 2)
            throw ConfigError("bootstrap needs at least 2 samples (stderr undefined for " +
                              std::to_string(n_samples) + ")");
    }
};

namespace detail {

struct DayStats {
    std::vector<std::int64_t> day_ids;  // sorted distinct
    std::vector<NormalEq> stats;        // one per day
    NormalEq total;
    std::size_t n_pairs = 0;
};

inline DayStats accumulate_day_stats(const FitInput& input, const ModelSpec& spec) {
    DayStats ds;
    std::size_t p = spec.n_features();
    ds.total = NormalEq(p);
    std::map<std::int64_t, std::size_t> index;
    std::vector<double> x(p);
    input.for_each([&](double phi, double y, std::int64_t day, std::uint32_t, double w) {
        auto [it, inserted] = index.try_emplace(day, ds.stats.size());
        if (inserted) {
            ds.stats.emplace_back(p);
            ds.day_ids.push_back(day);
        }
        eval_row(spec, phi, x.data());
        ds.stats[it->second].add_row(x.data(), y, w);
        ds.total.add_row(x.data(), y, w);
        ++ds.n_pairs;
    });
    // map iteration put day_ids in insertion order; panels are time-ordered so
    // this is already sorted, but enforce it for filtered/stacked inputs
    std::vector<std::size_t> order(ds.day_ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ds.day_ids[a] < ds.day_ids[b]; });
    std::vector<std::int64_t> ids_sorted(order.size());
    std::vector<NormalEq> stats_sorted(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        ids_sorted[i] = ds.day_ids[order[i]];
        stats_sorted[i] = std::move(ds.stats[order[i]]);
    }
    ds.day_ids = std::move(ids_sorted);
    ds.stats = std::move(stats_sorted);
    return ds;
}

}  // namespace detail

/// Day bootstrap: resample whole days with replacement (the same day sample
/// for every asset and horizon in the input), refit per sample from per-day
/// sufficient statistics, and report the empirical stderr and t per
/// coefficient. Replicate r draws from a counter-based stream (seed, r), so
/// the result is identical for any worker count.
inline FitResult bootstrap(const FitInput& input, const ModelSpec& spec,
                           const BootstrapConfig& cfg) {
    spec.validate();
    cfg.validate();
    FitResult fit = ols_fit(input, spec);  // headline coefficients via QR
    fit.seed = cfg.seed;
    fit.n_bootstrap = cfg.n_samples;
    if (input.panel) fit.t_threshold = default_t_threshold(input.panel->frequency);

    detail::DayStats ds = detail::accumulate_day_stats(input, spec);
    std::size_t n_days = ds.day_ids.size();
    if (n_days < 30)
        throw DataError("bootstrap: need at least 30 distinct days, have " +
                        std::to_string(n_days));

    std::size_t p = spec.n_features();
    std::size_t R = static_cast<std::size_t>(cfg.n_samples);
    std::vector<std::vector<double>> samples(R);
    parallel_for(R, [&](std::size_t r) {
        Rng rng(cfg.seed, r);
        NormalEq acc(p);
        for (std::size_t d = 0; d < n_days; ++d)
            acc.add(ds.stats[rng.next_below(n_days)]);
        Eigen::VectorXd beta;
        if (acc.solve(beta))
            samples[r].assign(beta.data(), beta.data() + p);
    });

    for (std::size_t j = 0; j < p; ++j) {
        double sum = 0.0, n_valid = 0.0;
        for (const auto& s : samples)
            if (!s.empty()) {
                sum += s[j];
                n_valid += 1.0;
            }
        if (n_valid < 2.0) throw DataError("bootstrap: fewer than 2 solvable replicates");
        double mean = sum / n_valid;
        double ss = 0.0;
        for (const auto& s : samples)
            if (!s.empty()) {
                double d = s[j] - mean;
                ss += d * d;
            }
        fit.stderrs[j] = std::sqrt(ss / (n_valid - 1.0));
        fit.tstats[j] = fit.values[j] / fit.stderrs[j];
    }
    if (cfg.keep_samples) fit.bootstrap_samples = std::move(samples);
    return fit;
}

/// Bootstrap coefficient distribution (Fig. 2 right): sample,<a,b,c,...>.
inline void write_bootstrap_csv(const std::string& path, const FitResult& fit) {
    if (fit.bootstrap_samples.empty())
        throw Error("no bootstrap samples retained (keep_samples was off)");
    auto out = open_output(path);
    out << "sample";
    for (Feature f : fit.features) out << ',' << coef_name(f);
    out << '\n';
    for (std::size_t r = 0; r < fit.bootstrap_samples.size(); ++r) {
        out << r;
        if (fit.bootstrap_samples[r].empty()) {
            for (std::size_t j = 0; j < fit.features.size(); ++j) out << ',';
        } else {
            for (double v : fit.bootstrap_samples[r]) out << ',' << format_double(v);
        }
        out << '\n';
    }
}

/// Contiguous-day blocks for k-fold CV: distinct days in time order, split as
/// evenly as possible.
inline std::vector<std::vector<std::int64_t>> contiguous_day_folds(
    const std::vector<std::int64_t>& sorted_days, int k_folds) {
    if (k_folds < 2) throw ConfigError("cross-validation needs k >= 2 folds");
    std::size_t n = sorted_days.size();
    if (n < static_cast<std::size_t>(k_folds))
        throw DataError("cross-validation: fewer distinct days than folds");
    std::vector<std::vector<std::int64_t>> folds(k_folds);
    for (int f = 0; f < k_folds; ++f) {
        std::size_t lo = n * static_cast<std::size_t>(f) / k_folds;
        std::size_t hi = n * static_cast<std::size_t>(f + 1) / k_folds;
        folds[f].assign(sorted_days.begin() + lo, sorted_days.begin() + hi);
    }
    return folds;
}

/// Panel-only cross-validation: contiguous day-block folds, refit on the
/// remaining days, out-of-sample R^2 pooled over folds (basis points, may be
/// negative). mu/sigma are NOT re-estimated per fold here -- that variant
/// needs the raw returns and lives in pipeline.hpp.
inline double cross_validate(const FitInput& input, const ModelSpec& spec, int k_folds) {
    spec.validate();
    std::size_t p = spec.n_features();
    detail::DayStats ds = detail::accumulate_day_stats(input, spec);
    auto folds = contiguous_day_folds(ds.day_ids, k_folds);

    std::map<std::int64_t, int> fold_of_day;
    for (int f = 0; f < k_folds; ++f)
        for (std::int64_t d : folds[f]) fold_of_day[d] = f;

    // training stats per fold = total - fold days
    std::vector<NormalEq> fold_sums(k_folds, NormalEq(p));
    std::vector<double> fold_pairs(k_folds, 0.0);
    for (std::size_t i = 0; i < ds.day_ids.size(); ++i) {
        int f = fold_of_day[ds.day_ids[i]];
        fold_sums[f].add(ds.stats[i]);
        fold_pairs[f] += ds.stats[i].n;
    }
    std::vector<Eigen::VectorXd> betas(k_folds);
    for (int f = 0; f < k_folds; ++f) {
        if (fold_pairs[f] < static_cast<double>(p))
            throw DataError("cross-validation: fold " + std::to_string(f) + " has fewer rows (" +
                            std::to_string(static_cast<long>(fold_pairs[f])) +
                            ") than features");
        NormalEq train(p);
        train.add(ds.total);
        train.add(fold_sums[f], -1.0);
        if (!train.solve(betas[f]))
            throw SingularFitError("fold " + std::to_string(f) + " training fit");
    }

    double sse = 0.0, sum_w = 0.0, sum_wy = 0.0, sum_wyy = 0.0;
    std::vector<double> x(p);
    input.for_each([&](double phi, double y, std::int64_t day, std::uint32_t, double w) {
        const Eigen::VectorXd& beta = betas[fold_of_day[day]];
        detail::eval_row(spec, phi, x.data());
        double pred = 0.0;
        for (std::size_t j = 0; j < p; ++j) pred += beta(static_cast<Eigen::Index>(j)) * x[j];
        double res = y - pred;
        sse += w * res * res;
        sum_w += w;
        sum_wy += w * y;
        sum_wyy += w * y * y;
    });
    double mean_y = sum_wy / sum_w;
    double sst = sum_wyy - sum_w * mean_y * mean_y;
    if (!(sst > 0.0)) throw DataError("cross-validation: zero response variance");
    return (1.0 - sse / sst) * 1e4;
}

/// One predictor per (timestamp, asset): the equally-weighted mean of the K
/// trend strengths; response unchanged. No re-normalization -- the regression
/// coefficient absorbs the scale.
inline Panel aggregate_scales(const Panel& panel) {
    if (panel.n_horizons() < 2)
        throw ConfigError("aggregate_scales: panel has fewer than 2 horizons");
    Panel out = panel.header_copy();
    out.horizons = {0};
    out.k_indices = {0};
    out.timestamps = panel.timestamps;
    out.asset_index = panel.asset_index;
    out.day_ids = panel.day_ids;
    out.response = panel.response;
    out.phi.assign(1, std::vector<double>(panel.rows()));
    double inv_k = 1.0 / static_cast<double>(panel.n_horizons());
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        double s = 0.0;
        for (std::size_t k = 0; k < panel.n_horizons(); ++k) s += panel.phi[k][r];
        out.phi[0][r] = s * inv_k;
    }
    return out;
}

struct HorizonFit {
    int T = 0;
    int k = 0;
    std::optional<FitResult> fit;
    std::string error;  // set when this horizon's fit failed
};

/// Independent fit per horizon; the template may vary the feature set with
/// the horizon (e.g. drop phi5 above one hour). Per-horizon failures are
/// recorded, not fatal. When a bootstrap config is given, every horizon uses
/// the same seed and hence the same day samples.
inline std::vector<HorizonFit> fit_by_horizon(
    const Panel& panel, const std::function<ModelSpec(int k, int T)>& spec_template,
    const RowFilter& filter = {}, const std::optional<BootstrapConfig>& boot = std::nullopt,
    bool equal_asset_weight = false) {
    std::vector<HorizonFit> out(panel.n_horizons());
    for (std::size_t col = 0; col < panel.n_horizons(); ++col) {
        HorizonFit& hf = out[col];
        hf.T = panel.horizons[col];
        hf.k = col < panel.k_indices.size() ? panel.k_indices[col] : 0;
        FitInput input{&panel, static_cast<int>(col), filter, equal_asset_weight};
        ModelSpec spec = spec_template(hf.k, hf.T);
        spec.grouping = Grouping::per_horizon;
        try {
            hf.fit = boot ? bootstrap(input, spec, *boot) : ols_fit(input, spec);
            hf.fit->horizon_T = hf.T;
            hf.fit->horizon_k = hf.k;
        } catch (const Error& e) {
            hf.error = e.what();
        }
    }
    return out;
}

/// FitResult JSON: {coefficients:{name:{value,stderr,t}}, r2_bp, r2_adj_bp,
/// n_rows, spec, seed}.
inline nlohmann::json fit_to_json(const FitResult& fit) {
    nlohmann::json coeffs = nlohmann::json::object();
    for (std::size_t j = 0; j < fit.features.size(); ++j) {
        nlohmann::json c;
        c["value"] = fit.values[j];
        c["stderr"] = std::isnan(fit.stderrs[j]) ? nlohmann::json() : nlohmann::json(fit.stderrs[j]);
        c["t"] = std::isnan(fit.tstats[j]) ? nlohmann::json() : nlohmann::json(fit.tstats[j]);
        c["significant"] = std::isnan(fit.tstats[j])
                               ? nlohmann::json()
                               : nlohmann::json(std::fabs(fit.tstats[j]) >= fit.t_threshold);
        coeffs[coef_name(fit.features[j])] = c;
    }
    nlohmann::json spec;
    nlohmann::json feats = nlohmann::json::array();
    for (Feature f : fit.features) feats.push_back(feature_name(f));
    spec["features"] = feats;
    spec["grouping"] = to_string(fit.grouping);
    if (!fit.subgroup.empty()) spec["subgroup"] = fit.subgroup;
    nlohmann::json out;
    out["coefficients"] = coeffs;
    out["r2_bp"] = std::isnan(fit.r2_bp) ? nlohmann::json() : nlohmann::json(fit.r2_bp);
    out["r2_adj_bp"] = std::isnan(fit.r2_adj_bp) ? nlohmann::json() : nlohmann::json(fit.r2_adj_bp);
    out["n_rows"] = fit.n_rows;
    out["spec"] = spec;
    out["seed"] = fit.seed;
    out["n_bootstrap"] = fit.n_bootstrap;
    out["n_folds"] = fit.n_folds;
    out["t_threshold"] = fit.t_threshold;
    out["cv_renormalized"] = fit.cv_renormalized;
    out["frequency"] = to_string(fit.frequency);
    out["horizon_T"] = fit.horizon_T;
    out["horizon_k"] = fit.horizon_k;
    out["rescaled"] = fit.rescaled;
    return out;
}

inline FitResult fit_from_json(const nlohmann::json& j) {
    FitResult fit;
    // coefficient order: reconstruct from coef letter names
    static const std::vector<Feature> order = {Feature::constant, Feature::phi,  Feature::phi2,
                                               Feature::phi3,     Feature::phi4, Feature::phi5,
                                               Feature::sign_phi};
    const auto& coeffs = j.at("coefficients");
    for (Feature f : order) {
        auto it = coeffs.find(coef_name(f));
        if (it == coeffs.end()) continue;
        fit.features.push_back(f);
        fit.values.push_back(it->at("value").get<double>());
        auto get_opt = [&](const char* key) {
            return it->contains(key) && !it->at(key).is_null()
                       ? it->at(key).get<double>()
                       : std::numeric_limits<double>::quiet_NaN();
        };
        fit.stderrs.push_back(get_opt("stderr"));
        fit.tstats.push_back(get_opt("t"));
    }
    auto num_or_nan = [&](const char* key) {
        return j.contains(key) && !j.at(key).is_null()
                   ? j.at(key).get<double>()
                   : std::numeric_limits<double>::quiet_NaN();
    };
    fit.r2_bp = num_or_nan("r2_bp");
    fit.r2_adj_bp = num_or_nan("r2_adj_bp");
    fit.n_rows = j.value("n_rows", std::size_t{0});
    fit.seed = j.value("seed", std::uint64_t{0});
    fit.n_bootstrap = j.value("n_bootstrap", 0);
    fit.n_folds = j.value("n_folds", 0);
    fit.t_threshold = j.value("t_threshold", 2.0);
    fit.cv_renormalized = j.value("cv_renormalized", false);
    fit.horizon_T = j.value("horizon_T", 0);
    fit.horizon_k = j.value("horizon_k", 0);
    fit.rescaled = j.value("rescaled", false);
    if (j.contains("frequency"))
        fit.frequency = frequency_from_string(j.at("frequency").get<std::string>());
    return fit;
}

}  // namespace trendlab
