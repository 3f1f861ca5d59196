#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "trendlab/common.hpp"
#include "trendlab/csvio.hpp"
#include "trendlab/ingest.hpp"
#include "trendlab/rng.hpp"
#include "trendlab/trend.hpp"

namespace trendlab {

enum class NoiseDist { gaussian, student_t };

/// Parameters of the synthetic market process
///   R(t+1) = a + b phi + c phi^3 + d phi^5 + e sign(phi) + eps,
/// with phi evolved by the same kernel recursion the analyzer uses (horizon T,
/// driven by the excess returns R - a) and clipped at +-clip_phi inside the
/// drift, exactly as the analyzer clips. Prices are P(t+1) = P(t) *
/// exp(target_vol * R(t+1)) so the output is ingestible unchanged.
struct SimConfig {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;
    double e = 0.0;
    int T = 32;
    int n_assets = 1;
    std::int64_t n_intervals = 10000;  // number of returns; prices = n_intervals + 1
    double noise_sigma = 1.0;
    double clip_phi = 2.5;
    double tick_size = 0.0;  // 0 = continuous prices
    double initial_price = 100.0;
    double target_vol = 0.01;  // per-interval log-return scale
    std::uint64_t seed = 0;
    Frequency frequency = Frequency::daily;
    NoiseDist noise = NoiseDist::gaussian;
    int student_t_nu = 5;

    void validate() const {
        if (n_assets < 1) throw ConfigError("simulate: n_assets must be >= 1");
        if (n_intervals < 2) throw ConfigError("simulate: n_intervals must be >= 2");
        if (!(noise_sigma > 0.0)) throw ConfigError("simulate: noise_sigma must be positive");
        if (T < 2) throw ConfigError("simulate: T must be >= 2");
        if (!(initial_price > 0.0)) throw ConfigError("simulate: initial_price must be positive");
        if (!(target_vol > 0.0)) throw ConfigError("simulate: target_vol must be positive");
        if (tick_size < 0.0) throw ConfigError("simulate: tick_size must be >= 0");
    }
};

inline std::string sim_asset_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "sim%03d", index);
    return buf;
}

/// Draws the synthetic market. Each asset uses the independent counter stream
/// (seed, asset index), so the output is bit-identical for any worker count
/// and any asset subset order.
inline std::vector<PriceSeries> simulate_market(const SimConfig& cfg) {
    cfg.validate();
    std::vector<PriceSeries> out(cfg.n_assets);
    parallel_for(static_cast<std::size_t>(cfg.n_assets), [&](std::size_t i) {
        Rng rng(cfg.seed, i);
        PriceSeries& s = out[i];
        s.asset_id = sim_asset_id(static_cast<int>(i));
        s.frequency = cfg.frequency;
        s.timestamps.resize(cfg.n_intervals + 1);
        s.prices.resize(cfg.n_intervals + 1);
        s.timestamps[0] = 0;
        s.prices[0] = cfg.initial_price;
        TrendState state(static_cast<double>(cfg.T));
        double log_price = std::log(cfg.initial_price);
        for (std::int64_t t = 1; t <= cfg.n_intervals; ++t) {
            double phi = std::clamp(state.phi(), -cfg.clip_phi, cfg.clip_phi);
            double phi3 = phi * phi * phi;
            double sign = phi > 0.0 ? 1.0 : (phi < 0.0 ? -1.0 : 0.0);
            double eps = cfg.noise == NoiseDist::gaussian ? rng.next_normal()
                                                          : rng.next_student_t(cfg.student_t_nu);
            double ret = cfg.a + cfg.b * phi + cfg.c * phi3 + cfg.d * phi3 * phi * phi +
                         cfg.e * sign + cfg.noise_sigma * eps;
            state.update(ret - cfg.a);  // trend measures returns in excess of the premium
            log_price += cfg.target_vol * ret;
            s.timestamps[t] = t;
            s.prices[t] = std::exp(log_price);
        }
        if (cfg.tick_size > 0.0) {
            for (auto& p : s.prices) {
                if (cfg.tick_size >= p)
                    throw DataError(s.asset_id + ": price walked below the tick size");
                p = std::floor(p / cfg.tick_size + 0.5) * cfg.tick_size;
            }
        }
    });
    return out;
}

/// Rounds every price to the nearest tick (half-up). Zero-return stretches
/// from prices landing on the same tick are preserved by construction.
inline PriceSeries apply_tick_grid(const PriceSeries& series, double tick_size) {
    if (!(tick_size > 0.0)) throw ConfigError("apply_tick_grid: tick_size must be positive");
    PriceSeries out = series;
    for (auto& p : out.prices) {
        if (tick_size >= p)
            throw DataError(series.asset_id + ": tick_size " + format_double(tick_size) +
                            " >= price " + format_double(p));
        p = std::floor(p / tick_size + 0.5) * tick_size;
    }
    return out;
}

/// The even polynomial potential whose negative gradient is the drift:
/// V = 1/2 b~ phi^2 - 1/4 c~ phi^4 + 1/6 d~ phi^6. With (b~, c~, d~) =
/// (-b, c, -d) the force -V' reproduces b phi + c phi^3 + d phi^5.
struct LandauParams {
    double b_tilde = 0.0;
    double c_tilde = 0.0;
    double d_tilde = 0.0;
};

struct LandauPoint {
    double potential = 0.0;
    double force = 0.0;  // -dV/dphi
};

inline LandauPoint landau_potential(double phi, const LandauParams& p) {
    double phi2 = phi * phi;
    LandauPoint out;
    out.potential = 0.5 * p.b_tilde * phi2 - 0.25 * p.c_tilde * phi2 * phi2 +
                    (1.0 / 6.0) * p.d_tilde * phi2 * phi2 * phi2;
    out.force = -p.b_tilde * phi + p.c_tilde * phi2 * phi - p.d_tilde * phi2 * phi2 * phi;
    return out;
}

}  // namespace trendlab
