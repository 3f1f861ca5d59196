#pragma once

#include <string>
#include <vector>

#include "trendlab/pipeline.hpp"
#include "trendlab/regress.hpp"
#include "trendlab/simulate.hpp"

namespace trendlab {

/// A bundled experiment: ground-truth process coefficients with matching
/// model, bootstrap, CV and normalization defaults, so recovery runs are
/// one-liners. Values are the published regression tables these experiments
/// are named after.
struct Preset {
    std::string name;
    SimConfig sim;
    ModelSpec model = ModelSpec::cubic();
    ReturnOptions return_opt;
    int folds = 15;
    int bootstrap_samples = 1000;
    std::vector<Feature> check_features;
    bool require_t2 = false;
    int grid_k_lo = 0, grid_k_hi = 0;  // optional multi-horizon demonstration grid
};

inline Preset preset_by_name(const std::string& name) {
    Preset p;
    p.name = name;
    if (name == "table3") {
        // daily cubic: trends persist (b>0), strong trends revert (c<0)
        p.sim.frequency = Frequency::daily;
        p.sim.a = 0.0133;
        p.sim.b = 0.0129;
        p.sim.c = -0.0062;
        p.sim.T = 32;
        p.sim.n_assets = 24;
        p.sim.n_intervals = 7800;  // ~30 years of trading days
        p.model = ModelSpec::cubic();
        p.folds = 15;
        p.bootstrap_samples = 1000;
        p.check_features = {Feature::phi, Feature::phi3};
        p.require_t2 = true;
        p.grid_k_lo = 1;
        p.grid_k_hi = 10;
    } else if (name == "table5") {
        // minute scale, short horizons: reversion with quintic and tick terms
        p.sim.frequency = Frequency::minute;
        p.sim.a = 0.00017;
        p.sim.b = -0.00912;
        p.sim.c = 0.00259;
        p.sim.d = -0.00038;
        p.sim.e = -0.00282;
        p.sim.T = 8;
        p.sim.n_assets = 16;
        p.sim.n_intervals = 1000000;
        p.model = ModelSpec::quintic();
        p.folds = 12;
        p.bootstrap_samples = 1000;
        p.check_features = {Feature::phi, Feature::phi3, Feature::phi5, Feature::sign_phi};
    } else if (name == "table6") {
        // minute scale, horizons >= 1 hour: daily-like pattern, no quintic term
        p.sim.frequency = Frequency::minute;
        p.sim.a = 0.00003;
        p.sim.b = 0.00132;
        p.sim.c = -0.00039;
        p.sim.e = -0.00071;
        p.sim.T = 256;
        p.sim.n_assets = 16;
        p.sim.n_intervals = 1000000;
        p.model = ModelSpec{{Feature::constant, Feature::phi, Feature::phi3, Feature::sign_phi}};
        p.folds = 12;
        p.bootstrap_samples = 1000;
        p.check_features = {Feature::phi, Feature::phi3, Feature::sign_phi};
    } else if (name == "table8-short") {
        // monthly, horizons up to 1 year, currencies excluded in the paper
        p.sim.frequency = Frequency::monthly;
        p.sim.a = 0.061;
        p.sim.b = 0.070;
        p.sim.c = -0.014;
        p.sim.T = 6;
        p.sim.n_assets = 18;
        p.sim.n_intervals = 1800;  // 150 years of months
        p.model = ModelSpec::cubic();
        p.return_opt.vol_mode = VolMode::ewma;
        p.return_opt.ewma_half_life = 360.0;  // 30 years of months
        p.folds = 12;
        p.bootstrap_samples = 500;
        p.check_features = {Feature::phi, Feature::phi3};
    } else if (name == "table8-long") {
        // monthly, 2-16 year horizons: weak trends revert, strong persist
        p.sim.frequency = Frequency::monthly;
        p.sim.a = 0.022;
        p.sim.b = -0.042;
        p.sim.c = 0.011;
        p.sim.T = 48;
        p.sim.n_assets = 24;
        p.sim.n_intervals = 1800;
        p.model = ModelSpec::cubic();
        p.return_opt.vol_mode = VolMode::ewma;
        p.return_opt.ewma_half_life = 360.0;
        p.folds = 12;
        p.bootstrap_samples = 500;
        p.check_features = {Feature::phi, Feature::phi3};
    } else if (name == "table9") {
        // yearly interest-rate style linear reversion over decades
        p.sim.frequency = Frequency::yearly;
        p.sim.a = 0.01;
        p.sim.b = -0.11;
        p.sim.T = 16;
        p.sim.n_assets = 4;
        p.sim.n_intervals = 800;
        p.model = ModelSpec::linear();
        p.folds = 12;
        p.bootstrap_samples = 500;
        p.check_features = {Feature::phi};
    } else {
        throw ConfigError("unknown preset '" + name +
                          "' (table3|table5|table6|table8-short|table8-long|table9)");
    }
    return p;
}

inline RecoveryExperiment recovery_from_preset(const Preset& p, std::uint64_t seed) {
    RecoveryExperiment exp;
    exp.sim = p.sim;
    exp.sim.seed = seed;
    exp.return_opt = p.return_opt;
    exp.model = p.model;
    exp.boot.n_samples = p.bootstrap_samples;
    exp.boot.seed = seed;
    exp.check_features = p.check_features;
    exp.require_t2 = p.require_t2;
    if (p.grid_k_lo > 0)
        exp.panel_grid = TrendConfig::for_grid(p.sim.frequency, p.grid_k_lo, p.grid_k_hi);
    return exp;
}

}  // namespace trendlab
