#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "trendlab/common.hpp"
#include "trendlab/csvio.hpp"
#include "trendlab/regress.hpp"

namespace trendlab {

/// Converts a horizon in native intervals to minutes using the fixed bridges:
/// 1 trading day = 2^10 minutes, 1 year = 260 trading days, 1 month = 260/12
/// trading days.
inline double horizon_to_minutes(Frequency f, double T) {
    if (!(T > 0.0)) throw ConfigError("horizon_to_minutes: T must be positive");
    switch (f) {
        case Frequency::minute: return T;
        case Frequency::daily: return kMinutesPerTradingDay * T;
        case Frequency::monthly: return kMinutesPerTradingDay * kTradingDaysPerMonth * T;
        case Frequency::yearly: return kMinutesPerTradingDay * kTradingDaysPerYear * T;
    }
    return T;
}

/// The Fig.-10 normalization: every coefficient and its stderr multiplied by
/// sqrt(T_minutes / 60), making trend strength and predicted return unit
/// variance on every time scale. t-statistics are invariant.
inline FitResult rescale_coefficients(const FitResult& fit, double t_minutes) {
    if (fit.rescaled) throw ConfigError("rescale_coefficients: fit is already rescaled");
    if (!(t_minutes > 0.0)) throw ConfigError("rescale_coefficients: T_minutes must be positive");
    FitResult out = fit;
    double factor = std::sqrt(t_minutes / 60.0);
    for (std::size_t j = 0; j < out.values.size(); ++j) {
        out.values[j] *= factor;
        out.stderrs[j] *= factor;
    }
    out.rescaled = true;
    return out;
}

struct CurvePoint {
    std::string dataset;  // intraday | daily | monthly | yearly (or custom tag)
    double t_minutes = 0.0;
    std::string coef;  // a, b, c, c2, c4, d, e
    double value = 0.0;
    double stderr_value = 0.0;
};

/// Multi-dataset coefficient curve, sorted by T_minutes; overlapping horizons
/// from different datasets are both retained under their tags.
struct HorizonCurve {
    std::vector<CurvePoint> points;
    bool rescaled = false;
};

struct TaggedFits {
    std::string dataset;
    Frequency frequency = Frequency::daily;
    std::vector<HorizonFit> fits;  // successful entries are used
};

inline HorizonCurve assemble_curve(const std::vector<TaggedFits>& inputs, bool rescale = true) {
    if (inputs.empty()) throw DataError("assemble_curve: no inputs");
    HorizonCurve curve;
    curve.rescaled = rescale;
    std::set<std::pair<std::string, double>> seen;
    bool any = false;
    for (const auto& in : inputs) {
        for (const auto& hf : in.fits) {
            if (!hf.fit) continue;
            any = true;
            double t_min = horizon_to_minutes(in.frequency, static_cast<double>(hf.T));
            if (!seen.insert({in.dataset, t_min}).second)
                throw DataError("assemble_curve: duplicate (dataset=" + in.dataset +
                                ", T=" + std::to_string(hf.T) + ")");
            FitResult fit = *hf.fit;
            if (rescale && !fit.rescaled) fit = rescale_coefficients(fit, t_min);
            for (std::size_t j = 0; j < fit.features.size(); ++j) {
                curve.points.push_back({in.dataset, t_min, coef_name(fit.features[j]),
                                        fit.values[j], fit.stderrs[j]});
            }
        }
    }
    if (!any) throw DataError("assemble_curve: no successful fits");
    std::stable_sort(curve.points.begin(), curve.points.end(),
                     [](const CurvePoint& a, const CurvePoint& b) {
                         if (a.t_minutes != b.t_minutes) return a.t_minutes < b.t_minutes;
                         if (a.dataset != b.dataset) return a.dataset < b.dataset;
                         return a.coef < b.coef;
                     });
    return curve;
}

/// Curve CSV `dataset,T_minutes,coef,value,stderr`, 6 significant digits.
inline void write_curve_csv(const std::string& path, const HorizonCurve& curve) {
    auto out = open_output(path);
    out << "dataset,T_minutes,coef,value,stderr\n";
    for (const auto& p : curve.points) {
        out << p.dataset << ',' << format_double(p.t_minutes, 6) << ',' << p.coef << ','
            << format_double(p.value, 6) << ','
            << (std::isnan(p.stderr_value) ? std::string() : format_double(p.stderr_value, 6))
            << '\n';
    }
}

/// Gnuplot-friendly variant: one whitespace-separated block per coefficient,
/// separated by two blank lines (`index` addressing), '#' headers.
inline void write_curve_gnuplot(const std::string& path, const HorizonCurve& curve) {
    auto out = open_output(path);
    std::set<std::string> coefs;
    for (const auto& p : curve.points) coefs.insert(p.coef);
    bool first = true;
    for (const auto& coef : coefs) {
        if (!first) out << "\n\n";
        first = false;
        out << "# coef " << coef << "\n# T_minutes value stderr dataset\n";
        for (const auto& p : curve.points) {
            if (p.coef != coef) continue;
            out << format_double(p.t_minutes, 6) << ' ' << format_double(p.value, 6) << ' '
                << (std::isnan(p.stderr_value) ? "nan" : format_double(p.stderr_value, 6)) << ' '
                << p.dataset << '\n';
        }
    }
}

inline nlohmann::json curve_to_json(const HorizonCurve& curve) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : curve.points) {
        nlohmann::json j;
        j["dataset"] = p.dataset;
        j["T_minutes"] = p.t_minutes;
        j["coef"] = p.coef;
        j["value"] = p.value;
        j["stderr"] = std::isnan(p.stderr_value) ? nlohmann::json() : nlohmann::json(p.stderr_value);
        pts.push_back(j);
    }
    nlohmann::json out;
    out["rescaled"] = curve.rescaled;
    out["points"] = pts;
    return out;
}

}  // namespace trendlab
