#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "trendlab/common.hpp"
#include "trendlab/csvio.hpp"
#include "trendlab/trend.hpp"

namespace trendlab {

/// One trend-strength bucket: center k/buckets_per_unit, half-width
/// 1/(2*buckets_per_unit), closed-left/open-right; the outermost two buckets
/// extend to +-infinity.
struct Bucket {
    int k = 0;
    double lo = 0.0;
    double hi = 0.0;
    std::int64_t count = 0;
    double mean_phi = 0.0;
    double mean_response = 0.0;
    double stderr_response = 0.0;  // sample std / sqrt(count); 0 when count < 2
};

struct BucketStats {
    int buckets_per_unit = 3;
    int k_max = 7;
    std::vector<Bucket> buckets;  // ordered k = -k_max .. +k_max, empty ones included
};

/// Average next-interval return by trend-strength bucket (the exploratory
/// Fig. 1/3/4/8 statistic). Expects a single-column panel; stack or slice a
/// multi-horizon panel first so counts add up to its row count.
inline BucketStats bucketize(const Panel& panel, int buckets_per_unit, int k_max) {
    if (panel.rows() == 0) throw DataError("bucketize: empty panel");
    if (buckets_per_unit != 3 && buckets_per_unit != 5)
        throw ConfigError("buckets_per_unit must be 3 or 5");
    if (k_max < 1) throw ConfigError("k_max must be >= 1");
    if (panel.n_horizons() != 1)
        throw ConfigError("bucketize expects one phi column; use stack_pairs() or a horizon slice");

    BucketStats stats;
    stats.buckets_per_unit = buckets_per_unit;
    stats.k_max = k_max;
    int nb = 2 * k_max + 1;
    std::vector<double> sum_phi(nb, 0.0), sum_y(nb, 0.0), sum_y2(nb, 0.0);
    std::vector<std::int64_t> count(nb, 0);

    const auto& phis = panel.phi[0];
    double m = static_cast<double>(buckets_per_unit);
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        int k = static_cast<int>(std::floor(phis[r] * m + 0.5));
        k = std::clamp(k, -k_max, k_max);
        int idx = k + k_max;
        ++count[idx];
        sum_phi[idx] += phis[r];
        sum_y[idx] += panel.response[r];
        sum_y2[idx] += panel.response[r] * panel.response[r];
    }

    double inf = std::numeric_limits<double>::infinity();
    for (int k = -k_max; k <= k_max; ++k) {
        int idx = k + k_max;
        Bucket b;
        b.k = k;
        b.lo = k == -k_max ? -inf : (k - 0.5) / m;
        b.hi = k == k_max ? inf : (k + 0.5) / m;
        b.count = count[idx];
        if (b.count > 0) {
            double n = static_cast<double>(b.count);
            b.mean_phi = sum_phi[idx] / n;
            b.mean_response = sum_y[idx] / n;
            if (b.count > 1) {
                double var = (sum_y2[idx] - n * b.mean_response * b.mean_response) / (n - 1.0);
                b.stderr_response = std::sqrt(std::max(var, 0.0) / n);
            }
        }
        stats.buckets.push_back(b);
    }
    return stats;
}

struct BucketCurvePoint {
    int k;
    double lo, hi;
    std::int64_t count;
    double mean_phi;
    double mean_response;
    double stderr_response;
};

/// Plot-ready curve: one row per nonempty bucket, ordered by k.
inline std::vector<BucketCurvePoint> bucket_curve(const BucketStats& stats) {
    if (stats.buckets.empty()) throw DataError("bucket_curve: empty stats");
    std::vector<BucketCurvePoint> out;
    for (const auto& b : stats.buckets) {
        if (b.count == 0) continue;
        out.push_back({b.k, b.lo, b.hi, b.count, b.mean_phi, b.mean_response, b.stderr_response});
    }
    return out;
}

inline void write_bucket_csv(const std::string& path, const BucketStats& stats) {
    auto out = open_output(path);
    out << "k,phi_lo,phi_hi,count,mean_phi,mean_response,stderr\n";
    for (const auto& p : bucket_curve(stats)) {
        out << p.k << ',' << format_double(p.lo) << ',' << format_double(p.hi) << ',' << p.count
            << ',' << format_double(p.mean_phi) << ',' << format_double(p.mean_response) << ','
            << format_double(p.stderr_response) << '\n';
    }
}

}  // namespace trendlab
