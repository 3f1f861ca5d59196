#pragma once

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace trendlab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input file (bad row, bad number, missing header).
struct ParseError : Error {
    using Error::Error;
};

/// Input violates a data invariant (non-positive price, non-monotone time, ...).
struct DataError : Error {
    using Error::Error;
};

/// A series whose sample variance is zero (or below the configured floor).
struct DegenerateSeriesError : DataError {
    using DataError::DataError;
};

/// Inconsistent or invalid run configuration.
struct ConfigError : Error {
    using Error::Error;
};

/// Rank-deficient design matrix; names the first offending feature.
struct SingularFitError : Error {
    explicit SingularFitError(const std::string& feat)
        : Error("singular fit: design matrix rank-deficient at feature '" + feat + "'"),
          feature(feat) {}
    std::string feature;
};

enum class Frequency { minute, daily, monthly, yearly };

inline const char* to_string(Frequency f) {
    switch (f) {
        case Frequency::minute: return "minute";
        case Frequency::daily: return "daily";
        case Frequency::monthly: return "monthly";
        case Frequency::yearly: return "yearly";
    }
    return "?";
}

inline Frequency frequency_from_string(const std::string& s) {
    if (s == "minute") return Frequency::minute;
    if (s == "daily") return Frequency::daily;
    if (s == "monthly") return Frequency::monthly;
    if (s == "yearly") return Frequency::yearly;
    throw ConfigError("unknown frequency '" + s + "' (expected minute|daily|monthly|yearly)");
}

/// Worker count: TRENDLAB_THREADS if set, else hardware concurrency.
inline unsigned worker_count() {
    if (const char* env = std::getenv("TRENDLAB_THREADS")) {
        long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1u;
}

/// Runs fn(i) for i in [0, n). Tasks must be independent and write only to
/// their own output slot; the result is then identical for any worker count.
/// The first exception thrown by a task is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    unsigned workers = worker_count();
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    if (workers > n) workers = static_cast<unsigned>(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::mutex err_mutex;
    std::exception_ptr err;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            // static contiguous partition
            std::size_t lo = n * w / workers;
            std::size_t hi = n * (w + 1) / workers;
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

}  // namespace trendlab
