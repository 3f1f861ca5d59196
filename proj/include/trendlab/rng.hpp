#pragma once

#include <cmath>
#include <cstdint>

namespace trendlab {

/// Counter-based random stream: output n is a hash of (seed, stream, n), so
/// streams derived from the same seed are independent and a replicate's draws
/// never depend on which worker produced them. The mixer is splitmix64.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : base_(mix(seed ^ mix(stream * 0x9e3779b97f4a7c15ull + 0x6a09e667f3bcc909ull))),
          counter_(0) {}

    std::uint64_t next_u64() { return mix(base_ + (++counter_) * 0x9e3779b97f4a7c15ull); }

    /// Uniform in (0, 1] (never 0, so log() is safe).
    double next_uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // 128-bit multiply-shift; bias < 2^-64, immaterial for resampling
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Standard normal via Box-Muller (spare cached).
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_uniform();
        double u2 = next_uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    /// Student-t with nu degrees of freedom (nu >= 1), unit scale.
    double next_student_t(int nu) {
        double z = next_normal();
        double chi2 = 0.0;
        for (int i = 0; i < nu; ++i) {
            double g = next_normal();
            chi2 += g * g;
        }
        return z / std::sqrt(chi2 / nu);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t base_;
    std::uint64_t counter_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace trendlab
