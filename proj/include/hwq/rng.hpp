#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hwq {

namespace detail {
// splitmix64 step; used to derive well-separated seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
} // namespace detail

// Single-owner random stream. mt19937_64 is fully specified by the standard,
// so draw sequences are identical across platforms and compilers. All
// transforms are done here (inversion / polar method) rather than through
// std::*_distribution, whose output is implementation-defined.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : gen_(seed) {}

    // Counter-based derivation of an independent stream from
    // (master seed, experiment id, replication index).
    static RngStream derive(std::uint64_t master, std::uint64_t experiment_id,
                            std::uint64_t replication) {
        std::uint64_t s = master;
        std::uint64_t a = detail::splitmix64(s);
        s ^= experiment_id * 0xd6e8feb86659fd93ULL;
        std::uint64_t b = detail::splitmix64(s);
        s ^= (replication + 1) * 0xa5a5a5a5a5a5a5a5ULL;
        std::uint64_t c = detail::splitmix64(s);
        return RngStream(a ^ (b << 1) ^ c);
    }

    // Uniform on (0,1); never returns 0 or 1.
    double uniform() {
        std::uint64_t bits = gen_() >> 11; // 53 bits
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    // Standard normal via Marsaglia polar; second value cached.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        cached_ = v * f;
        have_cached_ = true;
        return u * f;
    }

    // Poisson by exponential inter-arrival summation in log space.
    // O(mean) but only used for initial-condition draws, never in hot loops.
    std::uint64_t poisson(double mean) {
        std::uint64_t k = 0;
        double acc = 0.0;
        while (true) {
            acc += -std::log(uniform());
            if (acc > mean) return k;
            ++k;
        }
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

} // namespace hwq
