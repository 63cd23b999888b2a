#pragma once

#include <cstdint>
#include <random>

namespace hmdn {

/// Seeded random source with platform-independent draws.
///
/// std::uniform_real_distribution and std::normal_distribution are
/// implementation-defined, so the conversions from engine bits are done here
/// to keep datasets and model files byte-identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Seed for stream `stream_id` derived from a top-level seed.
    /// splitmix64(seed ^ splitmix64(stream_id + 1)).
    static std::uint64_t split(std::uint64_t seed, std::uint64_t stream_id);

    /// Independent generator for (seed, stream_id).
    static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
        return Rng(split(seed, stream_id));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal (Box-Muller, cached second variate).
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, n). Rejection sampling, unbiased.
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace hmdn
