#pragma once

#include <cstdint>
#include <limits>

namespace rctodds {

// Counter-based generator built on the splitmix64 mixing function.
// Substreams are derived by hashing (seed, stream_id), so stream k of a run
// is reproducible regardless of how many streams are consumed elsewhere or
// how replications are scheduled across worker threads.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : state_(seed) {}

    static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
        // Two rounds of the output mix decorrelate nearby (seed, id) pairs.
        std::uint64_t s = mix(seed + 0x9E3779B97F4A7C15ULL * (stream_id + 1));
        return Rng(mix(s));
    }

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    std::uint64_t operator()() { return next(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound), bias-free via rejection.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() {
        return std::numeric_limits<std::uint64_t>::max();
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace rctodds
