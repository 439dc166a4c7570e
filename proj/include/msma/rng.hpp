#pragma once

#include <cstdint>
#include <string_view>

namespace msma {

// Counter-based random stream built on the splitmix64 output function.
// Streams are keyed, not seeded sequentially: derive_key folds the scenario
// seed plus labels (agent id, tick, ...) into a 64-bit key, and the stream is
// the splitmix64 sequence starting from that key. Two streams with different
// keys are independent, so consuming more draws in one part of the simulation
// never perturbs another. This is what keeps A/B comparisons across fusion
// pipelines paired: the sensing draws for (seed, agent, tick) are identical
// no matter which ego model or topology is running.
//
// The algorithm is selectable by string key in the scenario file; the only
// implemented generator is "splitmix64".
class RngStream {
public:
    explicit RngStream(std::uint64_t key) : state_(key) {}

    static std::uint64_t derive_key(std::uint64_t seed, std::string_view label,
                                    std::uint64_t a = 0, std::uint64_t b = 0);

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 bits of mantissa.
    double uniform();

    // Uniform on [lo, hi).
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller; the spare value is cached.
    double normal();

    // Poisson by single-uniform CDF inversion; consumes exactly one uniform.
    int poisson(double lambda);

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace msma
