#pragma once

#include <cmath>
#include <cstdint>

namespace mw {

// splitmix64 (Steele, Lea, Flood 2014). Chosen over <random> engines because
// its output stream is a fixed bit pattern on every platform, which keeps
// synthesized traces and fuzz corpora stable.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [0, bound).
    uint64_t below(uint64_t bound) { return bound ? next() % bound : 0; }

    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

private:
    uint64_t state_;
};

}  // namespace mw
