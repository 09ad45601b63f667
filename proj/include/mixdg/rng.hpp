#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace mixdg {

// Seeded RNG wrapper. Every consumer takes an explicit Rng (or a seed and
// derives one); there is no global generator. derive() gives decorrelated
// per-purpose streams from one master seed so adding a consumer does not
// shift the draws of the others.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : tag_(seed), gen_(splitmix(seed)) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }

    double normal(double mean, double stddev) {
        return std::normal_distribution<double>(mean, stddev)(gen_);
    }

    double gamma(double shape) {
        return std::gamma_distribution<double>(shape, 1.0)(gen_);
    }

    // i in [0, n); n must be > 0
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen_);
    }

    std::uint64_t raw() { return gen_(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        std::shuffle(v.begin(), v.end(), gen_);
    }

    // Independent stream keyed by (this rng's seed, stream id).
    Rng derive(std::uint64_t stream) const {
        return Rng(tag_ ^ splitmix(0x9E3779B97F4A7C15ull * (stream + 1) + tag_));
    }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    std::uint64_t tag_;
    std::mt19937_64 gen_;
};

}  // namespace mixdg
