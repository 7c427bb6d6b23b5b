#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "srcrec/errors.hpp"

namespace srcrec {

// Deterministic random source. mt19937_64 output is pinned by the standard;
// all transforms (uniform, normal, shuffle) are implemented here rather than
// with std distributions so that streams are reproducible across toolchains.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    // Independent stream derived from a base seed and a stream id.
    static Rng derive(uint64_t seed, uint64_t stream) {
        return Rng(mix(mix(seed) ^ stream));
    }

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        if (hi <= lo) return lo;
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next_u64() % span);
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // Box-Muller on (0,1] to keep log away from zero.
        double u = 1.0 - uniform01();
        double v = uniform01();
        double r = std::sqrt(-2.0 * std::log(u));
        double a = 6.283185307179586 * v;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_u64() % i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from {0, ..., universe-1}, order randomized.
    std::vector<int> sample_distinct(int universe, int k) {
        if (k < 0 || k > universe)
            throw PreconditionError("sample_distinct: k outside [0, universe]");
        std::vector<int> pool(static_cast<size_t>(universe));
        for (int i = 0; i < universe; ++i) pool[static_cast<size_t>(i)] = i;
        shuffle(pool);
        pool.resize(static_cast<size_t>(k));
        return pool;
    }

private:
    // splitmix64 finalizer
    static uint64_t mix(uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace srcrec
