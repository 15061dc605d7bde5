#pragma once

#include <cmath>
#include <cstdint>

namespace filmrestore {

// PCG32 (XSH-RR 64/32, O'Neill). Chosen over std:: engines because the
// distributions below must produce identical streams on every platform.
struct Pcg32 {
    uint64_t state = 0x853c49e6748fea9bULL;
    uint64_t inc   = 0xda3e39cb94b95bdbULL;

    Pcg32() = default;
    explicit Pcg32(uint64_t seed, uint64_t stream = 1) { reseed(seed, stream); }

    void reseed(uint64_t seed, uint64_t stream = 1) {
        state = 0;
        inc   = (stream << 1u) | 1u;
        next_u32();
        state += seed;
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state;
        state        = old * 6364136223846793005ULL + inc;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot        = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    // Uniform in [0, 1) with 32 bits of resolution.
    double uniform() { return next_u32() * (1.0 / 4294967296.0); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer in [0, n). Modulo-free; the tiny float bias is irrelevant here.
    int uniform_int(int n) {
        int k = static_cast<int>(uniform() * n);
        return k >= n ? n - 1 : k;
    }

    // Box-Muller without caching so the generator state is exactly (state, inc)
    // and can be checkpointed as two words.
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Derive an independent stream, e.g. one per sample id.
    Pcg32 split(uint64_t stream_id) const {
        return Pcg32(state ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1)), stream_id * 2 + 1);
    }
};

}  // namespace filmrestore
