#pragma once

#include <cstdint>

namespace bellsim::rng {

// Finalizer step of splitmix64; also used as the key-mixing primitive.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Identifies one logical random stream. Streams are derived purely from the
// key, so any worker can evaluate any (cell, run) pair and obtain the same
// sequence. `purpose` separates independent draws that share a cell/run
// (e.g. the two links of a swap run).
struct StreamKey {
    std::uint64_t global_seed = 0;
    std::uint64_t cell_id = 0;
    std::uint64_t run_index = 0;
    std::uint64_t purpose = 0;

    StreamKey with_run(std::uint64_t run) const {
        StreamKey k = *this;
        k.run_index = run;
        return k;
    }
    StreamKey with_purpose(std::uint64_t p) const {
        StreamKey k = *this;
        k.purpose = p;
        return k;
    }
};

// xoshiro256** seeded by hashing the stream key through splitmix64.
// Self-contained so that sequences are identical across platforms and
// standard libraries.
class Stream {
public:
    explicit Stream(const StreamKey& key) {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        h = mix64(h + key.global_seed);
        h = mix64(h + 0x9e3779b97f4a7c15ULL * (key.cell_id + 1));
        h = mix64(h + 0x9e3779b97f4a7c15ULL * (key.run_index + 1));
        h = mix64(h + 0x9e3779b97f4a7c15ULL * (key.purpose + 1));
        std::uint64_t sm = h;
        for (auto& s : state_) {
            sm += 0x9e3779b97f4a7c15ULL;
            s = mix64(sm);
        }
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return next_double() < p; }

    // Uniform integer in [0, n), n >= 1. Modulo bias is < 2^-32 for the
    // small n used here (2 or 4 choices).
    std::uint32_t uniform_index(std::uint32_t n) {
        return static_cast<std::uint32_t>(next_u64() % n);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

// Exact sampling helpers built on Stream. Declared here, defined in rng.cpp.

// Number of slots skipped before the next success of a Bernoulli(p) process,
// i.e. a geometric variate counting failures. Returns a value > remaining
// when no success occurs within `remaining` trials.
std::uint64_t geometric_skip(Stream& rng, double p, std::uint64_t remaining);

// Exact Binomial(n, p) sample. Uses geometric skip-counting for small n*p
// and inversion from the mode otherwise; both follow the exact law.
std::uint64_t binomial(Stream& rng, std::uint64_t n, double p);

}  // namespace bellsim::rng
