#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace diftgame {

// Domain-level failure (bad input, invalid strategy, pruning left no attack
// path, ...). The CLI maps these to exit code 1; usage errors are exit 2.
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// splitmix64 step. Full-period 64-bit mixer, good enough for Monte Carlo.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from (root, index). Used to give every
// rollout / sample its own counter-based stream so that parallel and serial
// runs see identical randomness.
inline uint64_t derive_seed(uint64_t root, uint64_t index) {
    uint64_t s = root ^ (0xD1B54A32D192ED03ULL * (index + 1));
    return splitmix64(s);
}

class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() { return splitmix64(state_); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    // Uniform in {0, ..., n-1}.
    int uniform_int(int n) { return static_cast<int>(next() % static_cast<uint64_t>(n)); }

private:
    uint64_t state_;
};

// FNV-1a over a byte string; used for artifact hashes in run manifests.
inline uint64_t fnv1a(const std::string& bytes) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace diftgame
