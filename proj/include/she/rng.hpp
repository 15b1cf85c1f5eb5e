// Seed derivation and Gaussian streams. Replica and per-step substream seeds
// are derived from a master seed by counter mixing, so every replica (and
// every step within it) is reproducible in isolation.
#pragma once

#include <cstdint>
#include <random>

namespace she {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(a) ^ (0x9e3779b97f4a7c15ULL + b));
}

inline std::uint64_t replica_seed(std::uint64_t master, std::uint64_t replica) {
    return mix_seed(master, replica);
}

class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t key) {
        std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                          static_cast<std::uint32_t>(splitmix64(key)),
                          static_cast<std::uint32_t>(splitmix64(key) >> 32)};
        eng_.seed(seq);
    }
    double next() { return normal_(eng_); }
    double uniform() { return unif_(eng_); }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

}  // namespace she
