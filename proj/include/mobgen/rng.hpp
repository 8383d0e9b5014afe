#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace mobgen {

/// splitmix64 step; used to derive well-mixed seeds from (seed, stream) pairs.
inline std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic per-stream seed derivation. Streams with the same global
/// seed but different ids are statistically independent.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t stream,
                                 std::uint64_t substream = 0)
{
    std::uint64_t s = global_seed;
    std::uint64_t a = splitmix64(s);
    s ^= stream * 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = splitmix64(s);
    s ^= substream * 0xd1b54a32d192ed03ULL;
    std::uint64_t c = splitmix64(s);
    return a ^ (b + 0x165667b19e3779f9ULL) ^ (c << 1);
}

/// Thin RNG wrapper; one instance per logical stream (per agent, per fit).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::mt19937_64& engine() { return eng_; }

    double uniform() { return uni_(eng_); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() { return normal_(eng_); }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    std::uint64_t next_u64() { return eng_(); }

    /// Index in [0, n).
    std::size_t index(std::size_t n)
    {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    /// Draw from unnormalized non-negative weights. Requires a positive total.
    std::size_t discrete(std::span<const double> weights);

    /// Draw from a cumulative weight vector (last entry = total).
    std::size_t discrete_cumulative(std::span<const double> cumulative);

private:
    std::mt19937_64 eng_;
    std::uniform_real_distribution<double> uni_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace mobgen
