// File: rng.hpp
// Description: Seed derivation and a deterministic RNG wrapper whose output
// is reproducible across platforms and thread counts.
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace apm {

// SplitMix64 finalizer.  Used both as a bit mixer for seed derivation and as
// a cheap stable hash combiner.
constexpr auto splitmix64(std::uint64_t x) -> std::uint64_t {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Fold `value` into a running hash/seed.
constexpr auto mix_u64(std::uint64_t h, std::uint64_t value) -> std::uint64_t {
    return splitmix64(h ^ (value + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

// Derive a child seed from an ordered list of parts.  Children with different
// part lists are decorrelated; the derivation is pure so concurrent callers
// can build their own streams without shared state.
inline auto derive_seed(std::initializer_list<std::uint64_t> parts) -> std::uint64_t {
    std::uint64_t h = 0x8f3b0c7a55d1e2c3ULL;
    for (auto p : parts) h = mix_u64(h, p);
    return h;
}

// Deterministic RNG.  std::mt19937_64 has a standardized output sequence, and
// all distributions below are hand-mapped from raw draws (the standard
// distribution objects are implementation-defined and would break golden
// values across toolchains).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    auto next_u64() -> std::uint64_t { return engine_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    auto next_double() -> double {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n).  Lemire multiply-shift; bias is O(n / 2^64).
    auto next_below(std::uint64_t n) -> std::uint64_t {
        using u128 = unsigned __int128;
        return static_cast<std::uint64_t>((static_cast<u128>(next_u64()) * n) >> 64);
    }

    // Uniform integer in [lo, hi] inclusive.
    auto next_int(int lo, int hi) -> int {
        return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    auto bernoulli(double p) -> bool { return next_double() < p; }

  private:
    std::mt19937_64 engine_;
};

}  // namespace apm
