#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace zefchan {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ull;

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += kGoldenGamma;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Deterministic random stream.
///
/// Substreams obtained through derive_stream() depend only on
/// (master_seed, stream index), so work split across any number of workers
/// produces results identical to a serial run.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Unbiased uniform integer in [0, n), n >= 1.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - max % n;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    /// Substream seed for `stream`; documented splitting rule:
    /// seed_i = splitmix64(master ^ (i + 1) * golden-ratio increment).
    static std::uint64_t derive_stream(std::uint64_t master_seed, std::uint64_t stream) {
        return splitmix64(master_seed ^ (kGoldenGamma * (stream + 1)));
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace zefchan
