#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace charmend {

/// Deterministic 64-bit generator (SplitMix64, Steele et al. 2014).
///
/// All randomness in the library flows through explicitly threaded Rng
/// instances; there is no global state. The same seed yields the same
/// stream on every platform, which is what makes training runs and
/// corpus corruption bit-reproducible.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 bits of mantissa.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive. Modulo bias is
    /// negligible at the corpus sizes used here and keeps the stream
    /// consumption to exactly one draw per call.
    size_t uniform_index(size_t n) { return static_cast<size_t>(next_u64() % n); }

    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

/// Derives a module- or stream-specific seed from a base seed and a tag.
/// FNV-1a over the tag, mixed with the base seed through one SplitMix64
/// round, so `derive_seed(s, "trainer")` and `derive_seed(s, "synth")`
/// give unrelated streams for any s.
inline uint64_t derive_seed(uint64_t base, std::string_view tag) {
    uint64_t h = 1469598103934665603ull;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    Rng mix(base ^ h);
    return mix.next_u64();
}

}  // namespace charmend
