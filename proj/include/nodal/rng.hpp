#pragma once

#include <cstdint>
#include <limits>

namespace nodal {

// splitmix64 finalizer; the mixing primitive behind every stream.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Key of the stream (seed, tag, index). Distinct triples give
// statistically independent streams, so the value drawn for a coefficient
// never depends on evaluation order or on how many other coefficients exist.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t tag,
                                   std::uint64_t index) noexcept {
    return splitmix64(seed ^ splitmix64(tag ^ splitmix64(index + 0x632BE59BD9B4E019ULL)));
}

// Counter-based generator: output k of stream `key` is splitmix64(key + k*phi).
// Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key = 0) noexcept : key_(key) {}
    CounterRng(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) noexcept
        : key_(stream_key(seed, tag, index)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        return splitmix64(key_ + (counter_++) * 0x9E3779B97F4A7C15ULL);
    }

    // Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal by Box-Muller; the second variate is cached.
    double normal() noexcept;

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Deterministic standard normal attached to (seed, tag, index).
double counter_normal(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) noexcept;

}  // namespace nodal
