#pragma once

#include <cstdint>
#include <cmath>

namespace nlsa {

/// Counter-based deterministic random generator. Every draw is a pure
/// function of (seed, stream, counter):
///
///   word(n) = mix(seed ^ mix(stream ^ mix(n)))
///
/// where mix is the splitmix64 finalizer
///   z += 0x9E3779B97F4A7C15
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   z =  z ^ (z >> 31)
///
/// uniform() = word / 2^64 in [0, 1); normal() is Box-Muller on two
/// consecutive uniforms. The stream id separates independent substreams
/// (matrices, labels, noise, ...) drawn from one experiment seed, so any
/// reimplementation can match the byte stream exactly.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {}

    std::uint64_t next_word() { return word(counter_++); }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_word() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; consumes two counters.
    double normal() {
        const double u1 = (static_cast<double>(next_word() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(next_word() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<std::int64_t>(next_word() % span);
    }

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t word(std::uint64_t n) const { return mix(seed_ ^ mix(stream_ ^ mix(n))); }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

}  // namespace nlsa
