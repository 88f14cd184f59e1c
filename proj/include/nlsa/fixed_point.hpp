#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nlsa {

/// Signed 16-bit fixed-point layout Qm.n with m = 16 - frac_bits integer bits
/// (sign included) and n = frac_bits fractional bits. Representable range is
/// [-2^(15-n), 2^(15-n) - 2^-n].
struct FixedPointFormat {
    int frac_bits = 8;

    static constexpr int kTotalBits = 16;

    bool valid() const { return frac_bits >= 0 && frac_bits <= 15; }

    double step() const { return std::ldexp(1.0, -frac_bits); }
    double min_value() const { return -std::ldexp(1.0, 15 - frac_bits); }
    double max_value() const { return std::ldexp(1.0, 15 - frac_bits) - step(); }

    std::string name() const {
        return "Q" + std::to_string(kTotalBits - frac_bits) + "." + std::to_string(frac_bits);
    }

    friend bool operator==(FixedPointFormat a, FixedPointFormat b) {
        return a.frac_bits == b.frac_bits;
    }
    friend bool operator!=(FixedPointFormat a, FixedPointFormat b) { return !(a == b); }
};

/// Parses "Q8.8"-style names. Throws std::invalid_argument on malformed input.
FixedPointFormat parse_format(const std::string& name);

inline constexpr std::int16_t kInt16Min = -32768;
inline constexpr std::int16_t kInt16Max = 32767;

inline std::int16_t saturate16(std::int64_t v) {
    if (v > kInt16Max) return kInt16Max;
    if (v < kInt16Min) return kInt16Min;
    return static_cast<std::int16_t>(v);
}

/// Round-to-nearest-even of a double, as an int64. Assumes |x| < 2^62.
inline std::int64_t round_nearest_even(double x) {
    const double fl = std::floor(x);
    const double diff = x - fl;
    auto base = static_cast<std::int64_t>(fl);
    if (diff > 0.5) return base + 1;
    if (diff < 0.5) return base;
    return (base % 2 == 0) ? base : base + 1;
}

/// Scales x by 2^frac_bits, rounds to nearest even, saturates to int16.
/// Never overflows: out-of-range and non-finite inputs clamp to the rails
/// (NaN maps to 0).
inline std::int16_t quantize(double x, FixedPointFormat fmt) {
    const double scaled = std::ldexp(x, fmt.frac_bits);
    if (std::isnan(scaled)) return 0;
    if (scaled >= 65536.0) return kInt16Max;
    if (scaled <= -65536.0) return kInt16Min;
    return saturate16(round_nearest_even(scaled));
}

inline double dequantize(std::int16_t v, FixedPointFormat fmt) {
    return std::ldexp(static_cast<double>(v), -fmt.frac_bits);
}

/// Shifts a fixed-point integer right by `shift` bits with round-to-nearest-even,
/// i.e. RNE(v / 2^shift). Negative shift is an exact left shift. |shift| must
/// stay below 62 and left shifts must not overflow int64; callers keep values
/// within 48 bits, which every 16x16-bit product path here does.
inline std::int64_t rne_shift(std::int64_t v, int shift) {
    if (shift <= 0) return v << -shift;
    if (shift >= 63) return 0;
    const std::int64_t floor_part = v >> shift;
    const std::int64_t rem = v - (floor_part << shift);
    const std::int64_t half = std::int64_t(1) << (shift - 1);
    if (rem > half) return floor_part + 1;
    if (rem < half) return floor_part;
    return (floor_part & 1) ? floor_part + 1 : floor_part;
}

/// Re-expresses a value held with `from_frac` fractional bits in `to_frac`
/// fractional bits (RNE when narrowing, exact when widening).
inline std::int64_t align_frac(std::int64_t v, int from_frac, int to_frac) {
    return rne_shift(v, from_frac - to_frac);
}

/// Final rounding of a wide accumulator carrying `from_frac` fractional bits
/// into a 16-bit output format: single RNE, saturating.
inline std::int16_t requantize(std::int64_t acc, int from_frac, FixedPointFormat out) {
    return saturate16(rne_shift(acc, from_frac - out.frac_bits));
}

}  // namespace nlsa
