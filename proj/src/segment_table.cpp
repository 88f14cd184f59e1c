#include "nlsa/segment_table.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nlsa {

std::string nonlinearity_name(Nonlinearity fn) {
    switch (fn) {
        case Nonlinearity::kGelu: return "gelu";
        case Nonlinearity::kExp: return "exp";
        case Nonlinearity::kReciprocal: return "reciprocal";
        case Nonlinearity::kRsqrt: return "rsqrt";
        case Nonlinearity::kTanh: return "tanh";
        case Nonlinearity::kSigmoid: return "sigmoid";
        case Nonlinearity::kIdentity: return "identity";
        case Nonlinearity::kRelu: return "relu";
    }
    throw std::logic_error("nonlinearity_name: bad enum");
}

Nonlinearity parse_nonlinearity(const std::string& name) {
    if (name == "gelu") return Nonlinearity::kGelu;
    if (name == "exp") return Nonlinearity::kExp;
    if (name == "reciprocal") return Nonlinearity::kReciprocal;
    if (name == "rsqrt") return Nonlinearity::kRsqrt;
    if (name == "tanh") return Nonlinearity::kTanh;
    if (name == "sigmoid") return Nonlinearity::kSigmoid;
    if (name == "identity") return Nonlinearity::kIdentity;
    if (name == "relu") return Nonlinearity::kRelu;
    throw std::invalid_argument("unknown nonlinearity: " + name);
}

double reference_eval(Nonlinearity fn, double x) {
    switch (fn) {
        case Nonlinearity::kGelu:
            return 0.5 * x * (1.0 + std::erf(x * 0.70710678118654752440));
        case Nonlinearity::kExp:
            return std::exp(x);
        case Nonlinearity::kReciprocal:
            return 1.0 / x;
        case Nonlinearity::kRsqrt:
            return 1.0 / std::sqrt(x);
        case Nonlinearity::kTanh:
            return std::tanh(x);
        case Nonlinearity::kSigmoid:
            return 1.0 / (1.0 + std::exp(-x));
        case Nonlinearity::kIdentity:
            return x;
        case Nonlinearity::kRelu:
            return x > 0.0 ? x : 0.0;
    }
    throw std::logic_error("reference_eval: bad enum");
}

std::optional<int> power_of_two_exponent(double g) {
    if (!(g > 0.0) || !std::isfinite(g)) return std::nullopt;
    int exp = 0;
    const double mant = std::frexp(g, &exp);  // g = mant * 2^exp, mant in [0.5, 1)
    if (mant != 0.5) return std::nullopt;
    return exp - 1;
}

namespace {

// Bounds are kept at integer multiples of g so the segment count is exact
// for any granularity, including the non-power-of-two ones.
double snap_out(double magnitude, double g) {
    return std::ceil(magnitude / g - 1e-9) * g;
}

double snap_in(double magnitude, double g) {
    return std::floor(magnitude / g + 1e-9) * g;
}

}  // namespace

CapBounds default_cap_bounds(Nonlinearity fn, double granularity) {
    switch (fn) {
        case Nonlinearity::kExp:
            return {-snap_out(8.0, granularity), snap_out(4.0, granularity)};
        case Nonlinearity::kReciprocal:
        case Nonlinearity::kRsqrt:
            return {std::max(granularity, snap_in(0.0625, granularity)),
                    snap_out(8.0, granularity)};
        default:
            return {-snap_out(8.0, granularity), snap_out(8.0, granularity)};
    }
}

namespace {

int resolve_segment_count(double x_min, double x_max, double g) {
    if (!(g > 0.0)) throw std::invalid_argument("segment table: granularity must be positive");
    if (!(x_max > x_min)) throw std::invalid_argument("segment table: x_max must exceed x_min");
    const double exact = (x_max - x_min) / g;
    const double rounded = std::round(exact);
    if (rounded < 1.0 || std::abs(exact - rounded) > 1e-9 * std::max(1.0, exact)) {
        throw std::invalid_argument("segment table: (x_max - x_min)/granularity must be a positive integer");
    }
    if (rounded > 65536.0) throw std::invalid_argument("segment table: too many segments");
    return static_cast<int>(rounded);
}

void check_domain(Nonlinearity fn, double x_min) {
    if ((fn == Nonlinearity::kReciprocal || fn == Nonlinearity::kRsqrt) && !(x_min > 0.0)) {
        throw std::invalid_argument(nonlinearity_name(fn) + " table requires x_min > 0");
    }
}

// Widest fractional count (fewest integer bits) that represents max_abs
// without saturating, bounded above by `cap` fractional bits.
FixedPointFormat fit_format(double max_abs, int cap) {
    for (int frac = cap; frac >= 0; --frac) {
        const FixedPointFormat fmt{frac};
        if (max_abs <= fmt.max_value() && -max_abs >= fmt.min_value()) return fmt;
    }
    return FixedPointFormat{0};
}

double max_abs_chord_slope(Nonlinearity fn, double g, CapBounds bounds) {
    const int n = resolve_segment_count(bounds.x_min, bounds.x_max, g);
    double worst = 0.0;
    for (int s = 0; s < n; ++s) {
        const double x0 = bounds.x_min + s * g;
        const double k = (reference_eval(fn, x0 + g) - reference_eval(fn, x0)) / g;
        worst = std::max(worst, std::abs(k));
    }
    return worst;
}

double max_abs_intercept(Nonlinearity fn, double g, CapBounds bounds) {
    const int n = resolve_segment_count(bounds.x_min, bounds.x_max, g);
    double worst = 0.0;
    for (int s = 0; s < n; ++s) {
        const double x0 = bounds.x_min + s * g;
        const double k = (reference_eval(fn, x0 + g) - reference_eval(fn, x0)) / g;
        worst = std::max(worst, std::abs(reference_eval(fn, x0) - k * x0));
    }
    return worst;
}

}  // namespace

FixedPointFormat fit_slope_format(Nonlinearity fn, double g, CapBounds bounds) {
    return fit_format(max_abs_chord_slope(fn, g, bounds), 13);
}

FixedPointFormat fit_intercept_format(Nonlinearity fn, double g, CapBounds bounds) {
    return fit_format(max_abs_intercept(fn, g, bounds), 8);
}

SegmentTable build_segment_table(Nonlinearity fn, double granularity, double x_min, double x_max,
                                 FixedPointFormat format_k, FixedPointFormat format_b) {
    if (!format_k.valid() || !format_b.valid()) {
        throw std::invalid_argument("segment table: invalid parameter format");
    }
    check_domain(fn, x_min);
    const int n = resolve_segment_count(x_min, x_max, granularity);

    SegmentTable table;
    table.function = fn;
    table.granularity = granularity;
    table.x_min = x_min;
    table.x_max = x_max;
    table.num_segments = n;
    table.format_k = format_k;
    table.format_b = format_b;
    table.shift_exponent = power_of_two_exponent(granularity);
    table.k_values.resize(n);
    table.b_values.resize(n);

    for (int s = 0; s < n; ++s) {
        const double x0 = x_min + s * granularity;
        const double x1 = x0 + granularity;
        const double k = (reference_eval(fn, x1) - reference_eval(fn, x0)) / granularity;
        table.k_values[s] = quantize(k, format_k);
        // Intercept uses the quantized slope so the chord still passes
        // through f(x0) after rounding.
        const double b = reference_eval(fn, x0) - dequantize(table.k_values[s], format_k) * x0;
        table.b_values[s] = quantize(b, format_b);
    }
    return table;
}

SegmentTable make_table(Nonlinearity fn, double granularity) {
    const CapBounds bounds = default_cap_bounds(fn, granularity);
    return build_segment_table(fn, granularity, bounds.x_min, bounds.x_max,
                               fit_slope_format(fn, granularity, bounds),
                               fit_intercept_format(fn, granularity, bounds));
}

FixedPointFormat parse_format(const std::string& name) {
    if (name.size() < 4 || name[0] != 'Q') throw std::invalid_argument("bad format name: " + name);
    const auto dot = name.find('.');
    if (dot == std::string::npos) throw std::invalid_argument("bad format name: " + name);
    int int_bits = 0;
    int frac_bits = 0;
    try {
        int_bits = std::stoi(name.substr(1, dot - 1));
        frac_bits = std::stoi(name.substr(dot + 1));
    } catch (const std::exception&) {
        throw std::invalid_argument("bad format name: " + name);
    }
    // Both naming conventions are accepted: m counting the sign bit
    // (Q8.8, m+n=16) and m excluding it (Q2.13, m+n=15). Canonical output
    // uses the former.
    const int total = int_bits + frac_bits;
    if ((total != 16 && total != 15) || frac_bits < 0 || frac_bits > 15) {
        throw std::invalid_argument("format must be Qm.n with m+n in {15,16}, 0<=n<=15: " + name);
    }
    return FixedPointFormat{frac_bits};
}

}  // namespace nlsa
