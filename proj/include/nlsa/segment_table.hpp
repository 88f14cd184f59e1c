#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>

#include "nlsa/fixed_point.hpp"

namespace nlsa {

enum class Nonlinearity {
    kGelu,
    kExp,
    kReciprocal,
    kRsqrt,
    kTanh,
    kSigmoid,
    kIdentity,
    kRelu,
};

std::string nonlinearity_name(Nonlinearity fn);
Nonlinearity parse_nonlinearity(const std::string& name);

/// Double-precision reference value of the nonlinearity. GELU uses the exact
/// Gaussian-CDF form, not the tanh approximation.
double reference_eval(Nonlinearity fn, double x);

using Int16Vector = Eigen::Matrix<std::int16_t, Eigen::Dynamic, 1>;

/// Precomputed chord slopes and intercepts of one nonlinearity over
/// [x_min, x_max), cut into num_segments pieces of length `granularity`.
/// Segment s covers [x_min + s*g, x_min + (s+1)*g); its chord joins the
/// function values at the two endpoints. Inputs outside the covered range
/// take the boundary segment's line.
struct SegmentTable {
    Nonlinearity function = Nonlinearity::kIdentity;
    double granularity = 0.25;
    double x_min = -8.0;
    double x_max = 8.0;
    int num_segments = 0;
    FixedPointFormat format_k{13};
    FixedPointFormat format_b{8};
    /// Present iff granularity is exactly a power of two: g = 2^shift_exponent.
    std::optional<int> shift_exponent;
    Int16Vector k_values;
    Int16Vector b_values;

    double segment_start(int s) const { return x_min + s * granularity; }
    double slope_at(int s) const { return dequantize(k_values[s], format_k); }
    double intercept_at(int s) const { return dequantize(b_values[s], format_b); }
};

struct CapBounds {
    double x_min;
    double x_max;
};

/// Default cap bounds per function. GELU/TANH/SIGMOID/IDENTITY/RELU cover
/// [-8, 8), EXP [-8, 4). RECIPROCAL and RSQRT start at max(2^-4, g) so the
/// segment count stays integral for any power-of-two g up to 1.
CapBounds default_cap_bounds(Nonlinearity fn, double granularity);

/// Smallest-step slope format that holds every chord slope of fn over the
/// bounds without saturating, capped at Q2.13.
FixedPointFormat fit_slope_format(Nonlinearity fn, double granularity, CapBounds bounds);

/// Same fitting for intercepts, capped at Q8.8.
FixedPointFormat fit_intercept_format(Nonlinearity fn, double granularity, CapBounds bounds);

/// Builds the table. Rejects a non-integral segment count, nonpositive
/// granularity, and domain violations (RECIPROCAL/RSQRT need x_min > 0).
SegmentTable build_segment_table(Nonlinearity fn, double granularity, double x_min, double x_max,
                                 FixedPointFormat format_k, FixedPointFormat format_b);

/// Table over default bounds with fitted formats.
SegmentTable make_table(Nonlinearity fn, double granularity);

/// 2^e when g is exactly a power of two, else nullopt.
std::optional<int> power_of_two_exponent(double g);

}  // namespace nlsa
