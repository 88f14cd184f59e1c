#include "nlsa/cpwl.hpp"

#include <cmath>
#include <stdexcept>

namespace nlsa {

namespace {

int clamp_index(std::int64_t s, int num_segments) {
    if (s < 0) return 0;
    if (s >= num_segments) return num_segments - 1;
    return static_cast<int>(s);
}

}  // namespace

int segment_index_reference(std::int16_t xq, FixedPointFormat fmt, const SegmentTable& table) {
    const double x = dequantize(xq, fmt);
    const double raw = std::floor((x - table.x_min) / table.granularity);
    if (raw <= 0.0) return 0;
    if (raw >= static_cast<double>(table.num_segments)) return table.num_segments - 1;
    return static_cast<int>(raw);
}

int segment_index_shift(std::int16_t xq, FixedPointFormat fmt, const SegmentTable& table) {
    if (!table.shift_exponent) {
        throw std::invalid_argument("segment_index_shift: granularity is not a power of two");
    }
    const std::int64_t offset = static_cast<std::int64_t>(xq) - quantize(table.x_min, fmt);
    const int shift = fmt.frac_bits + *table.shift_exponent;
    // Arithmetic right shift is floor division by 2^shift; a negative count
    // means the segment is finer than one quantization step, so shift left.
    const std::int64_t s = shift >= 0 ? (offset >> shift) : (offset << -shift);
    return clamp_index(s, table.num_segments);
}

int segment_index(std::int16_t xq, FixedPointFormat fmt, const SegmentTable& table) {
    if (table.shift_exponent) return segment_index_shift(xq, fmt, table);
    return segment_index_reference(xq, fmt, table);
}

IpfResult ipf(const QuantizedMatrix& x, const SegmentTable& table) {
    IpfResult r;
    r.segments.indices.resize(x.rows(), x.cols());
    r.k.format = table.format_k;
    r.b.format = table.format_b;
    r.k.values.resize(x.rows(), x.cols());
    r.b.values.resize(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const int s = segment_index(x.values(i, j), x.format, table);
            r.segments.indices(i, j) = s;
            r.k.values(i, j) = table.k_values[s];
            r.b.values(i, j) = table.b_values[s];
        }
    }
    return r;
}

std::int16_t mhp_scalar(std::int16_t x, std::int16_t k, std::int16_t b, FixedPointFormat fx,
                        FixedPointFormat fk, FixedPointFormat fb, FixedPointFormat out) {
    const int prod_frac = fx.frac_bits + fk.frac_bits;
    const std::int64_t prod = static_cast<std::int32_t>(x) * static_cast<std::int32_t>(k);
    const std::int64_t b_aligned = align_frac(b, fb.frac_bits, prod_frac);
    return requantize(prod + b_aligned, prod_frac, out);
}

QuantizedMatrix mhp(const QuantizedMatrix& x, const QuantizedMatrix& k, const QuantizedMatrix& b,
                    FixedPointFormat out_format) {
    if (!same_shape(x, k) || !same_shape(x, b)) {
        throw std::invalid_argument("mhp: X, K, B shapes must match");
    }
    QuantizedMatrix y;
    y.format = out_format;
    y.values.resize(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            y.values(i, j) = mhp_scalar(x.values(i, j), k.values(i, j), b.values(i, j), x.format,
                                        k.format, b.format, out_format);
        }
    }
    return y;
}

double cpwl_eval(double x, const SegmentTable& table, FixedPointFormat fmt_in) {
    const std::int16_t xq = quantize(x, fmt_in);
    const int s = segment_index(xq, fmt_in, table);
    const std::int16_t yq = mhp_scalar(xq, table.k_values[s], table.b_values[s], fmt_in,
                                       table.format_k, table.format_b, fmt_in);
    return dequantize(yq, fmt_in);
}

ApproximationError approximation_error_report(const SegmentTable& table, int samples,
                                              FixedPointFormat fmt_in) {
    if (samples < 2) throw std::invalid_argument("approximation_error_report: samples must be >= 2");
    ApproximationError rep;
    double total = 0.0;
    const double span = table.x_max - table.x_min;
    for (int i = 0; i < samples; ++i) {
        const double x = table.x_min + span * i / (samples - 1);
        const double err = std::abs(cpwl_eval(x, table, fmt_in) - reference_eval(table.function, x));
        total += err;
        if (err > rep.max_abs_err) {
            rep.max_abs_err = err;
            rep.argmax_x = x;
        }
    }
    rep.mean_abs_err = total / samples;
    return rep;
}

}  // namespace nlsa
