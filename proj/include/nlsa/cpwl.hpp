#pragma once

#include "nlsa/quantized_matrix.hpp"
#include "nlsa/segment_table.hpp"

namespace nlsa {

/// Per-element segment indices of an input matrix. Capping keeps every index
/// in [0, num_segments - 1].
struct SegmentMatrix {
    IndexMatrix indices;

    Eigen::Index rows() const { return indices.rows(); }
    Eigen::Index cols() const { return indices.cols(); }
};

/// Segment lookup for one quantized input. When the table's granularity is a
/// power of two (shift_exponent present) the index is produced by the
/// shift-and-clamp route the addressing hardware uses; otherwise by the floor
/// formula. Both routes agree whenever x_min is representable in `fmt`, which
/// holds for every default table.
int segment_index(std::int16_t xq, FixedPointFormat fmt, const SegmentTable& table);

/// Floor-formula route, usable for any granularity:
/// clamp(floor((dequantize(xq) - x_min) / g), 0, num_segments - 1).
int segment_index_reference(std::int16_t xq, FixedPointFormat fmt, const SegmentTable& table);

/// Shift route: arithmetic shift of (xq - quantize(x_min)) by
/// (frac_bits + shift_exponent), then clamp. Requires shift_exponent.
int segment_index_shift(std::int16_t xq, FixedPointFormat fmt, const SegmentTable& table);

struct IpfResult {
    SegmentMatrix segments;
    QuantizedMatrix k;
    QuantizedMatrix b;
};

/// Intermediate parameter fetch: maps every element of X to its segment and
/// gathers the slope/intercept matrices K and B.
IpfResult ipf(const QuantizedMatrix& x, const SegmentTable& table);

/// Matrix Hadamard product with intercept: Y = X (.) K + B. Products are
/// formed in 32-bit precision, B is aligned to the product's implied format,
/// and the sum is rounded once into `out_format`. This is the bit-exact
/// golden reference for the fabric MHP mode.
QuantizedMatrix mhp(const QuantizedMatrix& x, const QuantizedMatrix& k, const QuantizedMatrix& b,
                    FixedPointFormat out_format);

inline QuantizedMatrix mhp(const QuantizedMatrix& x, const QuantizedMatrix& k,
                           const QuantizedMatrix& b) {
    return mhp(x, k, b, x.format);
}

/// Scalar element of the MHP arithmetic; exposed so the fabric PE and the
/// functional path share one definition of the rounding behaviour.
std::int16_t mhp_scalar(std::int16_t x, std::int16_t k, std::int16_t b, FixedPointFormat fx,
                        FixedPointFormat fk, FixedPointFormat fb, FixedPointFormat out);

/// Quantizes x, runs the scalar ipf->mhp composition, dequantizes.
double cpwl_eval(double x, const SegmentTable& table, FixedPointFormat fmt_in);

inline double cpwl_eval(double x, const SegmentTable& table) {
    return cpwl_eval(x, table, FixedPointFormat{8});
}

struct ApproximationError {
    double max_abs_err = 0.0;
    double mean_abs_err = 0.0;
    double argmax_x = 0.0;
};

/// Dense uniform sampling of [x_min, x_max]; reports |cpwl_eval - f| against
/// the double-precision reference.
ApproximationError approximation_error_report(const SegmentTable& table, int samples,
                                              FixedPointFormat fmt_in = FixedPointFormat{8});

}  // namespace nlsa
