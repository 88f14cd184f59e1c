#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>

#include "nlsa/fixed_point.hpp"

namespace nlsa {

using Int16Matrix = Eigen::Matrix<std::int16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Int32Matrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IndexMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealVector = Eigen::VectorXd;

/// Row-major INT16 matrix with an explicit Q-format. Values are immutable by
/// convention once built; all operations return fresh matrices.
struct QuantizedMatrix {
    Int16Matrix values;
    FixedPointFormat format;

    QuantizedMatrix() = default;
    QuantizedMatrix(Int16Matrix v, FixedPointFormat f) : values(std::move(v)), format(f) {}

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
    Eigen::Index size() const { return values.size(); }

    double real_at(Eigen::Index i, Eigen::Index j) const {
        return dequantize(values(i, j), format);
    }
};

/// Saturating RNE quantization of a real matrix.
inline QuantizedMatrix quantize(const Eigen::Ref<const RealMatrix>& m, FixedPointFormat fmt) {
    if (!fmt.valid()) throw std::invalid_argument("quantize: invalid fixed-point format");
    QuantizedMatrix q;
    q.format = fmt;
    q.values = m.unaryExpr([fmt](double x) { return quantize(x, fmt); });
    return q;
}

inline RealMatrix dequantize(const QuantizedMatrix& q) {
    const FixedPointFormat fmt = q.format;
    return q.values.unaryExpr([fmt](std::int16_t v) { return dequantize(v, fmt); });
}

inline bool same_shape(const QuantizedMatrix& a, const QuantizedMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols();
}

/// A constant matrix already expressed in fmt.
inline QuantizedMatrix constant_matrix(Eigen::Index rows, Eigen::Index cols, double value,
                                       FixedPointFormat fmt) {
    QuantizedMatrix q;
    q.format = fmt;
    q.values = Int16Matrix::Constant(rows, cols, quantize(value, fmt));
    return q;
}

}  // namespace nlsa
