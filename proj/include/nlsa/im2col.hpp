#pragma once

#include "nlsa/quantized_matrix.hpp"

namespace nlsa {

/// Convolution geometry over NCHW inputs.
struct ConvGeometry {
    int in_channels = 1;
    int in_height = 1;
    int in_width = 1;
    int kernel_h = 1;
    int kernel_w = 1;
    int stride = 1;
    int padding = 0;

    int out_height() const { return (in_height + 2 * padding - kernel_h) / stride + 1; }
    int out_width() const { return (in_width + 2 * padding - kernel_w) / stride + 1; }

    void validate() const;
};

/// Unrolls padded input patches so convolution becomes one GEMM:
///   conv(weights, input) = weights_as_rows [out_ch x C*kh*kw] * patches.
///
/// `input` holds the batch as rows of flattened C*H*W values. The patch
/// matrix has C*kh*kw rows (row index c*kh*kw + ki*kw + kj, row-major kernel
/// order) and N*oh*ow columns (column index n*oh*ow + oy*ow + ox). Padding
/// contributes zeros. The column indexing is the inverse mapping back to
/// output pixels.
QuantizedMatrix im2col(const QuantizedMatrix& input, const ConvGeometry& geom);

}  // namespace nlsa
