#include "nlsa/im2col.hpp"

#include <stdexcept>

namespace nlsa {

void ConvGeometry::validate() const {
    if (in_channels <= 0 || in_height <= 0 || in_width <= 0 || kernel_h <= 0 || kernel_w <= 0) {
        throw std::invalid_argument("im2col: geometry fields must be positive");
    }
    if (stride <= 0 || padding < 0) throw std::invalid_argument("im2col: bad stride or padding");
    if (out_height() <= 0 || out_width() <= 0) {
        throw std::invalid_argument("im2col: geometry yields nonpositive output dims");
    }
}

QuantizedMatrix im2col(const QuantizedMatrix& input, const ConvGeometry& geom) {
    geom.validate();
    const Eigen::Index plane = static_cast<Eigen::Index>(geom.in_height) * geom.in_width;
    if (input.cols() != plane * geom.in_channels) {
        throw std::invalid_argument("im2col: input row length does not match C*H*W");
    }
    const int oh = geom.out_height();
    const int ow = geom.out_width();
    const Eigen::Index batch = input.rows();

    QuantizedMatrix patches;
    patches.format = input.format;
    patches.values.resize(static_cast<Eigen::Index>(geom.in_channels) * geom.kernel_h * geom.kernel_w,
                          batch * oh * ow);
    for (Eigen::Index n = 0; n < batch; ++n) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const Eigen::Index col = n * oh * ow + static_cast<Eigen::Index>(oy) * ow + ox;
                for (int c = 0; c < geom.in_channels; ++c) {
                    for (int ki = 0; ki < geom.kernel_h; ++ki) {
                        for (int kj = 0; kj < geom.kernel_w; ++kj) {
                            const int y = oy * geom.stride - geom.padding + ki;
                            const int x = ox * geom.stride - geom.padding + kj;
                            const Eigen::Index row =
                                (static_cast<Eigen::Index>(c) * geom.kernel_h + ki) * geom.kernel_w + kj;
                            std::int16_t v = 0;
                            if (y >= 0 && y < geom.in_height && x >= 0 && x < geom.in_width) {
                                v = input.values(n, c * plane + static_cast<Eigen::Index>(y) * geom.in_width + x);
                            }
                            patches.values(row, col) = v;
                        }
                    }
                }
            }
        }
    }
    return patches;
}

}  // namespace nlsa
