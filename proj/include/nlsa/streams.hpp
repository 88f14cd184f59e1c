#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "nlsa/quantized_matrix.hpp"
#include "nlsa/systolic_config.hpp"

namespace nlsa {

enum class StreamKind { kKbPairs, kXOnePairs };

struct LanePair {
    std::int16_t first;
    std::int16_t second;
};

/// Two-value-wide data stream feeding the MHP dataflow. The source M x N
/// matrix is cut into row bands of D = min(pe_rows, pe_cols) rows; band t
/// assigns matrix row t*D + lane to `lane`, whose pairs follow that row in
/// column order. Bands are concatenated per lane, so lane L carries rows
/// L, L+D, L+2D, ... and the total pair count is M*N.
///
/// KB_PAIRS packs (K[i,j], B[i,j]); X_ONE_PAIRS packs (X[i,j], quantize(1)).
struct InterleavedStream {
    StreamKind kind = StreamKind::kXOnePairs;
    int lane_count = 0;
    Eigen::Index source_rows = 0;
    Eigen::Index source_cols = 0;
    FixedPointFormat format_first{8};
    FixedPointFormat format_second{8};
    std::vector<std::vector<LanePair>> lanes;

    std::size_t total_pairs() const {
        std::size_t n = 0;
        for (const auto& lane : lanes) n += lane.size();
        return n;
    }
};

/// Consolidates K and B into one KB_PAIRS stream. Lossless: deinterleave_kb
/// reconstructs both matrices exactly.
InterleavedStream rearrange_kb(const QuantizedMatrix& k, const QuantizedMatrix& b,
                               const SystolicConfig& cfg);

/// Pairs every element of X with the constant 1 in X's format, mirroring
/// rearrange_kb's lane assignment so pair t on lane L meets its (k, b)
/// partner at diagonal PE (L, L). X's format must represent 1.0 exactly
/// (frac_bits <= 14).
InterleavedStream rearrange_x(const QuantizedMatrix& x, const SystolicConfig& cfg);

std::pair<QuantizedMatrix, QuantizedMatrix> deinterleave_kb(const InterleavedStream& stream);
QuantizedMatrix deinterleave_x(const InterleavedStream& stream);

/// Pairs lane `lane` must carry for an M x N source: one run of N per
/// assigned row.
std::size_t expected_lane_pairs(Eigen::Index rows, Eigen::Index cols, int lane_count, int lane);

/// Throws std::invalid_argument unless every lane holds exactly its share.
void check_stream_shape(const InterleavedStream& stream);

}  // namespace nlsa
