#include "nlsa/streams.hpp"

#include <stdexcept>

namespace nlsa {

namespace {

InterleavedStream make_stream(StreamKind kind, Eigen::Index rows, Eigen::Index cols,
                              FixedPointFormat first, FixedPointFormat second,
                              const SystolicConfig& cfg) {
    cfg.validate();
    InterleavedStream s;
    s.kind = kind;
    s.lane_count = cfg.diagonal_lanes();
    s.source_rows = rows;
    s.source_cols = cols;
    s.format_first = first;
    s.format_second = second;
    s.lanes.resize(static_cast<std::size_t>(s.lane_count));
    return s;
}

}  // namespace

InterleavedStream rearrange_kb(const QuantizedMatrix& k, const QuantizedMatrix& b,
                               const SystolicConfig& cfg) {
    if (!same_shape(k, b)) throw std::invalid_argument("rearrange_kb: K and B shapes must match");
    InterleavedStream s =
        make_stream(StreamKind::kKbPairs, k.rows(), k.cols(), k.format, b.format, cfg);
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
        auto& lane = s.lanes[static_cast<std::size_t>(i % s.lane_count)];
        for (Eigen::Index j = 0; j < k.cols(); ++j) {
            lane.push_back({k.values(i, j), b.values(i, j)});
        }
    }
    return s;
}

InterleavedStream rearrange_x(const QuantizedMatrix& x, const SystolicConfig& cfg) {
    if (x.format.frac_bits > 14) {
        throw std::invalid_argument("rearrange_x: format cannot represent the constant 1.0");
    }
    const std::int16_t one = quantize(1.0, x.format);
    InterleavedStream s =
        make_stream(StreamKind::kXOnePairs, x.rows(), x.cols(), x.format, x.format, cfg);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        auto& lane = s.lanes[static_cast<std::size_t>(i % s.lane_count)];
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            lane.push_back({x.values(i, j), one});
        }
    }
    return s;
}

std::size_t expected_lane_pairs(Eigen::Index rows, Eigen::Index cols, int lane_count, int lane) {
    if (rows <= lane) return 0;
    const auto assigned_rows = static_cast<std::size_t>((rows - 1 - lane) / lane_count + 1);
    return assigned_rows * static_cast<std::size_t>(cols);
}

void check_stream_shape(const InterleavedStream& s) {
    if (s.lane_count <= 0 || s.lanes.size() != static_cast<std::size_t>(s.lane_count)) {
        throw std::invalid_argument("stream: malformed lanes");
    }
    for (int l = 0; l < s.lane_count; ++l) {
        if (s.lanes[static_cast<std::size_t>(l)].size() !=
            expected_lane_pairs(s.source_rows, s.source_cols, s.lane_count, l)) {
            throw std::invalid_argument("stream: lane " + std::to_string(l) +
                                        " does not match the source shape");
        }
    }
}

namespace {

// Undoes the band/lane assignment; `select` picks which half-word of each
// pair lands in the output matrix.
template <typename Select>
Int16Matrix gather(const InterleavedStream& s, Select select) {
    Int16Matrix m(s.source_rows, s.source_cols);
    std::vector<std::size_t> cursor(s.lanes.size(), 0);
    for (Eigen::Index i = 0; i < s.source_rows; ++i) {
        const auto lane = static_cast<std::size_t>(i % s.lane_count);
        for (Eigen::Index j = 0; j < s.source_cols; ++j) {
            m(i, j) = select(s.lanes[lane][cursor[lane]++]);
        }
    }
    return m;
}

void check_consistent(const InterleavedStream& s, StreamKind want) {
    if (s.kind != want) throw std::invalid_argument("deinterleave: wrong stream kind");
    check_stream_shape(s);
}

}  // namespace

std::pair<QuantizedMatrix, QuantizedMatrix> deinterleave_kb(const InterleavedStream& stream) {
    check_consistent(stream, StreamKind::kKbPairs);
    QuantizedMatrix k{gather(stream, [](LanePair p) { return p.first; }), stream.format_first};
    QuantizedMatrix b{gather(stream, [](LanePair p) { return p.second; }), stream.format_second};
    return {std::move(k), std::move(b)};
}

QuantizedMatrix deinterleave_x(const InterleavedStream& stream) {
    check_consistent(stream, StreamKind::kXOnePairs);
    return {gather(stream, [](LanePair p) { return p.first; }), stream.format_first};
}

}  // namespace nlsa
