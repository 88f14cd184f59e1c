#include "nlsa/fabric.hpp"

#include <stdexcept>
#include <string>

namespace nlsa {

namespace {

std::int32_t wrap_add32(std::int32_t acc, std::int32_t v) {
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(acc) +
                                     static_cast<std::uint32_t>(v));
}

void step_check(const PEGrid& grid) {
    if (auto violation = grid.mode_violation()) throw InvariantViolation(*violation);
}

}  // namespace

GemmResult sim_gemm(const QuantizedMatrix& a, const QuantizedMatrix& w, const SystolicConfig& cfg,
                    const GemmOptions& opts) {
    if (a.cols() != w.rows()) throw std::invalid_argument("sim_gemm: inner dimensions disagree");
    cfg.validate();

    const auto m_dim = a.rows();
    const auto n_dim = w.cols();
    const auto k_dim = a.cols();
    const FixedPointFormat out_fmt = opts.out_format.value_or(a.format);
    const int acc_frac = a.format.frac_bits + w.format.frac_bits;

    GemmResult result{QuantizedMatrix{Int16Matrix(m_dim, n_dim), out_fmt},
                      gemm_cycle_model(m_dim, n_dim, k_dim, cfg),
                      configure_grid(cfg, GridMode::kGemm)};
    PEGrid& grid = result.grid;

    for (Eigen::Index r0 = 0; r0 < m_dim; r0 += cfg.pe_rows) {
        const int rows_used = static_cast<int>(std::min<Eigen::Index>(cfg.pe_rows, m_dim - r0));
        for (Eigen::Index c0 = 0; c0 < n_dim; c0 += cfg.pe_cols) {
            const int cols_used = static_cast<int>(std::min<Eigen::Index>(cfg.pe_cols, n_dim - c0));
            for (int i = 0; i < rows_used; ++i) {
                for (int j = 0; j < cols_used; ++j) grid.at(i, j).accumulator = 0;
            }
            for (Eigen::Index k = 0; k < k_dim; ++k) {
                if (!opts.baseline_model) step_check(grid);
                for (int i = 0; i < rows_used; ++i) {
                    const std::int32_t a_val = a.values(r0 + i, k);
                    for (int j = 0; j < cols_used; ++j) {
                        PEState& pe = grid.at(i, j);
                        if (opts.baseline_model || pe.c2) {
                            const std::int32_t prod = a_val * w.values(k, c0 + j);
                            pe.accumulator = wrap_add32(pe.accumulator, prod);
                            pe.mac_activity_count += 1;
                        }
                        if (opts.baseline_model || pe.c1) {
                            pe.forwarded_count += (j + 1 < cols_used) + (i + 1 < rows_used);
                        }
                    }
                }
            }
            for (int i = 0; i < rows_used; ++i) {
                for (int j = 0; j < cols_used; ++j) {
                    result.c.values(r0 + i, c0 + j) =
                        requantize(grid.at(i, j).accumulator, acc_frac, out_fmt);
                }
            }
        }
    }
    return result;
}

MhpResult sim_mhp(const InterleavedStream& xs, const InterleavedStream& kbs,
                  const SystolicConfig& cfg, const MhpOptions& opts) {
    cfg.validate();
    if (xs.kind != StreamKind::kXOnePairs || kbs.kind != StreamKind::kKbPairs) {
        throw std::invalid_argument("sim_mhp: stream kinds must be (X_ONE_PAIRS, KB_PAIRS)");
    }
    if (xs.source_rows != kbs.source_rows || xs.source_cols != kbs.source_cols) {
        throw std::invalid_argument("sim_mhp: streams come from different shapes");
    }
    const int lanes = cfg.diagonal_lanes();
    if (xs.lane_count != lanes || kbs.lane_count != lanes) {
        throw std::invalid_argument("sim_mhp: stream lane count does not match the grid diagonal");
    }
    check_stream_shape(xs);
    check_stream_shape(kbs);

    const auto m_dim = xs.source_rows;
    const auto n_dim = xs.source_cols;
    const FixedPointFormat out_fmt = opts.out_format.value_or(xs.format_first);
    const FixedPointFormat fx = xs.format_first;
    const FixedPointFormat fk = kbs.format_first;
    const FixedPointFormat fb = kbs.format_second;
    const int prod_frac = fx.frac_bits + fk.frac_bits;

    MhpResult result{QuantizedMatrix{Int16Matrix(m_dim, n_dim), out_fmt},
                     mhp_cycle_model(m_dim, n_dim, cfg), configure_grid(cfg, GridMode::kMhp)};
    PEGrid& grid = result.grid;
    if (opts.inject_control_fault) {
        grid.override_control(opts.inject_control_fault->first, opts.inject_control_fault->second,
                              true, true);
    }

    std::vector<std::size_t> cursor(static_cast<std::size_t>(lanes), 0);
    for (Eigen::Index r0 = 0; r0 < m_dim; r0 += lanes) {
        const int lanes_used = static_cast<int>(std::min<Eigen::Index>(lanes, m_dim - r0));
        for (Eigen::Index t = 0; t < n_dim; ++t) {
            step_check(grid);
            for (int l = 0; l < lanes_used; ++l) {
                const LanePair xp = xs.lanes[l][cursor[l]];
                const LanePair kb = kbs.lanes[l][cursor[l]];
                ++cursor[l];
                // The x pair crosses the transmission PEs left of the
                // diagonal, the kb pair the ones above it.
                for (int hop = 0; hop < l; ++hop) {
                    grid.at(l, hop).forwarded_count += 1;
                    grid.at(hop, l).forwarded_count += 1;
                }
                PEState& pe = grid.at(l, l);
                pe.mac_activity_count += 2;
                const std::int64_t xk =
                    static_cast<std::int32_t>(xp.first) * static_cast<std::int32_t>(kb.first);
                const std::int64_t one_b =
                    static_cast<std::int32_t>(xp.second) * static_cast<std::int32_t>(kb.second);
                const std::int64_t sum =
                    xk + align_frac(one_b, fx.frac_bits + fb.frac_bits, prod_frac);
                pe.accumulator = static_cast<std::int32_t>(static_cast<std::uint32_t>(sum));
                result.y.values(r0 + l, t) = requantize(sum, prod_frac, out_fmt);
            }
        }
    }
    return result;
}

SimIpfResult sim_ipf(const QuantizedMatrix& x, const SegmentTable& table,
                     const SystolicConfig& cfg) {
    cfg.validate();
    if (!table.shift_exponent) {
        throw std::invalid_argument(
            "sim_ipf: fabric path requires a power-of-two granularity (no shift exponent)");
    }
    const std::int64_t param_bytes = static_cast<std::int64_t>(table.num_segments) * 4;
    if (param_bytes > static_cast<std::int64_t>(cfg.l3_buffer_bytes) * cfg.l3_instances) {
        throw std::invalid_argument("sim_ipf: segment parameters exceed L3 capacity (" +
                                    std::to_string(param_bytes) + " bytes)");
    }

    SimIpfResult result;
    result.k.format = table.format_k;
    result.b.format = table.format_b;
    result.k.values.resize(x.rows(), x.cols());
    result.b.values.resize(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            // Shift module computes the raw segment, scale module clamps it.
            const int s = segment_index_shift(x.values(i, j), x.format, table);
            result.k.values(i, j) = table.k_values[s];
            result.b.values(i, j) = table.b_values[s];
        }
    }
    result.ipf_cycles = ipf_cycle_count(x.rows(), x.cols(), cfg);
    return result;
}

}  // namespace nlsa
