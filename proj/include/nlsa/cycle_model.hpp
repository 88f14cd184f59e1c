#pragma once

#include <cstdint>

#include "nlsa/systolic_config.hpp"

namespace nlsa {

/// Phase-decomposed cycle count of one simulated operation, plus the derived
/// throughput metrics. Phases are modeled sequentially, so
/// total = fill + compute + drain + ipf.
struct CycleReport {
    std::int64_t fill_cycles = 0;
    std::int64_t compute_cycles = 0;
    std::int64_t drain_cycles = 0;
    std::int64_t ipf_cycles = 0;
    std::int64_t total_cycles = 0;
    std::int64_t mac_ops = 0;
    std::int64_t nonlinear_evals = 0;
    double utilization = 0.0;
    double gops = 0.0;
    double gnfs = 0.0;

    /// Sums totals and fills in utilization/GOPS/GNFS for the given fabric.
    void finalize(const SystolicConfig& cfg);

    /// Phase-wise accumulation for multi-stage runs; call finalize afterwards.
    CycleReport& operator+=(const CycleReport& other);
};

/// Cycle cost of an M x N x K GEMM. The problem tiles into
/// ceil(M/R) * ceil(N/C) output tiles; each tile streams the contraction
/// dimension in chunks of cfg.k_tile() through the PE buffers. Per chunk the
/// array pays the input skew (rows_used-1 + cols_used-1, i.e. R+C-2 on full
/// tiles) and ceil(chunk/m) compute cycles; the accumulators hold partial
/// sums across chunks, so each output tile drains once at
/// ceil(R*C/output_bus_width) cycles.
CycleReport gemm_cycle_model(std::int64_t m_dim, std::int64_t n_dim, std::int64_t k_dim,
                             const SystolicConfig& cfg);

/// Cycle cost of an M x N Hadamard pass. Rows map onto D = min(R, C)
/// diagonal lanes in bands; per band the deepest lane pays its traversal as
/// fill, each lane computes ceil(2*N/m) cycles (one output consumes two
/// multiplier lanes), and every output column drains as one wave of
/// ceil(lanes_used/output_bus_width) cycles.
CycleReport mhp_cycle_model(std::int64_t m_dim, std::int64_t n_dim, const SystolicConfig& cfg);

/// Cycles for the L3 addressing pipeline to map M*N elements to parameters:
/// ceil(M*N / (ipf_ports * l3_instances)) plus the pipeline depth and the
/// configured DRAM round trip.
std::int64_t ipf_cycle_count(std::int64_t m_dim, std::int64_t n_dim, const SystolicConfig& cfg);

}  // namespace nlsa
