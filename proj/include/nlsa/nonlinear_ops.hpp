#pragma once

#include <vector>

#include "nlsa/fabric.hpp"

namespace nlsa {

struct RunOptions {
    /// Index segments by division instead of the shift hardware path, which
    /// admits any granularity. Cycle accounting is unchanged.
    bool functional = false;
};

struct NonlinearLayerResult {
    QuantizedMatrix y;
    CycleReport report;
};

/// One whole nonlinear operator on the fabric: sim_ipf, stream rearrangement,
/// sim_mhp. Bit-exact against the functional ipf+mhp composition; the report
/// aggregates the IPF and MHP phases.
NonlinearLayerResult run_cpwl_layer(const QuantizedMatrix& x, const SegmentTable& table,
                                    const SystolicConfig& cfg, const RunOptions& opts = {});

NonlinearLayerResult run_gelu_layer(const QuantizedMatrix& x, const SegmentTable& table,
                                    const SystolicConfig& cfg);

struct SoftmaxResult {
    QuantizedMatrix y;
    CycleReport report;
    /// Rows whose exponential sum underflowed to zero; their outputs are 0.
    std::vector<Eigen::Index> error_rows;
};

/// Row-wise softmax decomposed onto the two fabric primitives: row-max
/// subtraction (MHP with K=1, B=-rowmax), CPWL EXP, row sums as a GEMM with
/// a ones vector, CPWL RECIPROCAL, and a final Hadamard scale. The EXP table
/// should cover max-subtracted inputs, i.e. reach up to 0.
SoftmaxResult run_softmax(const QuantizedMatrix& x, const SegmentTable& exp_table,
                          const SegmentTable& recip_table, const SystolicConfig& cfg,
                          const RunOptions& opts = {});

struct LayernormResult {
    QuantizedMatrix y;
    CycleReport report;
    /// Rows whose var + eps fell below the RSQRT table domain (capped).
    std::vector<Eigen::Index> capped_rows;
};

/// Row-wise layer normalization from GEMM reductions (mean, mean of squares
/// via ones vectors), Hadamard squares, CPWL RSQRT on var + eps, and Hadamard
/// scale/shift by gamma and beta.
LayernormResult run_layernorm(const QuantizedMatrix& x, const SegmentTable& rsqrt_table,
                              const RealVector& gamma, const RealVector& beta,
                              const SystolicConfig& cfg, const RunOptions& opts = {},
                              double epsilon = 0.00390625);

}  // namespace nlsa
