#pragma once

#include <optional>

#include "nlsa/cpwl.hpp"
#include "nlsa/cycle_model.hpp"
#include "nlsa/pe_grid.hpp"
#include "nlsa/quantized_matrix.hpp"
#include "nlsa/streams.hpp"
#include "nlsa/systolic_config.hpp"

namespace nlsa {

struct GemmOptions {
    /// Runs the classic array model with the nonlinear-mode control logic
    /// absent, for non-interference regression checks.
    bool baseline_model = false;
    /// Output format; defaults to the left operand's.
    std::optional<FixedPointFormat> out_format;
};

struct GemmResult {
    QuantizedMatrix c;
    CycleReport report;
    PEGrid grid;
};

/// Output-stationary GEMM on the PE grid: operands stream through the array
/// in contraction chunks, partial sums stay in 32-bit PE accumulators, each
/// element rounds once into the output format. Bit-exact against a direct
/// 32-bit-accumulator matmul.
GemmResult sim_gemm(const QuantizedMatrix& a, const QuantizedMatrix& w, const SystolicConfig& cfg,
                    const GemmOptions& opts = {});

struct MhpResult {
    QuantizedMatrix y;
    CycleReport report;
    PEGrid grid;
};

struct MhpOptions {
    std::optional<FixedPointFormat> out_format;
    /// Test hook: corrupt this PE's control flags before simulation so the
    /// per-step mode validation can be demonstrated to fire.
    std::optional<std::pair<int, int>> inject_control_fault;
};

/// Hadamard pass over the reconfigured grid: pairs travel through
/// transmission PEs to the diagonal, where each computation PE spends two
/// multiplier lanes on x*k and 1*b and writes the first adder layer's result
/// out. Bit-exact against functional mhp().
MhpResult sim_mhp(const InterleavedStream& xs, const InterleavedStream& kbs,
                  const SystolicConfig& cfg, const MhpOptions& opts = {});

struct SimIpfResult {
    QuantizedMatrix k;
    QuantizedMatrix b;
    std::int64_t ipf_cycles = 0;
};

/// L3-side parameter fetch. The fabric path requires a power-of-two
/// granularity (the data shift module); tables without shift_exponent are
/// rejected. Bit-exact against functional ipf().
SimIpfResult sim_ipf(const QuantizedMatrix& x, const SegmentTable& table,
                     const SystolicConfig& cfg);

}  // namespace nlsa
