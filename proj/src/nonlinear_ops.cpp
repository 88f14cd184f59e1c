#include "nlsa/nonlinear_ops.hpp"

#include <stdexcept>

namespace nlsa {

namespace {

const FixedPointFormat kUnitFormat{13};  // carries exact 1.0 and small scale factors

QuantizedMatrix ones_column(Eigen::Index n, FixedPointFormat fmt) {
    return constant_matrix(n, 1, 1.0, fmt);
}

/// One fabric MHP pass over prebuilt K and B operands.
MhpResult hadamard_pass(const QuantizedMatrix& x, const QuantizedMatrix& k,
                        const QuantizedMatrix& b, const SystolicConfig& cfg) {
    return sim_mhp(rearrange_x(x, cfg), rearrange_kb(k, b, cfg), cfg);
}

QuantizedMatrix broadcast_column(const QuantizedMatrix& column, Eigen::Index cols) {
    QuantizedMatrix out;
    out.format = column.format;
    out.values = column.values.replicate(1, cols);
    return out;
}

// MHP passes that only move or scale data are not nonlinear evaluations;
// their reports contribute cycles and MACs but no GNFS count.
CycleReport without_evals(CycleReport rep) {
    rep.nonlinear_evals = 0;
    return rep;
}

QuantizedMatrix negated(const QuantizedMatrix& m) {
    QuantizedMatrix out;
    out.format = m.format;
    out.values = m.values.unaryExpr(
        [](std::int16_t v) { return saturate16(-static_cast<std::int64_t>(v)); });
    return out;
}

}  // namespace

NonlinearLayerResult run_cpwl_layer(const QuantizedMatrix& x, const SegmentTable& table,
                                    const SystolicConfig& cfg, const RunOptions& opts) {
    if (opts.functional) {
        const IpfResult fetched = ipf(x, table);
        NonlinearLayerResult result{mhp(x, fetched.k, fetched.b),
                                    mhp_cycle_model(x.rows(), x.cols(), cfg)};
        result.report.ipf_cycles += ipf_cycle_count(x.rows(), x.cols(), cfg);
        result.report.finalize(cfg);
        return result;
    }
    SimIpfResult fetched = sim_ipf(x, table, cfg);
    MhpResult product = sim_mhp(rearrange_x(x, cfg), rearrange_kb(fetched.k, fetched.b, cfg), cfg);
    NonlinearLayerResult result{std::move(product.y), product.report};
    result.report.ipf_cycles += fetched.ipf_cycles;
    result.report.finalize(cfg);
    return result;
}

NonlinearLayerResult run_gelu_layer(const QuantizedMatrix& x, const SegmentTable& table,
                                    const SystolicConfig& cfg) {
    if (table.function != Nonlinearity::kGelu) {
        throw std::invalid_argument("run_gelu_layer: table does not hold GELU parameters");
    }
    return run_cpwl_layer(x, table, cfg);
}

SoftmaxResult run_softmax(const QuantizedMatrix& x, const SegmentTable& exp_table,
                          const SegmentTable& recip_table, const SystolicConfig& cfg,
                          const RunOptions& opts) {
    if (exp_table.function != Nonlinearity::kExp ||
        recip_table.function != Nonlinearity::kReciprocal) {
        throw std::invalid_argument("run_softmax: needs an EXP and a RECIPROCAL table");
    }
    const Eigen::Index rows = x.rows();
    const Eigen::Index cols = x.cols();
    SoftmaxResult result;
    CycleReport& total = result.report;

    // Row maxima come from a scan during operand staging; the subtraction
    // itself is an MHP with K=1, B=-rowmax. Subtracting the max in the same
    // format is exact, so every EXP input is <= 0.
    QuantizedMatrix row_max{Int16Matrix(rows, 1), x.format};
    for (Eigen::Index i = 0; i < rows; ++i) row_max.values(i, 0) = x.values.row(i).maxCoeff();
    const QuantizedMatrix k_one = constant_matrix(rows, cols, 1.0, kUnitFormat);
    MhpResult shifted =
        hadamard_pass(x, k_one, broadcast_column(negated(row_max), cols), cfg);
    total += without_evals(shifted.report);

    NonlinearLayerResult exps = run_cpwl_layer(shifted.y, exp_table, cfg, opts);
    total += exps.report;

    GemmResult sums = sim_gemm(exps.y, ones_column(cols, kUnitFormat), cfg);
    total += sums.report;

    for (Eigen::Index i = 0; i < rows; ++i) {
        if (sums.c.values(i, 0) <= 0) result.error_rows.push_back(i);
    }

    NonlinearLayerResult recips = run_cpwl_layer(sums.c, recip_table, cfg, opts);
    total += recips.report;

    MhpResult scaled = hadamard_pass(exps.y, broadcast_column(recips.y, cols),
                                     constant_matrix(rows, cols, 0.0, x.format), cfg);
    total += without_evals(scaled.report);

    result.y = std::move(scaled.y);
    for (Eigen::Index i : result.error_rows) result.y.values.row(i).setZero();
    total.finalize(cfg);
    return result;
}

LayernormResult run_layernorm(const QuantizedMatrix& x, const SegmentTable& rsqrt_table,
                              const RealVector& gamma, const RealVector& beta,
                              const SystolicConfig& cfg, const RunOptions& opts, double epsilon) {
    if (rsqrt_table.function != Nonlinearity::kRsqrt) {
        throw std::invalid_argument("run_layernorm: needs an RSQRT table");
    }
    const Eigen::Index rows = x.rows();
    const Eigen::Index cols = x.cols();
    if (gamma.size() != cols || beta.size() != cols) {
        throw std::invalid_argument("run_layernorm: gamma/beta length must equal the row width");
    }
    LayernormResult result;
    CycleReport& total = result.report;

    // Mean and mean-of-squares as GEMM reductions with a 1/n vector.
    const QuantizedMatrix recip_n = constant_matrix(cols, 1, 1.0 / static_cast<double>(cols), kUnitFormat);
    GemmResult mean = sim_gemm(x, recip_n, cfg);
    total += mean.report;

    const QuantizedMatrix k_one = constant_matrix(rows, cols, 1.0, kUnitFormat);
    MhpResult centered = hadamard_pass(x, k_one, broadcast_column(negated(mean.c), cols), cfg);
    total += without_evals(centered.report);

    MhpResult squares = hadamard_pass(x, x, constant_matrix(rows, cols, 0.0, x.format), cfg);
    total += without_evals(squares.report);
    GemmResult mean_sq = sim_gemm(squares.y, recip_n, cfg);
    total += mean_sq.report;

    MhpResult mu_sq =
        hadamard_pass(mean.c, mean.c, constant_matrix(rows, 1, 0.0, x.format), cfg);
    total += without_evals(mu_sq.report);

    // var + eps in one pass: B = eps - mu^2, assembled exactly in x's format.
    QuantizedMatrix eps_minus_musq{Int16Matrix(rows, 1), x.format};
    const std::int64_t eps_q = quantize(epsilon, x.format);
    for (Eigen::Index i = 0; i < rows; ++i) {
        eps_minus_musq.values(i, 0) = saturate16(eps_q - mu_sq.y.values(i, 0));
    }
    MhpResult var_eps = hadamard_pass(mean_sq.c, constant_matrix(rows, 1, 1.0, kUnitFormat),
                                      eps_minus_musq, cfg);
    total += without_evals(var_eps.report);

    const std::int16_t domain_min = quantize(rsqrt_table.x_min, x.format);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (var_eps.y.values(i, 0) < domain_min) result.capped_rows.push_back(i);
    }

    NonlinearLayerResult inv_std = run_cpwl_layer(var_eps.y, rsqrt_table, cfg, opts);
    total += inv_std.report;

    MhpResult normalized = hadamard_pass(centered.y, broadcast_column(inv_std.y, cols),
                                         constant_matrix(rows, cols, 0.0, x.format), cfg);
    total += without_evals(normalized.report);

    QuantizedMatrix gamma_rows{Int16Matrix(rows, cols), kUnitFormat};
    QuantizedMatrix beta_rows{Int16Matrix(rows, cols), x.format};
    for (Eigen::Index j = 0; j < cols; ++j) {
        gamma_rows.values.col(j).setConstant(quantize(gamma[j], kUnitFormat));
        beta_rows.values.col(j).setConstant(quantize(beta[j], x.format));
    }
    MhpResult affine = hadamard_pass(normalized.y, gamma_rows, beta_rows, cfg);
    total += without_evals(affine.report);

    result.y = std::move(affine.y);
    total.finalize(cfg);
    return result;
}

}  // namespace nlsa
