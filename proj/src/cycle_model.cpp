#include "nlsa/cycle_model.hpp"

#include <stdexcept>

namespace nlsa {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

void check_dims(std::int64_t m, std::int64_t n, std::int64_t k = 1) {
    if (m <= 0 || n <= 0 || k <= 0) throw std::invalid_argument("cycle model: dimensions must be positive");
}

}  // namespace

void CycleReport::finalize(const SystolicConfig& cfg) {
    total_cycles = fill_cycles + compute_cycles + drain_cycles + ipf_cycles;
    const double denom = static_cast<double>(total_cycles) * cfg.pe_rows * cfg.pe_cols * cfg.macs_per_pe;
    utilization = total_cycles > 0 ? static_cast<double>(mac_ops) / denom : 0.0;
    const double seconds = total_cycles > 0 ? static_cast<double>(total_cycles) / cfg.clock_hz() : 0.0;
    gops = seconds > 0.0 ? static_cast<double>(mac_ops) / seconds / 1e9 : 0.0;
    gnfs = seconds > 0.0 ? static_cast<double>(nonlinear_evals) / seconds / 1e9 : 0.0;
}

CycleReport& CycleReport::operator+=(const CycleReport& other) {
    fill_cycles += other.fill_cycles;
    compute_cycles += other.compute_cycles;
    drain_cycles += other.drain_cycles;
    ipf_cycles += other.ipf_cycles;
    mac_ops += other.mac_ops;
    nonlinear_evals += other.nonlinear_evals;
    return *this;
}

CycleReport gemm_cycle_model(std::int64_t m_dim, std::int64_t n_dim, std::int64_t k_dim,
                             const SystolicConfig& cfg) {
    check_dims(m_dim, n_dim, k_dim);
    cfg.validate();
    const std::int64_t rows = cfg.pe_rows;
    const std::int64_t cols = cfg.pe_cols;
    const std::int64_t k_tile = cfg.k_tile();
    const std::int64_t drain_per_tile = ceil_div(rows * cols, cfg.output_bus_width);

    CycleReport rep;
    for (std::int64_t r0 = 0; r0 < m_dim; r0 += rows) {
        const std::int64_t rows_used = std::min(rows, m_dim - r0);
        for (std::int64_t c0 = 0; c0 < n_dim; c0 += cols) {
            const std::int64_t cols_used = std::min(cols, n_dim - c0);
            for (std::int64_t k0 = 0; k0 < k_dim; k0 += k_tile) {
                const std::int64_t chunk = std::min(k_tile, k_dim - k0);
                rep.fill_cycles += (rows_used - 1) + (cols_used - 1);
                rep.compute_cycles += ceil_div(chunk, cfg.macs_per_pe);
            }
            rep.drain_cycles += drain_per_tile;
        }
    }
    rep.mac_ops = m_dim * n_dim * k_dim;
    rep.finalize(cfg);
    return rep;
}

CycleReport mhp_cycle_model(std::int64_t m_dim, std::int64_t n_dim, const SystolicConfig& cfg) {
    check_dims(m_dim, n_dim);
    cfg.validate();
    const std::int64_t lanes = cfg.diagonal_lanes();

    CycleReport rep;
    for (std::int64_t r0 = 0; r0 < m_dim; r0 += lanes) {
        const std::int64_t lanes_used = std::min(lanes, m_dim - r0);
        rep.fill_cycles += lanes_used - 1;
        // Two multiplier lanes per output: x*k and 1*b.
        rep.compute_cycles += ceil_div(2 * n_dim, cfg.macs_per_pe);
        rep.drain_cycles += n_dim * ceil_div(lanes_used, cfg.output_bus_width);
    }
    rep.mac_ops = 2 * m_dim * n_dim;
    rep.nonlinear_evals = m_dim * n_dim;
    rep.finalize(cfg);
    return rep;
}

std::int64_t ipf_cycle_count(std::int64_t m_dim, std::int64_t n_dim, const SystolicConfig& cfg) {
    check_dims(m_dim, n_dim);
    cfg.validate();
    return ceil_div(m_dim * n_dim, static_cast<std::int64_t>(cfg.ipf_ports) * cfg.l3_instances) +
           cfg.ipf_pipeline_depth + cfg.dram_latency_cycles;
}

}  // namespace nlsa
