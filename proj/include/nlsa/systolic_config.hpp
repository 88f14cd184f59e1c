#pragma once

#include <stdexcept>
#include <string>

namespace nlsa {

/// Array geometry and memory-system parameters. Defaults model an 8x8 grid of
/// PEs with 16 MACs each and the stock buffer allocation (L3 288B x3,
/// L2 512B x24, PE 96B x64, L1 32B x64).
struct SystolicConfig {
    int pe_rows = 8;
    int pe_cols = 8;
    int macs_per_pe = 16;

    int l1_buffer_bytes = 32;
    int pe_buffer_bytes = 96;
    int l2_buffer_bytes = 512;
    int l2_banks = 24;
    int l3_buffer_bytes = 288;
    int l3_instances = 3;

    /// Output elements drained per cycle. The cycle model's single
    /// calibration knob; 1 reproduces the reference drain fraction.
    int output_bus_width = 1;

    int ipf_ports = 1;
    /// Stages of the L3 addressing pipeline: shift, scale, lookup, writeback.
    int ipf_pipeline_depth = 4;
    /// Modeled round trip of K/B through DRAM, per matrix.
    int dram_latency_cycles = 0;

    double clock_mhz = 200.0;

    /// Contraction-dimension chunk held per PE: the PE buffer as int16 slots.
    int k_tile() const { return pe_buffer_bytes / 2; }

    int diagonal_lanes() const { return pe_rows < pe_cols ? pe_rows : pe_cols; }

    double clock_hz() const { return clock_mhz * 1e6; }

    void validate() const {
        auto positive = [](int v, const char* what) {
            if (v <= 0) throw std::invalid_argument(std::string("config: ") + what + " must be positive");
        };
        positive(pe_rows, "pe_rows");
        positive(pe_cols, "pe_cols");
        positive(macs_per_pe, "macs_per_pe");
        positive(l1_buffer_bytes, "l1_buffer_bytes");
        positive(pe_buffer_bytes, "pe_buffer_bytes");
        positive(l2_buffer_bytes, "l2_buffer_bytes");
        positive(l2_banks, "l2_banks");
        positive(l3_buffer_bytes, "l3_buffer_bytes");
        positive(l3_instances, "l3_instances");
        positive(output_bus_width, "output_bus_width");
        positive(ipf_ports, "ipf_ports");
        if (ipf_pipeline_depth < 0) throw std::invalid_argument("config: ipf_pipeline_depth must be >= 0");
        if (dram_latency_cycles < 0) throw std::invalid_argument("config: dram_latency_cycles must be >= 0");
        if (!(clock_mhz > 0.0)) throw std::invalid_argument("config: clock_mhz must be positive");
        if ((macs_per_pe & (macs_per_pe - 1)) != 0) {
            throw std::invalid_argument("config: macs_per_pe must be a power of two");
        }
        if (pe_buffer_bytes < 2) throw std::invalid_argument("config: pe_buffer_bytes too small");
    }
};

}  // namespace nlsa
