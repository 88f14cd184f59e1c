#include "nlsa/pe_grid.hpp"

namespace nlsa {

std::string pe_mode_name(PEMode mode) {
    switch (mode) {
        case PEMode::kGemm: return "GEMM";
        case PEMode::kMhpCompute: return "MHP_COMPUTE";
        case PEMode::kMhpTransmit: return "MHP_TRANSMIT";
    }
    return "?";
}

PEGrid::PEGrid(const SystolicConfig& cfg, GridMode mode)
    : rows_(cfg.pe_rows), cols_(cfg.pe_cols), mode_(mode),
      states_(static_cast<std::size_t>(cfg.pe_rows) * cfg.pe_cols) {
    for (int i = 0; i < rows_; ++i) {
        for (int j = 0; j < cols_; ++j) {
            PEState& pe = at(i, j);
            if (mode == GridMode::kGemm) {
                pe.mode = PEMode::kGemm;
                pe.c1 = true;
                pe.c2 = true;
            } else if (i == j) {
                pe.mode = PEMode::kMhpCompute;
                pe.c1 = false;
                pe.c2 = true;
            } else {
                pe.mode = PEMode::kMhpTransmit;
                pe.c1 = true;
                pe.c2 = false;
            }
        }
    }
}

std::optional<std::string> PEGrid::mode_violation() const {
    for (int i = 0; i < rows_; ++i) {
        for (int j = 0; j < cols_; ++j) {
            const PEState& pe = at(i, j);
            bool ok = false;
            switch (pe.mode) {
                case PEMode::kGemm: ok = pe.c1 && pe.c2; break;
                case PEMode::kMhpCompute: ok = !pe.c1 && pe.c2; break;
                case PEMode::kMhpTransmit: ok = pe.c1 && !pe.c2; break;
            }
            if (!ok) {
                return "mode invariant violated at PE(" + std::to_string(i) + "," +
                       std::to_string(j) + "): mode=" + pe_mode_name(pe.mode) +
                       " c1=" + (pe.c1 ? "on" : "off") + " c2=" + (pe.c2 ? "on" : "off");
            }
            if (mode_ == GridMode::kMhp) {
                const PEMode want = (i == j) ? PEMode::kMhpCompute : PEMode::kMhpTransmit;
                if (pe.mode != want) {
                    return "MHP grid placement violated at PE(" + std::to_string(i) + "," +
                           std::to_string(j) + ")";
                }
            }
        }
    }
    return std::nullopt;
}

void PEGrid::override_control(int i, int j, bool c1, bool c2) {
    at(i, j).c1 = c1;
    at(i, j).c2 = c2;
}

std::int64_t PEGrid::total_mac_activity() const {
    std::int64_t total = 0;
    for (const PEState& pe : states_) total += pe.mac_activity_count;
    return total;
}

std::int64_t PEGrid::total_forwarded() const {
    std::int64_t total = 0;
    for (const PEState& pe : states_) total += pe.forwarded_count;
    return total;
}

std::int64_t PEGrid::off_diagonal_mac_activity() const {
    std::int64_t total = 0;
    for (int i = 0; i < rows_; ++i) {
        for (int j = 0; j < cols_; ++j) {
            if (i != j) total += at(i, j).mac_activity_count;
        }
    }
    return total;
}

PEGrid configure_grid(const SystolicConfig& cfg, GridMode mode) {
    cfg.validate();
    return PEGrid(cfg, mode);
}

}  // namespace nlsa
