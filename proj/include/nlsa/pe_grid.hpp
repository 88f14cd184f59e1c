#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlsa/systolic_config.hpp"

namespace nlsa {

/// Thrown when simulated hardware state breaks a structural invariant
/// (as opposed to bad caller input, which raises std::invalid_argument).
struct InvariantViolation : std::logic_error {
    using std::logic_error::logic_error;
};

enum class PEMode { kGemm, kMhpCompute, kMhpTransmit };
enum class GridMode { kGemm, kMhp };

std::string pe_mode_name(PEMode mode);

/// Per-PE control and activity state. The control logics gate the two data
/// paths: C1 the forwarding path, C2 the local compute path.
///   GEMM         -> C1 on,  C2 on
///   MHP compute  -> C1 off, C2 on
///   MHP transmit -> C1 on,  C2 off
struct PEState {
    PEMode mode = PEMode::kGemm;
    bool c1 = true;
    bool c2 = true;
    std::int32_t accumulator = 0;
    std::int64_t mac_activity_count = 0;
    std::int64_t forwarded_count = 0;
};

class PEGrid {
  public:
    PEGrid(const SystolicConfig& cfg, GridMode mode);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    GridMode mode() const { return mode_; }

    PEState& at(int i, int j) { return states_[static_cast<std::size_t>(i) * cols_ + j]; }
    const PEState& at(int i, int j) const {
        return states_[static_cast<std::size_t>(i) * cols_ + j];
    }

    /// Checks every PE against the mode/control table above; returns the
    /// violation description, or nullopt when consistent. Simulations call
    /// this at every phase step.
    std::optional<std::string> mode_violation() const;

    /// Test hook: force the control flags of one PE without updating its
    /// mode, so validators can be exercised against an inconsistent grid.
    void override_control(int i, int j, bool c1, bool c2);

    std::int64_t total_mac_activity() const;
    std::int64_t total_forwarded() const;
    std::int64_t off_diagonal_mac_activity() const;

  private:
    int rows_;
    int cols_;
    GridMode mode_;
    std::vector<PEState> states_;
};

/// Grid wired for the requested mode: GEMM turns every PE into a classic MAC
/// cell; MHP puts the main diagonal into compute mode and everything else
/// into transmit mode.
PEGrid configure_grid(const SystolicConfig& cfg, GridMode mode);

}  // namespace nlsa
