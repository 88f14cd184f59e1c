#pragma once

#include <cstdint>
#include <ostream>

#include "nlsa/systolic_config.hpp"

namespace nlsa {

enum class VerifyScope { kAll, kCpwl, kFabric, kNn };

VerifyScope parse_verify_scope(const std::string& name);

struct VerifyOptions {
    std::uint64_t seed = 1;
    /// Deliberately corrupts one PE's control flags so the per-step mode
    /// validation demonstrably fires (the run then fails).
    bool inject_mode_fault = false;
};

/// Exhaustive segment-index agreement and cap totality over all 65536 INT16
/// inputs per table, plus the scalar/matrix composition identity.
bool verify_cpwl(std::ostream& out);

/// Random-matrix bit-exactness of the simulators against direct oracles,
/// diagonal exclusivity, and GEMM non-interference.
bool verify_fabric(std::ostream& out, const VerifyOptions& opts, const SystolicConfig& cfg);

/// Softmax simplex and layernorm agreement with the double-precision oracle.
bool verify_nn(std::ostream& out, const SystolicConfig& cfg);

/// Runs the requested scopes; returns the process exit code (0 pass, 1 fail).
int run_verify(VerifyScope scope, const VerifyOptions& opts, const SystolicConfig& cfg,
               std::ostream& out);

}  // namespace nlsa
