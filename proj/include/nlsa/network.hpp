#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlsa/im2col.hpp"
#include "nlsa/nonlinear_ops.hpp"

namespace nlsa {

enum class LayerKind { kDense, kConv2d, kGelu, kRelu, kSoftmax, kLayernorm, kFlatten };

std::string layer_kind_name(LayerKind kind);
LayerKind parse_layer_kind(const std::string& name);

/// One layer of a desk-scale network. Dense weights are [in x out] with a
/// 1 x out bias row; conv weights are [out_channels x C*kh*kw]; layernorm
/// stores gamma in `weight` and beta in `bias` (1 x n each).
struct LayerSpec {
    LayerKind kind = LayerKind::kDense;
    int in_features = 0;
    int out_features = 0;
    ConvGeometry conv;
    int out_channels = 0;
    int norm_axis_len = 0;
    QuantizedMatrix weight;
    QuantizedMatrix bias;
};

struct TensorShape {
    int channels = 1;
    int height = 1;
    int width = 1;

    Eigen::Index features() const {
        return static_cast<Eigen::Index>(channels) * height * width;
    }
};

struct NetworkSpec {
    std::string name = "net";
    std::vector<LayerSpec> layers;
    TensorShape input_shape;
    double granularity = 0.25;
    FixedPointFormat activation_format{8};
    /// Per-nonlinearity cap overrides; unset entries use the runner defaults.
    std::map<Nonlinearity, CapBounds> cap_bounds;

    /// Checks shape compatibility layer to layer. Throws on violations.
    void validate() const;
};

/// Tables a network needs at one granularity. EXP covers max-subtracted
/// softmax inputs, so its default bounds end at 0; RECIPROCAL covers row sums
/// up to 16; RSQRT covers var + eps up to 16.
struct TableSet {
    std::map<Nonlinearity, SegmentTable> tables;
    const SegmentTable& get(Nonlinearity fn) const;
};

TableSet build_network_tables(const NetworkSpec& net);
CapBounds network_cap_bounds(const NetworkSpec& net, Nonlinearity fn);

struct NetworkRunResult {
    QuantizedMatrix outputs;
    CycleReport report;
    std::vector<CycleReport> per_layer;
    std::int64_t linear_mac_ops = 0;
    std::int64_t nonlinear_mac_ops = 0;
};

/// Executes the network on the simulated fabric, batch rows through every
/// layer in order. Inputs are [batch x input features], outputs
/// [batch x final features].
NetworkRunResult run_network(const NetworkSpec& net, const QuantizedMatrix& inputs,
                             const SystolicConfig& cfg, const RunOptions& opts = {});

/// Double-precision forward pass with exact nonlinearities.
RealMatrix reference_forward(const NetworkSpec& net, const RealMatrix& inputs);

/// INT16 baseline: linear layers in quantized fabric arithmetic,
/// nonlinearities evaluated exactly in double precision and requantized
/// per layer.
QuantizedMatrix int16_exact_forward(const NetworkSpec& net, const QuantizedMatrix& inputs,
                                    const SystolicConfig& cfg);

}  // namespace nlsa
