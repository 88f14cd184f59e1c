#include "nlsa/network.hpp"

#include <cmath>
#include <stdexcept>

namespace nlsa {

std::string layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::kDense: return "dense";
        case LayerKind::kConv2d: return "conv2d";
        case LayerKind::kGelu: return "gelu";
        case LayerKind::kRelu: return "relu";
        case LayerKind::kSoftmax: return "softmax";
        case LayerKind::kLayernorm: return "layernorm";
        case LayerKind::kFlatten: return "flatten";
    }
    throw std::logic_error("layer_kind_name: bad enum");
}

LayerKind parse_layer_kind(const std::string& name) {
    if (name == "dense") return LayerKind::kDense;
    if (name == "conv2d") return LayerKind::kConv2d;
    if (name == "gelu") return LayerKind::kGelu;
    if (name == "relu") return LayerKind::kRelu;
    if (name == "softmax") return LayerKind::kSoftmax;
    if (name == "layernorm") return LayerKind::kLayernorm;
    if (name == "flatten") return LayerKind::kFlatten;
    throw std::invalid_argument("unknown layer kind: " + name);
}

namespace {

TensorShape layer_output_shape(const LayerSpec& layer, const TensorShape& in) {
    switch (layer.kind) {
        case LayerKind::kDense:
            if (in.features() != layer.in_features) {
                throw std::invalid_argument("network: dense layer input width mismatch");
            }
            return {1, 1, layer.out_features};
        case LayerKind::kConv2d: {
            if (in.channels != layer.conv.in_channels || in.height != layer.conv.in_height ||
                in.width != layer.conv.in_width) {
                throw std::invalid_argument("network: conv layer input shape mismatch");
            }
            layer.conv.validate();
            return {layer.out_channels, layer.conv.out_height(), layer.conv.out_width()};
        }
        case LayerKind::kLayernorm:
            if (in.features() != layer.norm_axis_len) {
                throw std::invalid_argument("network: layernorm axis length mismatch");
            }
            return in;
        case LayerKind::kFlatten:
            return {1, 1, static_cast<int>(in.features())};
        default:
            return in;
    }
}

}  // namespace

void NetworkSpec::validate() const {
    if (layers.empty()) throw std::invalid_argument("network: no layers");
    TensorShape shape = input_shape;
    for (const LayerSpec& layer : layers) {
        if (layer.kind == LayerKind::kDense) {
            if (layer.weight.rows() != layer.in_features ||
                layer.weight.cols() != layer.out_features) {
                throw std::invalid_argument("network: dense weight shape mismatch");
            }
        }
        if (layer.kind == LayerKind::kConv2d) {
            const Eigen::Index patch = static_cast<Eigen::Index>(layer.conv.in_channels) *
                                       layer.conv.kernel_h * layer.conv.kernel_w;
            if (layer.weight.rows() != layer.out_channels || layer.weight.cols() != patch) {
                throw std::invalid_argument("network: conv weight shape mismatch");
            }
        }
        shape = layer_output_shape(layer, shape);
    }
}

CapBounds network_cap_bounds(const NetworkSpec& net, Nonlinearity fn) {
    if (auto it = net.cap_bounds.find(fn); it != net.cap_bounds.end()) return it->second;
    const double g = net.granularity;
    auto snap = [g](double target) { return std::ceil(target / g - 1e-9) * g; };
    switch (fn) {
        case Nonlinearity::kExp:
            // Softmax feeds max-subtracted values, so the domain ends at 0
            // and the boundary chord lands exactly on exp(0) = 1.
            return {-snap(8.0), 0.0};
        case Nonlinearity::kReciprocal:
        case Nonlinearity::kRsqrt:
            // Row sums reach the row width, variances the activation range.
            return {std::max(snap(0.25), g), snap(16.0)};
        default:
            return default_cap_bounds(fn, g);
    }
}

const SegmentTable& TableSet::get(Nonlinearity fn) const {
    const auto it = tables.find(fn);
    if (it == tables.end()) {
        throw std::logic_error("table set is missing " + nonlinearity_name(fn));
    }
    return it->second;
}

TableSet build_network_tables(const NetworkSpec& net) {
    TableSet set;
    auto add = [&](Nonlinearity fn) {
        if (set.tables.count(fn)) return;
        const CapBounds bounds = network_cap_bounds(net, fn);
        set.tables.emplace(fn, build_segment_table(
                                   fn, net.granularity, bounds.x_min, bounds.x_max,
                                   fit_slope_format(fn, net.granularity, bounds),
                                   fit_intercept_format(fn, net.granularity, bounds)));
    };
    for (const LayerSpec& layer : net.layers) {
        switch (layer.kind) {
            case LayerKind::kGelu: add(Nonlinearity::kGelu); break;
            case LayerKind::kRelu: add(Nonlinearity::kRelu); break;
            case LayerKind::kSoftmax:
                add(Nonlinearity::kExp);
                add(Nonlinearity::kReciprocal);
                break;
            case LayerKind::kLayernorm: add(Nonlinearity::kRsqrt); break;
            default: break;
        }
    }
    return set;
}

namespace {

const FixedPointFormat kUnitFormat{13};

CycleReport without_evals(CycleReport rep) {
    rep.nonlinear_evals = 0;
    return rep;
}

/// Adds a broadcast bias row via one Hadamard pass (K = 1, B = bias).
QuantizedMatrix add_bias_rows(const QuantizedMatrix& x, const QuantizedMatrix& bias,
                              const SystolicConfig& cfg, CycleReport& cycles) {
    QuantizedMatrix b;
    b.format = bias.format;
    b.values = bias.values.replicate(x.rows(), 1);
    MhpResult r = sim_mhp(rearrange_x(x, cfg),
                          rearrange_kb(constant_matrix(x.rows(), x.cols(), 1.0, kUnitFormat), b, cfg),
                          cfg);
    cycles += without_evals(r.report);
    return std::move(r.y);
}

/// [out_ch x batch*oh*ow] -> [batch x out_ch*oh*ow]
QuantizedMatrix regroup_conv_output(const QuantizedMatrix& gemm_out, Eigen::Index batch,
                                    Eigen::Index pixels) {
    QuantizedMatrix out;
    out.format = gemm_out.format;
    const Eigen::Index channels = gemm_out.rows();
    out.values.resize(batch, channels * pixels);
    for (Eigen::Index n = 0; n < batch; ++n) {
        for (Eigen::Index c = 0; c < channels; ++c) {
            for (Eigen::Index p = 0; p < pixels; ++p) {
                out.values(n, c * pixels + p) = gemm_out.values(c, n * pixels + p);
            }
        }
    }
    return out;
}

}  // namespace

NetworkRunResult run_network(const NetworkSpec& net, const QuantizedMatrix& inputs,
                             const SystolicConfig& cfg, const RunOptions& opts) {
    net.validate();
    cfg.validate();
    const TableSet tables = build_network_tables(net);

    NetworkRunResult result;
    QuantizedMatrix act = inputs;
    TensorShape shape = net.input_shape;
    if (inputs.cols() != shape.features()) {
        throw std::invalid_argument("run_network: input width does not match the network");
    }

    for (const LayerSpec& layer : net.layers) {
        CycleReport layer_report;
        switch (layer.kind) {
            case LayerKind::kDense: {
                GemmResult g = sim_gemm(act, layer.weight, cfg,
                                        {.baseline_model = false, .out_format = net.activation_format});
                layer_report += g.report;
                act = std::move(g.c);
                if (layer.bias.size() > 0) act = add_bias_rows(act, layer.bias, cfg, layer_report);
                break;
            }
            case LayerKind::kConv2d: {
                const QuantizedMatrix patches = im2col(act, layer.conv);
                GemmResult g = sim_gemm(layer.weight, patches, cfg,
                                        {.baseline_model = false, .out_format = net.activation_format});
                layer_report += g.report;
                const Eigen::Index pixels =
                    static_cast<Eigen::Index>(layer.conv.out_height()) * layer.conv.out_width();
                act = regroup_conv_output(g.c, act.rows(), pixels);
                if (layer.bias.size() > 0) {
                    QuantizedMatrix bias_planes{Int16Matrix(1, act.cols()), layer.bias.format};
                    for (Eigen::Index c = 0; c < layer.out_channels; ++c) {
                        bias_planes.values.middleCols(c * pixels, pixels)
                            .setConstant(layer.bias.values(0, c));
                    }
                    act = add_bias_rows(act, bias_planes, cfg, layer_report);
                }
                break;
            }
            case LayerKind::kGelu:
            case LayerKind::kRelu: {
                const Nonlinearity fn =
                    layer.kind == LayerKind::kGelu ? Nonlinearity::kGelu : Nonlinearity::kRelu;
                NonlinearLayerResult r = run_cpwl_layer(act, tables.get(fn), cfg, opts);
                layer_report += r.report;
                act = std::move(r.y);
                break;
            }
            case LayerKind::kSoftmax: {
                SoftmaxResult r = run_softmax(act, tables.get(Nonlinearity::kExp),
                                              tables.get(Nonlinearity::kReciprocal), cfg, opts);
                layer_report += r.report;
                act = std::move(r.y);
                break;
            }
            case LayerKind::kLayernorm: {
                RealMatrix gamma = dequantize(layer.weight);
                RealMatrix beta = dequantize(layer.bias);
                LayernormResult r = run_layernorm(act, tables.get(Nonlinearity::kRsqrt),
                                                  gamma.row(0).transpose(), beta.row(0).transpose(),
                                                  cfg, opts);
                layer_report += r.report;
                act = std::move(r.y);
                break;
            }
            case LayerKind::kFlatten:
                break;
        }
        layer_report.finalize(cfg);
        if (layer.kind == LayerKind::kDense || layer.kind == LayerKind::kConv2d) {
            result.linear_mac_ops += layer_report.mac_ops;
        } else {
            result.nonlinear_mac_ops += layer_report.mac_ops;
        }
        result.report += layer_report;
        result.per_layer.push_back(layer_report);
        shape = layer_output_shape(layer, shape);
    }
    result.report.finalize(cfg);
    result.outputs = std::move(act);
    return result;
}

namespace {

RealMatrix im2col_real(const RealMatrix& input, const ConvGeometry& geom) {
    geom.validate();
    const Eigen::Index plane = static_cast<Eigen::Index>(geom.in_height) * geom.in_width;
    const int oh = geom.out_height();
    const int ow = geom.out_width();
    RealMatrix patches(static_cast<Eigen::Index>(geom.in_channels) * geom.kernel_h * geom.kernel_w,
                       input.rows() * oh * ow);
    for (Eigen::Index n = 0; n < input.rows(); ++n) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const Eigen::Index col = n * oh * ow + static_cast<Eigen::Index>(oy) * ow + ox;
                for (int c = 0; c < geom.in_channels; ++c) {
                    for (int ki = 0; ki < geom.kernel_h; ++ki) {
                        for (int kj = 0; kj < geom.kernel_w; ++kj) {
                            const int y = oy * geom.stride - geom.padding + ki;
                            const int x = ox * geom.stride - geom.padding + kj;
                            const Eigen::Index row =
                                (static_cast<Eigen::Index>(c) * geom.kernel_h + ki) * geom.kernel_w + kj;
                            patches(row, col) =
                                (y >= 0 && y < geom.in_height && x >= 0 && x < geom.in_width)
                                    ? input(n, c * plane + static_cast<Eigen::Index>(y) * geom.in_width + x)
                                    : 0.0;
                        }
                    }
                }
            }
        }
    }
    return patches;
}

RealMatrix reference_nonlinearity(LayerKind kind, const RealMatrix& x) {
    switch (kind) {
        case LayerKind::kGelu:
            return x.unaryExpr([](double v) { return reference_eval(Nonlinearity::kGelu, v); });
        case LayerKind::kRelu:
            return x.unaryExpr([](double v) { return v > 0.0 ? v : 0.0; });
        case LayerKind::kSoftmax: {
            RealMatrix y(x.rows(), x.cols());
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                const Eigen::ArrayXd shifted = x.row(i).array() - x.row(i).maxCoeff();
                const Eigen::ArrayXd e = shifted.exp();
                y.row(i) = (e / e.sum()).matrix();
            }
            return y;
        }
        default:
            throw std::logic_error("reference_nonlinearity: not a nonlinearity");
    }
}

}  // namespace

RealMatrix reference_forward(const NetworkSpec& net, const RealMatrix& inputs) {
    net.validate();
    RealMatrix act = inputs;
    for (const LayerSpec& layer : net.layers) {
        switch (layer.kind) {
            case LayerKind::kDense: {
                RealMatrix z = act * dequantize(layer.weight);
                if (layer.bias.size() > 0) z.rowwise() += dequantize(layer.bias).row(0);
                act = std::move(z);
                break;
            }
            case LayerKind::kConv2d: {
                const RealMatrix patches = im2col_real(act, layer.conv);
                const RealMatrix g = dequantize(layer.weight) * patches;
                const Eigen::Index pixels =
                    static_cast<Eigen::Index>(layer.conv.out_height()) * layer.conv.out_width();
                RealMatrix out(act.rows(), layer.out_channels * pixels);
                for (Eigen::Index n = 0; n < act.rows(); ++n) {
                    for (Eigen::Index c = 0; c < layer.out_channels; ++c) {
                        for (Eigen::Index p = 0; p < pixels; ++p) {
                            out(n, c * pixels + p) = g(c, n * pixels + p) +
                                (layer.bias.size() > 0 ? dequantize(layer.bias)(0, c) : 0.0);
                        }
                    }
                }
                act = std::move(out);
                break;
            }
            case LayerKind::kGelu:
            case LayerKind::kRelu:
            case LayerKind::kSoftmax:
                act = reference_nonlinearity(layer.kind, act);
                break;
            case LayerKind::kLayernorm: {
                const RealMatrix gamma = dequantize(layer.weight);
                const RealMatrix beta = dequantize(layer.bias);
                RealMatrix y(act.rows(), act.cols());
                for (Eigen::Index i = 0; i < act.rows(); ++i) {
                    const double mean = act.row(i).mean();
                    const double var = act.row(i).array().square().mean() - mean * mean;
                    const double r = 1.0 / std::sqrt(var + 0.00390625);
                    y.row(i) = ((act.row(i).array() - mean) * r) * gamma.row(0).array() +
                               beta.row(0).array();
                }
                act = std::move(y);
                break;
            }
            case LayerKind::kFlatten:
                break;
        }
    }
    return act;
}

QuantizedMatrix int16_exact_forward(const NetworkSpec& net, const QuantizedMatrix& inputs,
                                    const SystolicConfig& cfg) {
    net.validate();
    QuantizedMatrix act = inputs;
    for (const LayerSpec& layer : net.layers) {
        switch (layer.kind) {
            case LayerKind::kDense: {
                GemmResult g = sim_gemm(act, layer.weight, cfg,
                                        {.baseline_model = false, .out_format = net.activation_format});
                act = std::move(g.c);
                if (layer.bias.size() > 0) {
                    CycleReport scratch;
                    act = add_bias_rows(act, layer.bias, cfg, scratch);
                }
                break;
            }
            case LayerKind::kConv2d: {
                const QuantizedMatrix patches = im2col(act, layer.conv);
                GemmResult g = sim_gemm(layer.weight, patches, cfg,
                                        {.baseline_model = false, .out_format = net.activation_format});
                const Eigen::Index pixels =
                    static_cast<Eigen::Index>(layer.conv.out_height()) * layer.conv.out_width();
                act = regroup_conv_output(g.c, act.rows(), pixels);
                if (layer.bias.size() > 0) {
                    QuantizedMatrix bias_planes{Int16Matrix(1, act.cols()), layer.bias.format};
                    for (Eigen::Index c = 0; c < layer.out_channels; ++c) {
                        bias_planes.values.middleCols(c * pixels, pixels)
                            .setConstant(layer.bias.values(0, c));
                    }
                    CycleReport scratch;
                    act = add_bias_rows(act, bias_planes, cfg, scratch);
                }
                break;
            }
            case LayerKind::kGelu:
            case LayerKind::kRelu:
            case LayerKind::kSoftmax:
                act = quantize(reference_nonlinearity(layer.kind, dequantize(act)),
                               net.activation_format);
                break;
            case LayerKind::kLayernorm: {
                const RealMatrix x = dequantize(act);
                const RealMatrix gamma = dequantize(layer.weight);
                const RealMatrix beta = dequantize(layer.bias);
                RealMatrix y(x.rows(), x.cols());
                for (Eigen::Index i = 0; i < x.rows(); ++i) {
                    const double mean = x.row(i).mean();
                    const double var = x.row(i).array().square().mean() - mean * mean;
                    const double r = 1.0 / std::sqrt(var + 0.00390625);
                    y.row(i) = ((x.row(i).array() - mean) * r) * gamma.row(0).array() +
                               beta.row(0).array();
                }
                act = quantize(y, net.activation_format);
                break;
            }
            case LayerKind::kFlatten:
                break;
        }
    }
    return act;
}

}  // namespace nlsa
