#include "nlsa/accuracy.hpp"

#include <stdexcept>

namespace nlsa {

namespace {

// Substream ids for the one experiment seed.
enum : std::uint64_t { kCentersStream = 1, kNoiseStream = 2, kProjectionStream = 3 };

RealMatrix blob_centers(std::uint64_t seed, const BlobTaskParams& params) {
    CounterRng rng(seed, kCentersStream);
    RealMatrix centers(params.classes, params.features);
    for (Eigen::Index i = 0; i < centers.rows(); ++i) {
        for (Eigen::Index j = 0; j < centers.cols(); ++j) {
            centers(i, j) = rng.uniform(-params.center_range, params.center_range);
        }
    }
    return centers;
}

Eigen::Index argmax_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    Eigen::Index best = 0;
    row.maxCoeff(&best);
    return best;
}

}  // namespace

EvalSet make_blob_eval_set(std::uint64_t seed, int samples, const BlobTaskParams& params) {
    if (samples <= 0) throw std::invalid_argument("make_blob_eval_set: samples must be positive");
    const RealMatrix centers = blob_centers(seed, params);
    CounterRng noise(seed, kNoiseStream);
    EvalSet set;
    set.classes = params.classes;
    set.features.resize(samples, params.features);
    set.labels.resize(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) {
        const int label = i % params.classes;
        set.labels[static_cast<std::size_t>(i)] = label;
        for (int j = 0; j < params.features; ++j) {
            set.features(i, j) = centers(label, j) + params.noise_sigma * noise.normal();
        }
    }
    return set;
}

NetworkSpec build_blob_network(std::uint64_t seed, const BlobTaskParams& params) {
    const RealMatrix centers = blob_centers(seed, params);
    CounterRng proj(seed, kProjectionStream);

    auto random_dense = [&proj](int rows, int cols) {
        RealMatrix w(rows, cols);
        const double scale = 1.25 / std::sqrt(static_cast<double>(rows));
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                w(i, j) = proj.uniform(-scale, scale);
            }
        }
        return w;
    };
    auto gelu_map = [](const RealMatrix& m) {
        return RealMatrix(
            m.unaryExpr([](double v) { return reference_eval(Nonlinearity::kGelu, v); }));
    };

    // Two fixed random feature stages; the readout is the nearest-centroid
    // solution in the final hidden space (logits_k = h . h_k - |h_k|^2 / 2),
    // so no training loop is involved.
    const RealMatrix w1 = random_dense(params.features, params.hidden);
    const RealMatrix w2 = random_dense(params.hidden, params.hidden);
    const RealMatrix hidden_centers = gelu_map(gelu_map(centers * w1) * w2);
    RealMatrix w3 = hidden_centers.transpose();
    RealMatrix b3(1, params.classes);
    for (int k = 0; k < params.classes; ++k) {
        b3(0, k) = -0.5 * hidden_centers.row(k).squaredNorm();
    }

    const FixedPointFormat weight_fmt{13};
    const FixedPointFormat act_fmt{8};

    NetworkSpec net;
    net.name = "blobs";
    net.input_shape = {1, 1, params.features};
    net.granularity = 0.25;
    net.activation_format = act_fmt;

    auto add_dense = [&net, weight_fmt, act_fmt](int in, int out, const RealMatrix& w,
                                                 const RealMatrix& b) {
        LayerSpec dense;
        dense.kind = LayerKind::kDense;
        dense.in_features = in;
        dense.out_features = out;
        dense.weight = quantize(w, weight_fmt);
        dense.bias = quantize(b, act_fmt);
        net.layers.push_back(dense);
    };
    auto add_gelu = [&net] {
        LayerSpec gelu;
        gelu.kind = LayerKind::kGelu;
        net.layers.push_back(gelu);
    };

    add_dense(params.features, params.hidden, w1, RealMatrix::Zero(1, params.hidden));
    add_gelu();
    add_dense(params.hidden, params.hidden, w2, RealMatrix::Zero(1, params.hidden));
    add_gelu();
    add_dense(params.hidden, params.classes, w3, b3);
    LayerSpec softmax;
    softmax.kind = LayerKind::kSoftmax;
    net.layers.push_back(softmax);

    net.validate();
    return net;
}

double classification_accuracy(const RealMatrix& outputs, const std::vector<int>& labels) {
    if (outputs.rows() != static_cast<Eigen::Index>(labels.size())) {
        throw std::invalid_argument("classification_accuracy: label count mismatch");
    }
    std::int64_t hits = 0;
    for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
        if (argmax_row(outputs.row(i)) == labels[static_cast<std::size_t>(i)]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(outputs.rows());
}

double classification_accuracy(const QuantizedMatrix& outputs, const std::vector<int>& labels) {
    return classification_accuracy(dequantize(outputs), labels);
}

AccuracyReport accuracy_sweep(const NetworkSpec& net, const EvalSet& eval,
                              const std::vector<double>& granularities,
                              const SystolicConfig& cfg, const RunOptions& opts) {
    AccuracyReport report;
    report.task_id = net.name;

    const QuantizedMatrix inputs = quantize(eval.features, net.activation_format);

    report.float64_accuracy =
        classification_accuracy(reference_forward(net, eval.features), eval.labels);

    const QuantizedMatrix int16_out = int16_exact_forward(net, inputs, cfg);
    report.int16_accuracy = classification_accuracy(int16_out, eval.labels);

    std::vector<Eigen::Index> baseline_argmax(static_cast<std::size_t>(int16_out.rows()));
    const RealMatrix baseline_real = dequantize(int16_out);
    for (Eigen::Index i = 0; i < baseline_real.rows(); ++i) {
        baseline_argmax[static_cast<std::size_t>(i)] = argmax_row(baseline_real.row(i));
    }

    for (double g : granularities) {
        NetworkSpec variant = net;
        variant.granularity = g;
        const NetworkRunResult run = run_network(variant, inputs, cfg, opts);
        GranularityResult res;
        res.granularity = g;
        res.cpwl_accuracy = classification_accuracy(run.outputs, eval.labels);
        res.delta = res.cpwl_accuracy - report.int16_accuracy;
        const RealMatrix out_real = dequantize(run.outputs);
        std::int64_t agree = 0;
        for (Eigen::Index i = 0; i < out_real.rows(); ++i) {
            if (argmax_row(out_real.row(i)) == baseline_argmax[static_cast<std::size_t>(i)]) ++agree;
        }
        res.argmax_agreement = static_cast<double>(agree) / static_cast<double>(out_real.rows());
        report.per_granularity.push_back(res);
    }
    return report;
}

}  // namespace nlsa
