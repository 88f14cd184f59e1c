#pragma once

#include <string>
#include <vector>

#include "nlsa/network.hpp"
#include "nlsa/rng.hpp"

namespace nlsa {

/// Labeled evaluation inputs for a classification task.
struct EvalSet {
    RealMatrix features;
    std::vector<int> labels;
    int classes = 0;
};

struct BlobTaskParams {
    int features = 16;
    int classes = 10;
    int hidden = 32;
    double center_range = 0.8;
    double noise_sigma = 0.5;
};

/// Isotropic Gaussian blobs around per-class centers drawn from the seed.
/// Labels cycle through the classes so the set stays balanced.
EvalSet make_blob_eval_set(std::uint64_t seed, int samples, const BlobTaskParams& params = {});

/// Dense(d->h) -> GELU -> Dense(h->classes) -> Softmax classifier for the
/// blob task. The first layer is a fixed random projection; the readout is
/// the nearest-centroid solution in hidden space (columns are the hidden
/// images of the class centers, biases -|h_k|^2/2), so no training loop is
/// involved.
NetworkSpec build_blob_network(std::uint64_t seed, const BlobTaskParams& params = {});

struct GranularityResult {
    double granularity = 0.0;
    double cpwl_accuracy = 0.0;
    /// cpwl_accuracy - int16_accuracy, in accuracy points.
    double delta = 0.0;
    /// Fraction of samples whose CPWL argmax matches the INT16 baseline's.
    double argmax_agreement = 0.0;
};

struct AccuracyReport {
    std::string task_id;
    double float64_accuracy = 0.0;
    double int16_accuracy = 0.0;
    std::vector<GranularityResult> per_granularity;
};

/// Runs the float64 reference, the INT16-exact baseline, and one CPWL
/// variant per granularity over a fixed eval set.
AccuracyReport accuracy_sweep(const NetworkSpec& net, const EvalSet& eval,
                              const std::vector<double>& granularities,
                              const SystolicConfig& cfg, const RunOptions& opts = {});

double classification_accuracy(const RealMatrix& outputs, const std::vector<int>& labels);
double classification_accuracy(const QuantizedMatrix& outputs, const std::vector<int>& labels);

}  // namespace nlsa
