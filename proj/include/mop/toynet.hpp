#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mop/mat.hpp"
#include "mop/serialize.hpp"

namespace mop {

/// Fully-connected layer; bias is never pruned and never enters a Hessian.
struct Layer {
    Mat w;                  // d_out x d_in
    std::vector<double> b;  // d_out
};

/// Small ReLU MLP with a linear head into softmax cross-entropy.
struct ToyNet {
    std::vector<Layer> layers;

    static ToyNet init(const std::vector<std::size_t>& widths, std::uint64_t seed);

    std::size_t depth() const { return layers.size(); }
    std::size_t input_dim() const { return layers.front().w.cols; }
    std::size_t output_dim() const { return layers.back().w.rows; }

    // Logits for one input column.
    std::vector<double> forward(const std::vector<double>& x) const;
};

enum class Split { Train, Calibration, Test };

/// Gaussian-mixture classification blobs with fixed 70/15/15 splits.
struct Dataset {
    Mat inputs;  // dim x n, one sample per column
    std::vector<int> labels;
    std::size_t classes{0};
    std::vector<std::size_t> train_idx, cal_idx, test_idx;

    const std::vector<std::size_t>& split(Split s) const;
};

Dataset generate_dataset(std::uint64_t seed, std::size_t n, std::size_t classes,
                         std::size_t dim);

struct TrainReport {
    double initial_grad_norm{0};
    double final_grad_norm{0};
    double final_loss{0};
    std::size_t epochs_run{0};
};

struct TrainDivergence : std::runtime_error {
    std::size_t epoch;
    explicit TrainDivergence(std::size_t e)
        : std::runtime_error("training diverged (loss not finite) at epoch " +
                             std::to_string(e)),
          epoch(e) {}
};

// Full-batch gradient descent with momentum 0.9 on the train split. The seed
// keeps the interface stable for stochastic variants; the descent itself is
// deterministic. Throws TrainDivergence if the loss stops being finite.
ToyNet train(ToyNet net, const Dataset& data, std::size_t epochs, double lr,
             std::uint64_t seed, TrainReport* report = nullptr);

/// One layer's calibration record: inputs X and per-sample loss gradients
/// w.r.t. the layer pre-activations. Column j of the row-k gradient stack is
/// deltas(k, j) * X(:, j), materialized on demand by fisher_factor.
struct LayerCapture {
    Mat x;       // d_in x N
    Mat deltas;  // d_out x N

    std::size_t d_in() const { return x.rows; }
    std::size_t d_out() const { return deltas.rows; }
    std::size_t n_samples() const { return x.cols; }

    // A_k (d_in x N): per-sample gradients of the loss w.r.t. row k of W.
    Mat fisher_factor(std::size_t k) const;
};

struct CalibrationCapture {
    std::vector<LayerCapture> layers;

    std::size_t n_samples() const { return layers.empty() ? 0 : layers.front().n_samples(); }
};

// Pure read of the network: per-layer inputs and per-sample gradients of the
// per-sample (not mean) loss over the calibration split.
CalibrationCapture capture(const ToyNet& net, const Dataset& data);

// Same pass on a partially pruned network; used by the recompute-per-layer
// pruning mode.
CalibrationCapture recalibrate(const ToyNet& net, const Dataset& data);

// Per-sample softmax cross-entropy loss of one input column.
double sample_loss(const ToyNet& net, const std::vector<double>& x, int label);

// Checkpoint and capture <-> tensor container.
TensorFile net_to_tensors(const ToyNet& net);
ToyNet net_from_tensors(const TensorFile& f);
TensorFile dataset_to_tensors(const Dataset& d);
Dataset dataset_from_tensors(const TensorFile& f);
TensorFile capture_to_tensors(const CalibrationCapture& c);
CalibrationCapture capture_from_tensors(const TensorFile& f);

}  // namespace mop
