#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tdtl/matrix.hpp"
#include "tdtl/rng.hpp"

namespace tdtl::nn {

using linalg::Matrix;

enum class LayerKind { Dense, Relu, Tanh, Softmax, Dropout };

struct LayerSpec {
    LayerKind kind;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    double drop_rate = 0.0;  // dropout only, in [0, 1)

    static LayerSpec dense(std::size_t in, std::size_t out) {
        return {LayerKind::Dense, in, out, 0.0};
    }
    static LayerSpec relu(std::size_t n) { return {LayerKind::Relu, n, n, 0.0}; }
    static LayerSpec tanh(std::size_t n) { return {LayerKind::Tanh, n, n, 0.0}; }
    static LayerSpec softmax(std::size_t n) { return {LayerKind::Softmax, n, n, 0.0}; }
    static LayerSpec dropout(std::size_t n, double rate) {
        return {LayerKind::Dropout, n, n, rate};
    }
};

using NetSpec = std::vector<LayerSpec>;

/// Throws ContractError unless consecutive layers chain dimensionally,
/// activations keep their width, dropout rates lie in [0,1) and softmax
/// appears only as the final layer.
void validate_spec(const NetSpec& spec);

std::size_t input_dim(const NetSpec& spec);
std::size_t output_dim(const NetSpec& spec);

/// The standard classifier chain used across the project: dense+ReLU
/// (+dropout) backbone stages followed by a dense+tanh+softmax head.
NetSpec make_classifier_spec(std::size_t input, const std::vector<std::size_t>& hidden,
                             std::size_t classes, double drop_rate);

struct DenseParams {
    Matrix weights;            // in_dim x out_dim
    std::vector<double> bias;  // out_dim
};

/// Weights and biases for the dense layers, in network order.
struct NetworkParams {
    std::vector<DenseParams> layers;
};

/// Gaussian weights (stddev 0.01), zero biases; deterministic per seed.
NetworkParams init_network(const NetSpec& spec, std::uint64_t seed);

/// Per-layer forward record for one mini-batch: inputs, outputs and the
/// dropout masks that were drawn, enough to backpropagate exactly.
struct ActivationTape {
    std::vector<Matrix> inputs;
    std::vector<Matrix> outputs;
    std::vector<Matrix> dropout_masks;  // empty matrix for non-dropout layers
    bool train_mode = false;
};

struct ForwardResult {
    Matrix output;
    ActivationTape tape;
};

/// Runs the batch through the network. Dropout fires only in train mode and
/// uses inverted scaling, so evaluation needs no rescaling.
ForwardResult forward(const NetworkParams& params, const NetSpec& spec, const Matrix& x,
                      bool train_mode, Rng& rng);

/// Exact gradients (same shape as params) of the scalar loss whose gradient
/// w.r.t. the network output is grad_output.
NetworkParams backward(const NetworkParams& params, const NetSpec& spec,
                       const ActivationTape& tape, const Matrix& grad_output);

/// Same, but grad is taken w.r.t. the pre-softmax logits; requires the final
/// layer to be softmax, which is skipped. Used by the cross-entropy path
/// where softmax and loss gradients fuse into one term.
NetworkParams backward_from_logits(const NetworkParams& params, const NetSpec& spec,
                                   const ActivationTape& tape, const Matrix& grad_logits);

struct OptimizerConfig {
    double learning_rate_backbone = 0.01;
    double learning_rate_transfer = 0.005;
    /// Step size of the proximal update on the target label matrix. The
    /// smooth term 2(p - f) has Lipschitz constant 2, so 0.5 is the exact
    /// per-batch minimizer ST(f, alpha/2); smaller values blend in history.
    double label_step_size = 0.5;
    std::uint64_t seed = 42;
};

/// The transfer head is the last dense layer; everything before it is backbone.
enum class LayerGroup { Backbone, Transfer };

/// Plain SGD on one layer group: w' = w - eta_group * grad. Other groups'
/// parameters pass through unchanged.
NetworkParams sgd_step(const NetworkParams& params, const NetworkParams& grads,
                       const OptimizerConfig& config, LayerGroup group);

/// Checkpoint file: "TDTL" magic, u32 version 1, u32 dense layer count, then
/// per layer u32 in_dim, u32 out_dim, row-major little-endian f64 weights and
/// f64 biases. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const NetworkParams& params);
NetworkParams load_checkpoint(const std::string& path);

}  // namespace tdtl::nn
