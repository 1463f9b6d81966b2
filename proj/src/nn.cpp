#include "tdtl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "tdtl/errors.hpp"

namespace tdtl::nn {

void validate_spec(const NetSpec& spec) {
    if (spec.empty()) throw ContractError("network spec is empty");
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const LayerSpec& l = spec[i];
        if (l.in_dim == 0 || l.out_dim == 0)
            throw ContractError("layer " + std::to_string(i) + ": zero dimension");
        if (l.kind != LayerKind::Dense && l.in_dim != l.out_dim)
            throw ContractError("layer " + std::to_string(i) +
                                ": activation must keep its width");
        if (l.kind == LayerKind::Dropout && (l.drop_rate < 0.0 || l.drop_rate >= 1.0))
            throw ContractError("layer " + std::to_string(i) + ": drop_rate outside [0,1)");
        if (l.kind == LayerKind::Softmax && i + 1 != spec.size())
            throw ContractError("softmax may appear only as the final layer");
        if (i > 0 && spec[i - 1].out_dim != l.in_dim)
            throw ContractError("layer " + std::to_string(i) + ": expects width " +
                                std::to_string(l.in_dim) + " but previous layer emits " +
                                std::to_string(spec[i - 1].out_dim));
    }
}

std::size_t input_dim(const NetSpec& spec) {
    if (spec.empty()) throw ContractError("network spec is empty");
    return spec.front().in_dim;
}

std::size_t output_dim(const NetSpec& spec) {
    if (spec.empty()) throw ContractError("network spec is empty");
    return spec.back().out_dim;
}

NetSpec make_classifier_spec(std::size_t input, const std::vector<std::size_t>& hidden,
                             std::size_t classes, double drop_rate) {
    NetSpec spec;
    std::size_t prev = input;
    for (std::size_t h : hidden) {
        spec.push_back(LayerSpec::dense(prev, h));
        spec.push_back(LayerSpec::relu(h));
        if (drop_rate > 0.0) spec.push_back(LayerSpec::dropout(h, drop_rate));
        prev = h;
    }
    spec.push_back(LayerSpec::dense(prev, classes));
    spec.push_back(LayerSpec::tanh(classes));
    spec.push_back(LayerSpec::softmax(classes));
    validate_spec(spec);
    return spec;
}

NetworkParams init_network(const NetSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    Rng rng(seed);
    NetworkParams params;
    for (const LayerSpec& l : spec) {
        if (l.kind != LayerKind::Dense) continue;
        DenseParams p;
        p.weights = Matrix(l.in_dim, l.out_dim);
        for (double& w : p.weights.data) w = rng.normal(0.0, 0.01);
        p.bias.assign(l.out_dim, 0.0);
        params.layers.push_back(std::move(p));
    }
    return params;
}

namespace {

std::size_t dense_count(const NetSpec& spec) {
    std::size_t n = 0;
    for (const LayerSpec& l : spec)
        if (l.kind == LayerKind::Dense) ++n;
    return n;
}

void check_params_match(const NetworkParams& params, const NetSpec& spec) {
    if (params.layers.size() != dense_count(spec))
        throw ContractError("params hold " + std::to_string(params.layers.size()) +
                            " dense layers but spec declares " +
                            std::to_string(dense_count(spec)));
    std::size_t di = 0;
    for (const LayerSpec& l : spec) {
        if (l.kind != LayerKind::Dense) continue;
        const DenseParams& p = params.layers[di++];
        if (p.weights.rows != l.in_dim || p.weights.cols != l.out_dim ||
            p.bias.size() != l.out_dim)
            throw ContractError("dense layer " + std::to_string(di - 1) +
                                ": parameter shape does not match spec");
    }
}

Matrix softmax_rows(const Matrix& x) {
    Matrix y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* in = x.row_ptr(i);
        double* out = y.row_ptr(i);
        double m = in[0];
        for (std::size_t j = 1; j < x.cols; ++j) m = std::max(m, in[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            out[j] = std::exp(in[j] - m);
            z += out[j];
        }
        for (std::size_t j = 0; j < x.cols; ++j) out[j] /= z;
    }
    return y;
}

}  // namespace

ForwardResult forward(const NetworkParams& params, const NetSpec& spec, const Matrix& x,
                      bool train_mode, Rng& rng) {
    validate_spec(spec);
    check_params_match(params, spec);
    if (x.cols != input_dim(spec))
        throw ContractError("forward: input has " + std::to_string(x.cols) +
                            " features, spec expects " + std::to_string(input_dim(spec)));

    ForwardResult res;
    res.tape.train_mode = train_mode;
    Matrix cur = x;
    std::size_t di = 0;
    for (const LayerSpec& l : spec) {
        res.tape.inputs.push_back(cur);
        Matrix next;
        switch (l.kind) {
            case LayerKind::Dense: {
                const DenseParams& p = params.layers[di++];
                next = matmul(cur, p.weights);
                for (std::size_t i = 0; i < next.rows; ++i) {
                    double* r = next.row_ptr(i);
                    for (std::size_t j = 0; j < next.cols; ++j) r[j] += p.bias[j];
                }
                break;
            }
            case LayerKind::Relu: {
                next = cur;
                for (double& v : next.data) v = v > 0.0 ? v : 0.0;
                break;
            }
            case LayerKind::Tanh: {
                next = cur;
                for (double& v : next.data) v = std::tanh(v);
                break;
            }
            case LayerKind::Softmax: {
                next = softmax_rows(cur);
                break;
            }
            case LayerKind::Dropout: {
                if (train_mode && l.drop_rate > 0.0) {
                    const double keep = 1.0 - l.drop_rate;
                    Matrix mask(cur.rows, cur.cols);
                    for (double& m : mask.data)
                        m = rng.uniform() < keep ? 1.0 / keep : 0.0;
                    next = hadamard(cur, mask);
                    res.tape.dropout_masks.push_back(std::move(mask));
                    res.tape.outputs.push_back(next);
                    cur = res.tape.outputs.back();
                    continue;
                }
                next = cur;
                break;
            }
        }
        res.tape.dropout_masks.emplace_back();
        res.tape.outputs.push_back(std::move(next));
        cur = res.tape.outputs.back();
    }
    res.output = cur;
    ensure_finite(res.output, "forward");
    return res;
}

namespace {

// Shared reverse pass. `last_layer` is one past the deepest layer whose
// gradient flows; the cross-entropy path passes spec.size()-1 to skip softmax.
NetworkParams backward_range(const NetworkParams& params, const NetSpec& spec,
                             const ActivationTape& tape, const Matrix& grad_start,
                             std::size_t last_layer) {
    validate_spec(spec);
    check_params_match(params, spec);
    if (tape.inputs.size() != spec.size() || tape.outputs.size() != spec.size())
        throw ContractError("backward: tape length does not match spec");

    NetworkParams grads;
    grads.layers.resize(params.layers.size());
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        grads.layers[i].weights =
            Matrix(params.layers[i].weights.rows, params.layers[i].weights.cols);
        grads.layers[i].bias.assign(params.layers[i].bias.size(), 0.0);
    }

    // Index of the dense params for each spec position, walked in reverse.
    std::size_t di = params.layers.size();
    for (std::size_t li = spec.size(); li > last_layer; --li)
        if (spec[li - 1].kind == LayerKind::Dense) --di;

    Matrix grad = grad_start;
    for (std::size_t li = last_layer; li > 0; --li) {
        const LayerSpec& l = spec[li - 1];
        const Matrix& in = tape.inputs[li - 1];
        const Matrix& out = tape.outputs[li - 1];
        if (grad.rows != out.rows || grad.cols != out.cols)
            throw ContractError("backward: gradient shape " + grad.shape_str() +
                                " does not match layer output " + out.shape_str());
        switch (l.kind) {
            case LayerKind::Dense: {
                --di;
                DenseParams& g = grads.layers[di];
                g.weights = matmul(transpose(in), grad);
                for (std::size_t i = 0; i < grad.rows; ++i) {
                    const double* r = grad.row_ptr(i);
                    for (std::size_t j = 0; j < grad.cols; ++j) g.bias[j] += r[j];
                }
                grad = matmul(grad, transpose(params.layers[di].weights));
                break;
            }
            case LayerKind::Relu: {
                Matrix next(grad.rows, grad.cols);
                for (std::size_t i = 0; i < grad.data.size(); ++i)
                    next.data[i] = in.data[i] > 0.0 ? grad.data[i] : 0.0;
                grad = std::move(next);
                break;
            }
            case LayerKind::Tanh: {
                Matrix next(grad.rows, grad.cols);
                for (std::size_t i = 0; i < grad.data.size(); ++i)
                    next.data[i] = grad.data[i] * (1.0 - out.data[i] * out.data[i]);
                grad = std::move(next);
                break;
            }
            case LayerKind::Softmax: {
                // dx_j = y_j (g_j - sum_k g_k y_k), row-wise.
                Matrix next(grad.rows, grad.cols);
                for (std::size_t i = 0; i < grad.rows; ++i) {
                    const double* y = out.row_ptr(i);
                    const double* g = grad.row_ptr(i);
                    double dot = 0.0;
                    for (std::size_t j = 0; j < grad.cols; ++j) dot += g[j] * y[j];
                    double* n = next.row_ptr(i);
                    for (std::size_t j = 0; j < grad.cols; ++j) n[j] = y[j] * (g[j] - dot);
                }
                grad = std::move(next);
                break;
            }
            case LayerKind::Dropout: {
                const Matrix& mask = tape.dropout_masks[li - 1];
                if (mask.data.empty()) break;  // eval mode or rate 0: identity
                grad = hadamard(grad, mask);
                break;
            }
        }
    }
    return grads;
}

}  // namespace

NetworkParams backward(const NetworkParams& params, const NetSpec& spec,
                       const ActivationTape& tape, const Matrix& grad_output) {
    return backward_range(params, spec, tape, grad_output, spec.size());
}

NetworkParams backward_from_logits(const NetworkParams& params, const NetSpec& spec,
                                   const ActivationTape& tape, const Matrix& grad_logits) {
    if (spec.empty() || spec.back().kind != LayerKind::Softmax)
        throw ContractError("backward_from_logits: final layer must be softmax");
    return backward_range(params, spec, tape, grad_logits, spec.size() - 1);
}

NetworkParams sgd_step(const NetworkParams& params, const NetworkParams& grads,
                       const OptimizerConfig& config, LayerGroup group) {
    if (grads.layers.size() != params.layers.size())
        throw ContractError("sgd_step: gradient/parameter layer count mismatch");
    if (config.learning_rate_backbone <= 0.0 || config.learning_rate_transfer <= 0.0)
        throw ContractError("sgd_step: learning rates must be positive");

    const double eta = group == LayerGroup::Transfer ? config.learning_rate_transfer
                                                     : config.learning_rate_backbone;
    NetworkParams out = params;
    for (std::size_t li = 0; li < out.layers.size(); ++li) {
        const bool is_transfer = li + 1 == out.layers.size();
        if ((group == LayerGroup::Transfer) != is_transfer) continue;
        DenseParams& p = out.layers[li];
        const DenseParams& g = grads.layers[li];
        if (!p.weights.same_shape(g.weights) || p.bias.size() != g.bias.size())
            throw ContractError("sgd_step: gradient shape mismatch at layer " +
                                std::to_string(li));
        for (std::size_t i = 0; i < p.weights.data.size(); ++i)
            p.weights.data[i] -= eta * g.weights.data[i];
        for (std::size_t i = 0; i < p.bias.size(); ++i) p.bias[i] -= eta * g.bias[i];
    }
    return out;
}

namespace {

void put_u32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& f) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ofstream& f, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    f.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::ifstream& f) {
    unsigned char b[8];
    f.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

constexpr char kMagic[4] = {'T', 'D', 'T', 'L'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path, const NetworkParams& params) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint for writing: " + path);
    f.write(kMagic, 4);
    put_u32(f, kVersion);
    put_u32(f, static_cast<std::uint32_t>(params.layers.size()));
    for (const DenseParams& p : params.layers) {
        put_u32(f, static_cast<std::uint32_t>(p.weights.rows));
        put_u32(f, static_cast<std::uint32_t>(p.weights.cols));
        for (double w : p.weights.data) put_f64(f, w);
        for (double b : p.bias) put_f64(f, b);
    }
    if (!f) throw IoError("failed writing checkpoint: " + path);
}

NetworkParams load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("not a checkpoint file (bad magic): " + path);
    const std::uint32_t version = get_u32(f);
    if (version != kVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t count = get_u32(f);
    NetworkParams params;
    for (std::uint32_t li = 0; li < count; ++li) {
        const std::uint32_t in = get_u32(f), out = get_u32(f);
        if (!f || in == 0 || out == 0 || in > (1u << 20) || out > (1u << 20))
            throw IoError("corrupt checkpoint layer header: " + path);
        DenseParams p;
        p.weights = Matrix(in, out);
        for (double& w : p.weights.data) w = get_f64(f);
        p.bias.resize(out);
        for (double& b : p.bias) b = get_f64(f);
        if (!f) throw IoError("truncated checkpoint: " + path);
        params.layers.push_back(std::move(p));
    }
    return params;
}

}  // namespace tdtl::nn
