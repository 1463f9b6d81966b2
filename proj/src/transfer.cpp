#include "tdtl/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tdtl/errors.hpp"
#include "tdtl/linalg.hpp"

namespace tdtl::transfer {

OneHotLabels OneHotLabels::from_indices(const std::vector<int>& labels,
                                        std::size_t class_count) {
    if (class_count < 1) throw ContractError("one-hot: class_count must be >= 1");
    OneHotLabels out;
    out.values = Matrix(labels.size(), class_count);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count)
            throw ContractError("one-hot: label " + std::to_string(labels[i]) +
                                " outside [0, " + std::to_string(class_count) + ")");
        out.values(i, static_cast<std::size_t>(labels[i])) = 1.0;
    }
    return out;
}

CrossEntropyResult cross_entropy_loss(const Matrix& predictions, const Matrix& onehot_rows) {
    if (!predictions.same_shape(onehot_rows))
        throw ContractError("cross_entropy_loss: shape mismatch " + predictions.shape_str() +
                            " vs " + onehot_rows.shape_str());
    CrossEntropyResult res;
    res.grad_logits = Matrix(predictions.rows, predictions.cols);
    for (std::size_t i = 0; i < predictions.rows; ++i) {
        double row_sum = 0.0, label_sum = 0.0;
        for (std::size_t j = 0; j < predictions.cols; ++j) {
            const double y = predictions(i, j);
            const double l = onehot_rows(i, j);
            row_sum += y;
            label_sum += l;
            if (l != 0.0 && l != 1.0)
                throw ContractError("cross_entropy_loss: labels must be one-hot");
            if (l == 1.0) res.loss -= std::log(std::max(y, 1e-300));
            res.grad_logits(i, j) = y - l;
        }
        if (std::fabs(row_sum - 1.0) > 1e-6)
            throw ContractError("cross_entropy_loss: prediction row " + std::to_string(i) +
                                " sums to " + std::to_string(row_sum));
        if (label_sum != 1.0)
            throw ContractError("cross_entropy_loss: label row " + std::to_string(i) +
                                " is not one-hot");
    }
    return res;
}

TransductiveResult transductive_loss(const Matrix& label_rows, const Matrix& outputs,
                                     double alpha) {
    if (!label_rows.same_shape(outputs))
        throw ContractError("transductive_loss: shape mismatch " + label_rows.shape_str() +
                            " vs " + outputs.shape_str());
    if (alpha < 0.0) throw ContractError("transductive_loss: alpha must be >= 0");

    TransductiveResult res;
    res.grad_outputs = Matrix(outputs.rows, outputs.cols);
    res.grad_labels_smooth = Matrix(outputs.rows, outputs.cols);
    for (std::size_t i = 0; i < outputs.data.size(); ++i) {
        const double diff = label_rows.data[i] - outputs.data[i];
        res.loss += diff * diff + alpha * std::fabs(label_rows.data[i]);
        res.grad_outputs.data[i] = -2.0 * diff;
        res.grad_labels_smooth.data[i] = 2.0 * diff;
    }
    return res;
}

double total_loss(double l1, double l2, const LossWeights& w) {
    return w.lambda1 * l1 + w.lambda2 * l2;
}

void prox_label_update(Matrix& label_rows, const Matrix& grad_smooth, double eta,
                       double alpha) {
    if (eta <= 0.0) throw ContractError("prox_label_update: eta must be > 0");
    if (alpha < 0.0) throw ContractError("prox_label_update: alpha must be >= 0");
    if (!label_rows.same_shape(grad_smooth))
        throw ContractError("prox_label_update: shape mismatch");
    const double tau = eta * alpha;
    for (std::size_t i = 0; i < label_rows.data.size(); ++i)
        label_rows.data[i] =
            linalg::soft_threshold(label_rows.data[i] - eta * grad_smooth.data[i], tau);
}

std::vector<Batch> compose_batches(std::size_t n_source, std::size_t n_target,
                                   const TrainSchedule& schedule, Rng& rng) {
    if (n_source == 0 || n_target == 0)
        throw ContractError("compose_batches: both domains must be nonempty");
    if (schedule.batch_size < 2)
        throw ContractError("compose_batches: batch_size must be >= 2");
    const std::size_t per_src = static_cast<std::size_t>(
        std::llround(schedule.source_fraction * static_cast<double>(schedule.batch_size)));
    if (per_src < 1 || per_src >= schedule.batch_size)
        throw ContractError("compose_batches: source_fraction leaves an empty half");
    const std::size_t per_tgt = schedule.batch_size - per_src;

    const std::size_t count = std::max((n_source + per_src - 1) / per_src,
                                       (n_target + per_tgt - 1) / per_tgt);

    auto build_stream = [&rng](std::size_t n, std::size_t needed) {
        std::vector<std::size_t> stream;
        stream.reserve(needed + n);
        while (stream.size() < needed) {
            std::vector<std::size_t> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            rng.shuffle(perm);
            stream.insert(stream.end(), perm.begin(), perm.end());
        }
        stream.resize(needed);
        return stream;
    };
    const std::vector<std::size_t> src_stream = build_stream(n_source, count * per_src);
    const std::vector<std::size_t> tgt_stream = build_stream(n_target, count * per_tgt);

    std::vector<Batch> batches(count);
    for (std::size_t b = 0; b < count; ++b) {
        batches[b].source.assign(src_stream.begin() + b * per_src,
                                 src_stream.begin() + (b + 1) * per_src);
        batches[b].target.assign(tgt_stream.begin() + b * per_tgt,
                                 tgt_stream.begin() + (b + 1) * per_tgt);
    }
    return batches;
}

namespace {

void add_scaled(nn::NetworkParams& acc, const nn::NetworkParams& g, double s) {
    for (std::size_t li = 0; li < acc.layers.size(); ++li) {
        for (std::size_t i = 0; i < acc.layers[li].weights.data.size(); ++i)
            acc.layers[li].weights.data[i] += s * g.layers[li].weights.data[i];
        for (std::size_t i = 0; i < acc.layers[li].bias.size(); ++i)
            acc.layers[li].bias[i] += s * g.layers[li].bias[i];
    }
}

nn::NetworkParams zeros_like(const nn::NetworkParams& p) {
    nn::NetworkParams z = p;
    for (nn::DenseParams& l : z.layers) {
        std::fill(l.weights.data.begin(), l.weights.data.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    return z;
}

}  // namespace

TrainedModel train(const Matrix& source_x, const std::vector<int>& source_labels,
                   const Matrix& target_x, const std::vector<std::string>& target_ids,
                   std::size_t class_count, const nn::NetSpec& spec,
                   const TrainSchedule& schedule, const LossWeights& weights,
                   const nn::OptimizerConfig& optimizer, Rng& rng) {
    nn::validate_spec(spec);
    if (class_count < 2) throw ContractError("train: need at least 2 classes");
    if (source_x.rows == 0 || target_x.rows == 0)
        throw ContractError("train: both domains must be nonempty");
    if (source_x.rows != source_labels.size())
        throw ContractError("train: source labels do not match source rows");
    if (source_x.cols != target_x.cols)
        throw ContractError("train: source and target feature dimensions differ");
    if (nn::input_dim(spec) != source_x.cols)
        throw ContractError("train: network input width " +
                            std::to_string(nn::input_dim(spec)) +
                            " does not match features " + std::to_string(source_x.cols));
    if (nn::output_dim(spec) != class_count)
        throw ContractError("train: network output width must equal class count");
    if (!target_ids.empty() && target_ids.size() != target_x.rows)
        throw ContractError("train: target ids do not match target rows");
    if (schedule.alternation.empty())
        throw ContractError("train: alternation pattern must be nonempty");
    if (weights.alpha < 0.0) throw ContractError("train: alpha must be >= 0");

    TrainedModel model;
    model.labels.sample_ids = target_ids;
    if (model.labels.sample_ids.empty())
        for (std::size_t i = 0; i < target_x.rows; ++i)
            model.labels.sample_ids.push_back(std::to_string(i));

    // Random label initialization precedes weight init in the stream.
    model.labels.values = Matrix(target_x.rows, class_count);
    for (double& v : model.labels.values.data) v = rng.uniform();
    model.params = nn::init_network(spec, rng.next_u64());

    if (optimizer.label_step_size <= 0.0)
        throw ContractError("train: label_step_size must be > 0");
    for (int label : source_labels)
        if (label < 0 || static_cast<std::size_t>(label) >= class_count)
            throw ContractError("train: source label " + std::to_string(label) +
                                " outside [0, " + std::to_string(class_count) + ")");
    const double eta_label = optimizer.label_step_size;

    std::size_t global_step = 0;
    double prev_epoch_mean = 0.0;
    bool have_prev = false;
    std::size_t flat_epochs = 0;

    for (std::size_t epoch = 0; epoch < schedule.epochs_max; ++epoch) {
        const std::vector<Batch> batches =
            compose_batches(source_x.rows, target_x.rows, schedule, rng);

        double epoch_loss = 0.0;
        for (const Batch& batch : batches) {
            const auto [lambda1, lambda2] =
                epoch < schedule.warmup_epochs
                    ? std::pair<double, double>{1.0, 0.0}
                    : schedule.alternation[global_step % schedule.alternation.size()];

            nn::NetworkParams grads = zeros_like(model.params);
            double l1 = 0.0, l2 = 0.0;

            if (lambda1 != 0.0) {
                Matrix xs = linalg::take_rows(source_x, batch.source);
                nn::ForwardResult fr = nn::forward(model.params, spec, xs, true, rng);
                std::vector<int> ys;
                ys.reserve(batch.source.size());
                for (std::size_t idx : batch.source) ys.push_back(source_labels[idx]);
                CrossEntropyResult ce = cross_entropy_loss(
                    fr.output, OneHotLabels::from_indices(ys, class_count).values);
                l1 = ce.loss;
                add_scaled(grads,
                           nn::backward_from_logits(model.params, spec, fr.tape,
                                                    linalg::scale(ce.grad_logits, lambda1)),
                           1.0);
            }

            Matrix label_rows;
            TransductiveResult tl;
            if (lambda2 != 0.0) {
                Matrix xt = linalg::take_rows(target_x, batch.target);
                nn::ForwardResult fr = nn::forward(model.params, spec, xt, true, rng);
                label_rows = linalg::take_rows(model.labels.values, batch.target);
                tl = transductive_loss(label_rows, fr.output, weights.alpha);
                l2 = tl.loss;
                add_scaled(grads,
                           nn::backward(model.params, spec, fr.tape,
                                        linalg::scale(tl.grad_outputs, lambda2)),
                           1.0);
            }

            const LossWeights step_w{lambda1, lambda2, weights.alpha};
            const double step_loss = total_loss(l1, l2, step_w);
            if (!std::isfinite(step_loss))
                throw TrainingError("training loss diverged", global_step);

            model.params = nn::sgd_step(model.params, grads, optimizer,
                                        nn::LayerGroup::Backbone);
            model.params = nn::sgd_step(model.params, grads, optimizer,
                                        nn::LayerGroup::Transfer);

            if (lambda2 != 0.0) {
                // The label matrix moves in step with the network update.
                prox_label_update(label_rows,
                                  linalg::scale(tl.grad_labels_smooth, lambda2), eta_label,
                                  lambda2 * weights.alpha);
                linalg::ensure_finite(label_rows, "prox_label_update");
                for (std::size_t i = 0; i < batch.target.size(); ++i)
                    for (std::size_t j = 0; j < class_count; ++j)
                        model.labels.values(batch.target[i], j) = label_rows(i, j);
            }

            model.loss_history.push_back({global_step, lambda1, lambda2, step_loss});
            epoch_loss += step_loss;
            ++global_step;
        }
        model.epochs_run = epoch + 1;

        const double epoch_mean = epoch_loss / static_cast<double>(batches.size());
        if (have_prev) {
            const double denom = std::max(std::fabs(prev_epoch_mean), 1e-12);
            if (std::fabs(epoch_mean - prev_epoch_mean) / denom <
                schedule.convergence_rel_tol)
                ++flat_epochs;
            else
                flat_epochs = 0;
            if (flat_epochs >= schedule.convergence_window) break;
        }
        prev_epoch_mean = epoch_mean;
        have_prev = true;
    }
    return model;
}

std::vector<int> predict_labels(const TargetLabelMatrix& labels) {
    return linalg::argmax_rows(labels.values);
}

double zero_fraction(const Matrix& m) {
    if (m.data.empty()) return 0.0;
    std::size_t zeros = 0;
    for (double v : m.data)
        if (v == 0.0) ++zeros;
    return static_cast<double>(zeros) / static_cast<double>(m.data.size());
}

}  // namespace tdtl::transfer
