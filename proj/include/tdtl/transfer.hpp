#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tdtl/matrix.hpp"
#include "tdtl/nn.hpp"
#include "tdtl/rng.hpp"

namespace tdtl::transfer {

using linalg::Matrix;

/// The learnable score matrix for the unlabeled target set: one row per
/// target sample, one column per class. Trained rows tend to exact zeros
/// under the l1 proximal updates; argmax per row gives the prediction.
struct TargetLabelMatrix {
    Matrix values;                         // N_t x c
    std::vector<std::string> sample_ids;   // aligns rows to target samples
};

struct OneHotLabels {
    Matrix values;  // N x c, rows sum to exactly 1 with {0,1} entries

    static OneHotLabels from_indices(const std::vector<int>& labels,
                                     std::size_t class_count);
};

/// Trade-off weights of the two loss terms plus the l1 strength.
struct LossWeights {
    double lambda1 = 1.0;
    double lambda2 = 0.0;
    double alpha = 0.0;
};

struct TrainSchedule {
    std::size_t epochs_max = 200;
    std::size_t batch_size = 64;
    double source_fraction = 0.5;
    /// Per-batch cycle of (lambda1, lambda2), default strict alternation
    /// starting with the supervised step.
    std::vector<std::pair<double, double>> alternation = {{1.0, 0.0}, {0.0, 1.0}};
    /// Epochs trained supervised-only before the cycle starts; phase-level
    /// alternation so label commitments build on a settled classifier.
    std::size_t warmup_epochs = 0;
    double convergence_rel_tol = 1e-4;
    std::size_t convergence_window = 5;
};

struct LossStep {
    std::size_t step = 0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double loss = 0.0;
};

struct TrainedModel {
    nn::NetworkParams params;
    TargetLabelMatrix labels;
    std::vector<LossStep> loss_history;
    std::size_t epochs_run = 0;
};

struct CrossEntropyResult {
    double loss = 0.0;
    Matrix grad_logits;  // softmax minus one-hot, per row
};

/// Summed (not averaged) cross entropy between softmax rows and one-hot
/// labels. Rows must sum to 1 within 1e-6. The gradient is taken w.r.t. the
/// pre-softmax logits.
CrossEntropyResult cross_entropy_loss(const Matrix& predictions,
                                      const Matrix& onehot_rows);

struct TransductiveResult {
    double loss = 0.0;
    Matrix grad_outputs;        // -2 (p - f(x)), flows into the network
    Matrix grad_labels_smooth;  // +2 (p - f(x)), smooth part only
};

/// sum_i ||p_i - f(x_i)||^2 + alpha * sum_i ||p_i||_1. The l1 part carries no
/// gradient here; it is handled by the proximal step.
TransductiveResult transductive_loss(const Matrix& label_rows, const Matrix& outputs,
                                     double alpha);

double total_loss(double l1, double l2, const LossWeights& w);

/// One ISTA step on the given label rows:
/// p' = soft_threshold(p - eta * grad_smooth, eta * alpha), elementwise.
void prox_label_update(Matrix& label_rows, const Matrix& grad_smooth, double eta,
                       double alpha);

struct Batch {
    std::vector<std::size_t> source;
    std::vector<std::size_t> target;
};

/// One epoch of mixed batches. Every batch carries exactly
/// round(batch_size * source_fraction) source indices and the rest target.
/// Both domains are covered at least once per epoch; the smaller domain is
/// recycled through reshuffled permutations to keep the proportion.
std::vector<Batch> compose_batches(std::size_t n_source, std::size_t n_target,
                                   const TrainSchedule& schedule, Rng& rng);

/// Joint training: supervised steps backpropagate the cross entropy on the
/// batch's source half; transductive steps backpropagate the smooth quadratic
/// on the target half into the network and the touched label rows, then apply
/// the proximal step to those rows (step size = the transfer learning rate).
/// Stops at epochs_max or once the epoch-mean loss is flat within
/// convergence_rel_tol over convergence_window consecutive epochs.
TrainedModel train(const Matrix& source_x, const std::vector<int>& source_labels,
                   const Matrix& target_x, const std::vector<std::string>& target_ids,
                   std::size_t class_count, const nn::NetSpec& spec,
                   const TrainSchedule& schedule, const LossWeights& weights,
                   const nn::OptimizerConfig& optimizer, Rng& rng);

/// Argmax per label row; ties break toward the lowest class index.
std::vector<int> predict_labels(const TargetLabelMatrix& labels);

/// Fraction of exactly-zero entries, the sparsity measure reported for P.
double zero_fraction(const Matrix& m);

}  // namespace tdtl::transfer
