#pragma once

#include <string>
#include <vector>

#include "tdtl/matrix.hpp"

namespace tdtl::data {

struct MetricsReport {
    double accuracy_percent = 0.0;
    double f1_macro = 0.0;
    linalg::Matrix confusion;  // c x c counts, rows = truth, cols = prediction
};

/// 100 * correct / total. Inputs must be equal-length and nonempty.
double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

/// Unweighted mean over classes of 2pr/(p+r); a class with p+r == 0
/// contributes 0.
double f1_macro(const std::vector<int>& pred, const std::vector<int>& truth,
                std::size_t class_count);

linalg::Matrix confusion_matrix(const std::vector<int>& pred, const std::vector<int>& truth,
                                std::size_t class_count);

MetricsReport evaluate(const std::vector<int>& pred, const std::vector<int>& truth,
                       std::size_t class_count);

/// CSV blocks: scalar metrics, confusion counts, then row-normalized rates
/// printed to 4 decimals.
void save_metrics_csv(const std::string& path, const MetricsReport& report);

}  // namespace tdtl::data
