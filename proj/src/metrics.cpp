#include "tdtl/metrics.hpp"

#include <cstdio>
#include <fstream>

#include "tdtl/errors.hpp"

namespace tdtl::data {

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.empty() || pred.size() != truth.size())
        throw ContractError("accuracy: need equal-length nonempty label vectors");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == truth[i]) ++correct;
    return 100.0 * static_cast<double>(correct) / static_cast<double>(pred.size());
}

linalg::Matrix confusion_matrix(const std::vector<int>& pred, const std::vector<int>& truth,
                                std::size_t class_count) {
    if (pred.size() != truth.size())
        throw ContractError("confusion_matrix: length mismatch");
    linalg::Matrix m(class_count, class_count);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (truth[i] < 0 || static_cast<std::size_t>(truth[i]) >= class_count ||
            pred[i] < 0 || static_cast<std::size_t>(pred[i]) >= class_count)
            throw ContractError("confusion_matrix: label outside [0, c) at index " +
                                std::to_string(i));
        m(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(pred[i])) += 1.0;
    }
    return m;
}

double f1_macro(const std::vector<int>& pred, const std::vector<int>& truth,
                std::size_t class_count) {
    if (class_count == 0) throw ContractError("f1_macro: class_count must be >= 1");
    linalg::Matrix m = confusion_matrix(pred, truth, class_count);
    double sum = 0.0;
    for (std::size_t k = 0; k < class_count; ++k) {
        double tp = m(k, k), fp = 0.0, fn = 0.0;
        for (std::size_t j = 0; j < class_count; ++j) {
            if (j == k) continue;
            fp += m(j, k);
            fn += m(k, j);
        }
        const double p = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
        const double r = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
        if (p + r > 0.0) sum += 2.0 * p * r / (p + r);
    }
    return sum / static_cast<double>(class_count);
}

MetricsReport evaluate(const std::vector<int>& pred, const std::vector<int>& truth,
                       std::size_t class_count) {
    MetricsReport rep;
    rep.accuracy_percent = accuracy(pred, truth);
    rep.f1_macro = f1_macro(pred, truth, class_count);
    rep.confusion = confusion_matrix(pred, truth, class_count);
    return rep;
}

void save_metrics_csv(const std::string& path, const MetricsReport& report) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open metrics file for writing: " + path);
    char buf[64];

    f << "metric,value\n";
    std::snprintf(buf, sizeof(buf), "%.4f", report.accuracy_percent);
    f << "accuracy_percent," << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.4f", report.f1_macro);
    f << "f1_macro," << buf << "\n";

    const std::size_t c = report.confusion.rows;
    f << "section,confusion_counts\n";
    f << "truth_pred";
    for (std::size_t j = 0; j < c; ++j) f << ",c" << j;
    f << "\n";
    for (std::size_t i = 0; i < c; ++i) {
        f << "c" << i;
        for (std::size_t j = 0; j < c; ++j)
            f << "," << static_cast<long long>(report.confusion(i, j));
        f << "\n";
    }

    f << "section,confusion_rates\n";
    f << "truth_pred";
    for (std::size_t j = 0; j < c; ++j) f << ",c" << j;
    f << "\n";
    for (std::size_t i = 0; i < c; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < c; ++j) row += report.confusion(i, j);
        f << "c" << i;
        for (std::size_t j = 0; j < c; ++j) {
            const double rate = row > 0.0 ? report.confusion(i, j) / row : 0.0;
            std::snprintf(buf, sizeof(buf), "%.4f", rate);
            f << "," << buf;
        }
        f << "\n";
    }
    if (!f) throw IoError("failed writing metrics file: " + path);
}

}  // namespace tdtl::data
