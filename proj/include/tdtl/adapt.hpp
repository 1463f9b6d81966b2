#pragma once

#include <cstddef>
#include <vector>

#include "tdtl/linalg.hpp"
#include "tdtl/matrix.hpp"

namespace tdtl::adapt {

using linalg::Matrix;

struct Subspace {
    Matrix basis;  // D x d, orthonormal columns
};

struct SaModel {
    Subspace source;
    Subspace target;
    Matrix alignment;  // d x d, source-basis coordinates onto target-basis ones
};

/// Subspace alignment: PCA bases of both domains plus the alignment map
/// M = Ps^T Pt. Transformed source is xs Ps M, transformed target xt Pt.
SaModel sa_fit(const Matrix& xs, const Matrix& xt, std::size_t d);
Matrix sa_transform_source(const SaModel& model, const Matrix& xs);
Matrix sa_transform_target(const SaModel& model, const Matrix& xt);

struct GeodesicKernel {
    Matrix g;  // D x D, symmetric PSD
};

/// Geodesic flow kernel between two equal-dimension subspaces, assembled in
/// closed form from the principal angles of Ps^T Pt:
///   lambda1 = 1 + sin(2t)/(2t), lambda2 = (cos(2t)-1)/(2t),
///   lambda3 = 1 - sin(2t)/(2t), with the t -> 0 limits (2, 0, 0).
/// Requires d < D so the orthogonal complement of Ps exists.
GeodesicKernel gfk_fit(const Subspace& ps, const Subspace& pt);

/// Squared kernel-induced distance matrix entries (x-z)^T G (x-z) drive the
/// 1-NN classifier below.
std::vector<int> nn1_classify_kernel(const GeodesicKernel& kernel, const Matrix& train,
                                     const std::vector<int>& train_labels,
                                     const Matrix& test);

struct TcaModel {
    Matrix train_data;   // stacked source+target rows the kernel was built on
    double mu = 1.0;
    Matrix components;   // (N_s+N_t) x m projection of kernel rows
};

/// Transfer component analysis with a linear kernel: minimizes the maximum
/// mean discrepancy between the projected domains while preserving variance.
/// Solves (K L K + mu I)^{-1} K H K for its top-m eigenvectors; a small ridge
/// keeps the left operand invertible on rank-deficient kernels.
TcaModel tca_fit(const Matrix& xs, const Matrix& xt, double mu, std::size_t m);

/// Embeds rows of x: k(x, train) * components.
Matrix tca_embed(const TcaModel& model, const Matrix& x);

/// Euclidean 1-NN; ties break toward the lower training index.
std::vector<int> nn1_classify(const Matrix& train, const std::vector<int>& train_labels,
                              const Matrix& test);

/// Euclidean norm of the difference between column means; the raw
/// mean-discrepancy measure TCA minimizes in feature space.
double mean_discrepancy(const Matrix& a, const Matrix& b);

}  // namespace tdtl::adapt
