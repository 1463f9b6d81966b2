#pragma once

#include <cstddef>
#include <vector>

#include "tdtl/matrix.hpp"

namespace tdtl::linalg {

struct EigenDecomposition {
    std::vector<double> values;  // sorted descending
    Matrix vectors;              // columns are the matching eigenvectors
};

struct SvdResult {
    Matrix u;
    std::vector<double> singular_values;  // non-negative, descending
    Matrix v;
};

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
/// Stops when the off-diagonal Frobenius norm drops below 1e-12 relative
/// to the input norm, or after 100 sweeps. Input must be square and
/// symmetric within 1e-10 (relative to its largest entry).
EigenDecomposition sym_eig(const Matrix& a);

/// Thin SVD computed from the eigendecomposition of the smaller Gram matrix,
/// with the left side reconstituted column by column and re-orthonormalized.
/// Sign convention: the largest-magnitude entry of each u column is positive.
SvdResult svd(const Matrix& a);

/// D x d orthonormal basis of the top-d principal directions of mean-centered x.
/// Requires N >= 2 rows and 1 <= d <= min(N-1, D). Zero-variance directions are
/// padded with an arbitrary orthonormal complement and a warning is printed.
Matrix pca_basis(const Matrix& x, std::size_t d);

/// H = I - (1/n) 11^T. Symmetric and idempotent.
Matrix centering_matrix(std::size_t n);

/// sign(x) * max(|x| - tau, 0). tau must be >= 0.
double soft_threshold(double x, double tau);

}  // namespace tdtl::linalg
