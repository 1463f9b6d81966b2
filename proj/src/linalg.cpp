#include "tdtl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "tdtl/errors.hpp"

namespace tdtl::linalg {

namespace {

double off_diagonal_frobenius(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

// Orthonormalizes column `col` of u against columns [0, col) by modified
// Gram-Schmidt. Returns false if the column vanishes.
bool orthonormalize_column(Matrix& u, std::size_t col) {
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < col; ++j) {
            double d = 0.0;
            for (std::size_t i = 0; i < u.rows; ++i) d += u(i, j) * u(i, col);
            for (std::size_t i = 0; i < u.rows; ++i) u(i, col) -= d * u(i, j);
        }
    }
    double n = 0.0;
    for (std::size_t i = 0; i < u.rows; ++i) n += u(i, col) * u(i, col);
    n = std::sqrt(n);
    if (n < 1e-12) return false;
    for (std::size_t i = 0; i < u.rows; ++i) u(i, col) /= n;
    return true;
}

// Fills column `col` with a unit vector orthogonal to all previous columns,
// seeding from canonical basis vectors.
void complete_column(Matrix& u, std::size_t col) {
    for (std::size_t seed = 0; seed < u.rows; ++seed) {
        for (std::size_t i = 0; i < u.rows; ++i) u(i, col) = (i == seed) ? 1.0 : 0.0;
        if (orthonormalize_column(u, col)) return;
    }
    throw NumericError("svd: failed to complete orthonormal basis");
}

}  // namespace

namespace {

// Flips u/v column pairs so the largest-magnitude entry of each u column is positive.
void normalize_svd_signs(SvdResult& r) {
    for (std::size_t j = 0; j < r.singular_values.size(); ++j) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < r.u.rows; ++i)
            if (std::fabs(r.u(i, j)) > std::fabs(r.u(arg, j))) arg = i;
        if (r.u(arg, j) < 0.0) {
            for (std::size_t i = 0; i < r.u.rows; ++i) r.u(i, j) = -r.u(i, j);
            for (std::size_t i = 0; i < r.v.rows; ++i) r.v(i, j) = -r.v(i, j);
        }
    }
}

}  // namespace

EigenDecomposition sym_eig(const Matrix& a) {
    if (a.rows != a.cols)
        throw ContractError("sym_eig: matrix must be square, got " + a.shape_str());
    const std::size_t n = a.rows;
    const double scale = std::max(1.0, max_abs(a));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(a(i, j) - a(j, i)) > 1e-10 * scale)
                throw ContractError("sym_eig: matrix is not symmetric at (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");

    Matrix b = a;
    // Fold in any sub-tolerance asymmetry so rotations see an exactly symmetric matrix.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            b(i, j) = b(j, i) = 0.5 * (b(i, j) + b(j, i));

    Matrix v = Matrix::identity(n);
    const double target = 1e-12 * std::max(1.0, frobenius_norm(a));

    for (int sweep = 0; sweep < 100; ++sweep) {
        if (off_diagonal_frobenius(b) <= target) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = b(p, q);
                if (apq == 0.0) continue;
                const double theta = (b(q, q) - b(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double bkp = b(k, p), bkq = b(k, q);
                    b(k, p) = b(p, k) = c * bkp - s * bkq;
                    b(k, q) = b(q, k) = s * bkp + c * bkq;
                }
                const double bpp = b(p, p), bqq = b(q, q);
                b(p, p) = bpp - t * apq;
                b(q, q) = bqq + t * apq;
                b(p, q) = b(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return b(i, i) > b(j, j); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = b(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    ensure_finite(out.vectors, "sym_eig");
    return out;
}

SvdResult svd(const Matrix& a) {
    const std::size_t m = a.rows, n = a.cols;
    if (m == 0 || n == 0) throw ContractError("svd: empty matrix");

    if (m < n) {
        SvdResult t = svd(transpose(a));
        SvdResult out{t.v, t.singular_values, t.u};
        normalize_svd_signs(out);
        return out;
    }

    // Gram route: eigenvectors of a^T a give v; u follows from a*v / sigma.
    Matrix g = matmul(transpose(a), a);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            g(i, j) = g(j, i) = 0.5 * (g(i, j) + g(j, i));
    EigenDecomposition e = sym_eig(g);

    SvdResult out;
    out.v = e.vectors;
    out.singular_values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.singular_values[i] = std::sqrt(std::max(e.values[i], 0.0));

    const double sigma_max = out.singular_values.empty() ? 0.0 : out.singular_values[0];
    const double rank_tol = 1e-12 * std::max(1.0, sigma_max) * static_cast<double>(std::max(m, n));

    out.u = Matrix(m, n);
    for (std::size_t j = 0; j < n; ++j) {
        if (out.singular_values[j] > rank_tol) {
            for (std::size_t i = 0; i < m; ++i) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k) s += a(i, k) * out.v(k, j);
                out.u(i, j) = s / out.singular_values[j];
            }
            if (!orthonormalize_column(out.u, j)) complete_column(out.u, j);
        } else {
            out.singular_values[j] = std::max(out.singular_values[j], 0.0);
            complete_column(out.u, j);
        }
    }

    normalize_svd_signs(out);
    ensure_finite(out.u, "svd");
    ensure_finite(out.v, "svd");
    return out;
}

Matrix pca_basis(const Matrix& x, std::size_t d) {
    const std::size_t n = x.rows, dim = x.cols;
    if (n < 2) throw ContractError("pca_basis: need at least 2 rows, got " + std::to_string(n));
    const std::size_t d_max = std::min(n - 1, dim);
    if (d < 1 || d > d_max)
        throw ContractError("pca_basis: d=" + std::to_string(d) + " outside [1, " +
                            std::to_string(d_max) + "]");

    Matrix xc = subtract_row_vector(x, column_means(x));
    Matrix cov = scale(matmul(transpose(xc), xc), 1.0 / static_cast<double>(n - 1));
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = i + 1; j < dim; ++j)
            cov(i, j) = cov(j, i) = 0.5 * (cov(i, j) + cov(j, i));

    EigenDecomposition e = sym_eig(cov);
    const double lead = std::max(e.values.empty() ? 0.0 : e.values[0], 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        if (e.values[j] <= 1e-12 * std::max(1.0, lead)) {
            std::cerr << "warning: pca_basis: direction " << j
                      << " has (near-)zero variance; basis padded with an arbitrary "
                         "orthonormal complement\n";
            break;
        }
    }
    return take_columns(e.vectors, 0, d);
}

Matrix centering_matrix(std::size_t n) {
    if (n == 0) throw ContractError("centering_matrix: n must be >= 1");
    Matrix h(n, n, -1.0 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) h(i, i) += 1.0;
    return h;
}

double soft_threshold(double x, double tau) {
    if (tau < 0.0) throw ContractError("soft_threshold: tau must be >= 0");
    const double shrunk = std::fabs(x) - tau;
    if (shrunk <= 0.0) return 0.0;
    return x > 0.0 ? shrunk : -shrunk;
}

}  // namespace tdtl::linalg
