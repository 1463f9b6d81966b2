#include "tdtl/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tdtl/errors.hpp"

namespace tdtl::adapt {

namespace {

void check_orthonormal(const Matrix& basis, const char* who) {
    Matrix g = matmul(linalg::transpose(basis), basis);
    for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = 0; j < g.cols; ++j)
            if (std::fabs(g(i, j) - (i == j ? 1.0 : 0.0)) > 1e-6)
                throw ContractError(std::string(who) +
                                    ": basis columns are not orthonormal");
}

Matrix vstack(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols)
        throw ContractError("vstack: column mismatch " + a.shape_str() + " vs " +
                            b.shape_str());
    Matrix c(a.rows + b.rows, a.cols);
    std::copy(a.data.begin(), a.data.end(), c.data.begin());
    std::copy(b.data.begin(), b.data.end(), c.data.begin() + a.data.size());
    return c;
}

void symmetrize(Matrix& m) {
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = i + 1; j < m.cols; ++j)
            m(i, j) = m(j, i) = 0.5 * (m(i, j) + m(j, i));
}

}  // namespace

SaModel sa_fit(const Matrix& xs, const Matrix& xt, std::size_t d) {
    SaModel model;
    model.source.basis = linalg::pca_basis(xs, d);
    model.target.basis = linalg::pca_basis(xt, d);
    model.alignment =
        matmul(linalg::transpose(model.source.basis), model.target.basis);
    return model;
}

Matrix sa_transform_source(const SaModel& model, const Matrix& xs) {
    return matmul(matmul(xs, model.source.basis), model.alignment);
}

Matrix sa_transform_target(const SaModel& model, const Matrix& xt) {
    return matmul(xt, model.target.basis);
}

GeodesicKernel gfk_fit(const Subspace& ps, const Subspace& pt) {
    const std::size_t dim = ps.basis.rows;
    const std::size_t d = ps.basis.cols;
    if (pt.basis.rows != dim || pt.basis.cols != d)
        throw ContractError("gfk_fit: subspaces must share shape, got " +
                            ps.basis.shape_str() + " vs " + pt.basis.shape_str());
    if (d >= dim)
        throw ContractError("gfk_fit: d == D leaves no orthogonal complement");
    check_orthonormal(ps.basis, "gfk_fit(ps)");
    check_orthonormal(pt.basis, "gfk_fit(pt)");

    // Orthogonal complement of Ps: eigenvectors of I - Ps Ps^T with unit eigenvalue.
    Matrix proj = matmul(ps.basis, linalg::transpose(ps.basis));
    Matrix residual = Matrix::identity(dim) - proj;
    symmetrize(residual);
    linalg::EigenDecomposition comp = linalg::sym_eig(residual);
    std::size_t keep = 0;
    while (keep < comp.values.size() && comp.values[keep] > 0.5) ++keep;
    if (keep != dim - d)
        throw NumericError("gfk_fit: complement rank " + std::to_string(keep) +
                           ", expected " + std::to_string(dim - d));
    Matrix rs = linalg::take_columns(comp.vectors, 0, keep);

    // Principal angles between the subspaces via the CS structure of
    // [Ps Rs]^T Pt; the SVD of A pairs each angle with its directions.
    Matrix a = matmul(linalg::transpose(ps.basis), pt.basis);       // d x d
    Matrix b = matmul(linalg::transpose(rs), pt.basis);             // (D-d) x d
    linalg::SvdResult asvd = linalg::svd(a);
    Matrix c = matmul(b, asvd.v);                                   // -U2 Sigma

    Matrix u2(dim - d, d);
    std::vector<double> theta(d);
    for (std::size_t j = 0; j < d; ++j) {
        const double gamma = std::clamp(asvd.singular_values[j], 0.0, 1.0);
        theta[j] = std::acos(gamma);
        double sigma = 0.0;
        for (std::size_t i = 0; i + d < dim; ++i) sigma += c(i, j) * c(i, j);
        sigma = std::sqrt(sigma);
        if (sigma > 1e-12)
            for (std::size_t i = 0; i + d < dim; ++i) u2(i, j) = -c(i, j) / sigma;
        // sigma ~ 0 (theta ~ 0): lambda2 and lambda3 vanish, the column is unused.
    }

    std::vector<double> l1(d), l2(d), l3(d);
    for (std::size_t j = 0; j < d; ++j) {
        const double t = theta[j];
        if (t < 1e-8) {
            l1[j] = 2.0;
            l2[j] = 0.0;
            l3[j] = 0.0;
        } else {
            l1[j] = 1.0 + std::sin(2.0 * t) / (2.0 * t);
            l2[j] = (std::cos(2.0 * t) - 1.0) / (2.0 * t);
            l3[j] = 1.0 - std::sin(2.0 * t) / (2.0 * t);
        }
    }

    Matrix omega1 = matmul(ps.basis, asvd.u);  // D x d
    Matrix omega2 = matmul(rs, u2);            // D x d

    GeodesicKernel kernel;
    kernel.g = Matrix(dim, dim);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t r = 0; r < dim; ++r) {
            const double o1 = omega1(r, j), o2 = omega2(r, j);
            for (std::size_t cidx = 0; cidx < dim; ++cidx) {
                const double p1 = omega1(cidx, j), p2 = omega2(cidx, j);
                kernel.g(r, cidx) +=
                    l1[j] * o1 * p1 + l2[j] * (o1 * p2 + o2 * p1) + l3[j] * o2 * p2;
            }
        }
    }
    symmetrize(kernel.g);
    linalg::ensure_finite(kernel.g, "gfk_fit");
    return kernel;
}

namespace {

std::vector<int> nn1_from_sq_distances(const Matrix& d2,
                                       const std::vector<int>& train_labels) {
    std::vector<int> out(d2.rows);
    for (std::size_t i = 0; i < d2.rows; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < d2.cols; ++j)
            if (d2(i, j) < d2(i, best)) best = j;
        out[i] = train_labels[best];
    }
    return out;
}

}  // namespace

std::vector<int> nn1_classify_kernel(const GeodesicKernel& kernel, const Matrix& train,
                                     const std::vector<int>& train_labels,
                                     const Matrix& test) {
    if (train.rows == 0) throw ContractError("nn1_classify_kernel: empty training set");
    if (train.rows != train_labels.size())
        throw ContractError("nn1_classify_kernel: label count mismatch");
    if (train.cols != test.cols || train.cols != kernel.g.rows)
        throw ContractError("nn1_classify_kernel: dimension mismatch");

    Matrix tg = matmul(test, kernel.g);    // n_test x D
    Matrix rg = matmul(train, kernel.g);   // n_train x D
    Matrix cross = matmul(tg, linalg::transpose(train));

    std::vector<double> test_sq(test.rows), train_sq(train.rows);
    for (std::size_t i = 0; i < test.rows; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < test.cols; ++k) s += tg(i, k) * test(i, k);
        test_sq[i] = s;
    }
    for (std::size_t j = 0; j < train.rows; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < train.cols; ++k) s += rg(j, k) * train(j, k);
        train_sq[j] = s;
    }
    Matrix d2(test.rows, train.rows);
    for (std::size_t i = 0; i < test.rows; ++i)
        for (std::size_t j = 0; j < train.rows; ++j)
            d2(i, j) = test_sq[i] - 2.0 * cross(i, j) + train_sq[j];
    return nn1_from_sq_distances(d2, train_labels);
}

TcaModel tca_fit(const Matrix& xs, const Matrix& xt, double mu, std::size_t m) {
    if (mu <= 0.0) throw ContractError("tca_fit: mu must be > 0");
    if (xs.rows == 0 || xt.rows == 0) throw ContractError("tca_fit: empty domain");
    const std::size_t ns = xs.rows, nt = xt.rows, n = ns + nt;
    if (m < 1 || m > n)
        throw ContractError("tca_fit: m=" + std::to_string(m) + " outside [1, " +
                            std::to_string(n) + "]");

    TcaModel model;
    model.mu = mu;
    model.train_data = vstack(xs, xt);

    Matrix k = matmul(model.train_data, linalg::transpose(model.train_data));
    symmetrize(k);

    Matrix l(n, n);
    const double ss = 1.0 / (double(ns) * double(ns));
    const double tt = 1.0 / (double(nt) * double(nt));
    const double st = -1.0 / (double(ns) * double(nt));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            l(i, j) = (i < ns) == (j < ns) ? (i < ns ? ss : tt) : st;

    Matrix klk = matmul(matmul(k, l), k);
    symmetrize(klk);
    Matrix khk = matmul(matmul(k, linalg::centering_matrix(n)), k);
    symmetrize(khk);

    Matrix left = klk;
    const double ridge = 1e-8 * (linalg::trace(klk) + mu * double(n)) / double(n);
    for (std::size_t i = 0; i < n; ++i) left(i, i) += mu + std::fabs(ridge);

    linalg::EigenDecomposition eb = linalg::sym_eig(left);
    const double floor = 1e-14 * std::max(1.0, eb.values.empty() ? 0.0 : eb.values[0]);
    for (double v : eb.values)
        if (v < floor)
            throw NumericError(
                "tca_fit: left operand numerically singular (condition ~" +
                std::to_string(eb.values[0] / std::max(v, 1e-300)) + ")");

    // B^{-1/2} via the eigendecomposition, then a symmetric reduced problem.
    Matrix bihalf(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < n; ++t)
                s += eb.vectors(i, t) * eb.vectors(j, t) / std::sqrt(eb.values[t]);
            bihalf(i, j) = s;
        }
    }
    Matrix reduced = matmul(matmul(bihalf, khk), bihalf);
    symmetrize(reduced);
    linalg::EigenDecomposition em = linalg::sym_eig(reduced);
    model.components = matmul(bihalf, linalg::take_columns(em.vectors, 0, m));
    linalg::ensure_finite(model.components, "tca_fit");
    return model;
}

Matrix tca_embed(const TcaModel& model, const Matrix& x) {
    if (x.cols != model.train_data.cols)
        throw ContractError("tca_embed: feature dimension mismatch");
    Matrix kx = matmul(x, linalg::transpose(model.train_data));
    return matmul(kx, model.components);
}

std::vector<int> nn1_classify(const Matrix& train, const std::vector<int>& train_labels,
                              const Matrix& test) {
    if (train.rows == 0) throw ContractError("nn1_classify: empty training set");
    if (train.rows != train_labels.size())
        throw ContractError("nn1_classify: label count mismatch");
    if (train.cols != test.cols)
        throw ContractError("nn1_classify: dimension mismatch " + train.shape_str() +
                            " vs " + test.shape_str());
    std::vector<int> out(test.rows);
    for (std::size_t i = 0; i < test.rows; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        const double* ti = test.row_ptr(i);
        for (std::size_t j = 0; j < train.rows; ++j) {
            const double* tj = train.row_ptr(j);
            double d = 0.0;
            for (std::size_t k = 0; k < train.cols; ++k) {
                const double diff = ti[k] - tj[k];
                d += diff * diff;
            }
            if (d < best) {
                best = d;
                arg = j;
            }
        }
        out[i] = train_labels[arg];
    }
    return out;
}

double mean_discrepancy(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols)
        throw ContractError("mean_discrepancy: dimension mismatch");
    const std::vector<double> ma = linalg::column_means(a);
    const std::vector<double> mb = linalg::column_means(b);
    double s = 0.0;
    for (std::size_t i = 0; i < ma.size(); ++i) s += (ma[i] - mb[i]) * (ma[i] - mb[i]);
    return std::sqrt(s);
}

}  // namespace tdtl::adapt
