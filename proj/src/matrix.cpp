#include "tdtl/matrix.hpp"

#include <cmath>
#include <cstring>

#include "tdtl/errors.hpp"

namespace tdtl::linalg {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> entries) {
    Matrix m;
    m.rows = entries.size();
    m.cols = entries.size() ? entries.begin()->size() : 0;
    m.data.reserve(m.rows * m.cols);
    for (const auto& row : entries) {
        if (row.size() != m.cols)
            throw ContractError("from_rows: ragged row lengths");
        m.data.insert(m.data.end(), row.begin(), row.end());
    }
    return m;
}

std::string Matrix::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw ContractError("matmul: shape mismatch " + a.shape_str() + " * " + b.shape_str());
    Matrix c(a.rows, b.cols);
    // ikj order keeps the inner loop contiguous in both b and c.
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* ci = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* bk = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
        }
    }
    ensure_finite(c, "matmul");
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw ContractError("add: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    Matrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw ContractError("sub: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    Matrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
    return c;
}

Matrix scale(const Matrix& a, double s) {
    Matrix c = a;
    for (double& x : c.data) x *= s;
    return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw ContractError("hadamard: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    Matrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] *= b.data[i];
    return c;
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows)
        throw ContractError("hconcat: row mismatch " + a.shape_str() + " vs " + b.shape_str());
    Matrix c(a.rows, a.cols + b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        std::memcpy(c.row_ptr(i), a.row_ptr(i), a.cols * sizeof(double));
        std::memcpy(c.row_ptr(i) + a.cols, b.row_ptr(i), b.cols * sizeof(double));
    }
    return c;
}

Matrix take_columns(const Matrix& a, std::size_t first, std::size_t count) {
    if (first + count > a.cols)
        throw ContractError("take_columns: range out of bounds for " + a.shape_str());
    Matrix c(a.rows, count);
    for (std::size_t i = 0; i < a.rows; ++i)
        std::memcpy(c.row_ptr(i), a.row_ptr(i) + first, count * sizeof(double));
    return c;
}

Matrix take_rows(const Matrix& a, const std::vector<std::size_t>& idx) {
    Matrix c(idx.size(), a.cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= a.rows)
            throw ContractError("take_rows: index " + std::to_string(idx[i]) +
                                " out of bounds for " + a.shape_str());
        std::memcpy(c.row_ptr(i), a.row_ptr(idx[i]), a.cols * sizeof(double));
    }
    return c;
}

std::vector<double> column_means(const Matrix& a) {
    std::vector<double> m(a.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) m[j] += a(i, j);
    if (a.rows > 0)
        for (double& x : m) x /= static_cast<double>(a.rows);
    return m;
}

Matrix subtract_row_vector(const Matrix& a, const std::vector<double>& v) {
    if (v.size() != a.cols)
        throw ContractError("subtract_row_vector: length mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) c(i, j) -= v[j];
    return c;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double x : a.data) s += x * x;
    return std::sqrt(s);
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double x : a.data) m = std::max(m, std::fabs(x));
    return m;
}

double trace(const Matrix& a) {
    double t = 0.0;
    const std::size_t n = std::min(a.rows, a.cols);
    for (std::size_t i = 0; i < n; ++i) t += a(i, i);
    return t;
}

std::vector<int> argmax_rows(const Matrix& a) {
    std::vector<int> out(a.rows, 0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* r = a.row_ptr(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < a.cols; ++j)
            if (r[j] > r[best]) best = j;
        out[i] = static_cast<int>(best);
    }
    return out;
}

void ensure_finite(const Matrix& a, const char* op) {
    for (double x : a.data)
        if (!std::isfinite(x))
            throw NumericError(std::string(op) + ": non-finite entry in result");
}

}  // namespace tdtl::linalg
