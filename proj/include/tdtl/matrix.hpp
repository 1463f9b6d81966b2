#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace tdtl::linalg {

/// Dense row-major matrix of 64-bit reals. The workhorse container for
/// features, network weights, kernels and label matrices.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> entries);

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }
    double* row_ptr(std::size_t r) { return data.data() + r * cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    std::string shape_str() const;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix hconcat(const Matrix& a, const Matrix& b);

/// Columns [first, first+count) as a new matrix.
Matrix take_columns(const Matrix& a, std::size_t first, std::size_t count);
/// Gathers the given rows, in order, into a new matrix.
Matrix take_rows(const Matrix& a, const std::vector<std::size_t>& idx);

std::vector<double> column_means(const Matrix& a);
Matrix subtract_row_vector(const Matrix& a, const std::vector<double>& v);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double trace(const Matrix& a);

/// Argmax per row, ties toward the lowest index.
std::vector<int> argmax_rows(const Matrix& a);

/// Throws NumericError if any entry is NaN or Inf. `op` names the producer.
void ensure_finite(const Matrix& a, const char* op);

}  // namespace tdtl::linalg
