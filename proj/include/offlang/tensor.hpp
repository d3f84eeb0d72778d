#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace offlang {

/// Dense row-major matrix of doubles. Vectors are 1 x n matrices.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    std::size_t size() const noexcept { return data.size(); }
    bool same_shape(const Matrix& o) const noexcept { return rows == o.rows && cols == o.cols; }
    void set_zero() { std::fill(data.begin(), data.end(), 0.0); }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

namespace linalg {

// out = a * b (+ bias broadcast over rows when given).
Matrix matmul(const Matrix& a, const Matrix& b, const Matrix* bias = nullptr);
// out += a^T * b
void accumulate_at_b(const Matrix& a, const Matrix& b, Matrix& out);
// out = a * b^T
Matrix matmul_bt(const Matrix& a, const Matrix& b);
// out(0, j) += sum_i a(i, j)
void accumulate_column_sums(const Matrix& a, Matrix& out);

}  // namespace linalg

}  // namespace offlang
