#include "offlang/tensor.hpp"

#include "offlang/error.hpp"

namespace offlang::linalg {

Matrix matmul(const Matrix& a, const Matrix& b, const Matrix* bias) {
    if (a.cols != b.rows) throw Error(Errc::shape_mismatch, "matmul: inner dimensions differ");
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* o = out.data.data() + i * out.cols;
        if (bias) {
            for (std::size_t j = 0; j < b.cols; ++j) o[j] = bias->data[j];
        }
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double x = a(i, k);
            if (x == 0.0) continue;
            const double* brow = b.data.data() + k * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j) o[j] += x * brow[j];
        }
    }
    return out;
}

void accumulate_at_b(const Matrix& a, const Matrix& b, Matrix& out) {
    if (a.rows != b.rows || out.rows != a.cols || out.cols != b.cols) {
        throw Error(Errc::shape_mismatch, "accumulate_at_b: shapes differ");
    }
    for (std::size_t r = 0; r < a.rows; ++r) {
        const double* brow = b.data.data() + r * b.cols;
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double x = a(r, i);
            if (x == 0.0) continue;
            double* o = out.data.data() + i * out.cols;
            for (std::size_t j = 0; j < b.cols; ++j) o[j] += x * brow[j];
        }
    }
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw Error(Errc::shape_mismatch, "matmul_bt: inner dimensions differ");
    Matrix out(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + i * a.cols;
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.data.data() + j * b.cols;
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
            out(i, j) = s;
        }
    }
    return out;
}

void accumulate_column_sums(const Matrix& a, Matrix& out) {
    if (out.size() != a.cols) throw Error(Errc::shape_mismatch, "column sums: width differs");
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) out.data[j] += a(i, j);
    }
}

}  // namespace offlang::linalg
