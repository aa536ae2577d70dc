#include "eora/matrix.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace eora {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                             " does not match " + std::to_string(rows_) + "x" +
                             std::to_string(cols_));
    }
    require_finite(*this, "matrix");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void require_finite(const Matrix &m, const char *what) {
    for (double v : m.data()) {
        if (!std::isfinite(v)) {
            throw ValidationError(std::string(what) + ": non-finite entry");
        }
    }
}

bool same_shape(const Matrix &a, const Matrix &b) {
    return a.rows() == b.rows() && a.cols() == b.cols();
}

namespace {

void require_same_shape(const Matrix &a, const Matrix &b, const char *op) {
    if (!same_shape(a, b)) {
        throw DimensionError(std::string(op) + ": shape mismatch (" +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                             " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()) + ")");
    }
}

} // namespace

Matrix matmul(const Matrix &a, const Matrix &b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions differ (" +
                             std::to_string(a.cols()) + " vs " +
                             std::to_string(b.rows()) + ")");
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Matrix out(m, n);
    // ikj order: fixed per-element accumulation sequence, cache-friendly.
    for (std::size_t i = 0; i < m; ++i) {
        double *oi = out.row_ptr(i);
        const double *ai = a.row_ptr(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            const double *bp = b.row_ptr(p);
            for (std::size_t j = 0; j < n; ++j) {
                oi[j] += aip * bp[j];
            }
        }
    }
    return out;
}

Matrix transpose(const Matrix &m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out(j, i) = m(i, j);
        }
    }
    return out;
}

double frobenius_norm(const Matrix &m) {
    double sum = 0.0;
    for (double v : m.data()) sum += v * v;
    return std::sqrt(sum);
}

Matrix add(const Matrix &a, const Matrix &b) {
    require_same_shape(a, b, "add");
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.data()[i] = a.data()[i] + b.data()[i];
    }
    return out;
}

Matrix subtract(const Matrix &a, const Matrix &b) {
    require_same_shape(a, b, "subtract");
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.data()[i] = a.data()[i] - b.data()[i];
    }
    return out;
}

double trace(const Matrix &m) {
    if (m.rows() != m.cols()) {
        throw DimensionError("trace: matrix is not square");
    }
    double t = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) t += m(i, i);
    return t;
}

Matrix scale_columns(const Matrix &m, const std::vector<double> &s) {
    if (s.size() != m.cols()) {
        throw DimensionError("scale_columns: diagonal length mismatch");
    }
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out(i, j) = m(i, j) * s[j];
        }
    }
    return out;
}

Matrix scale_rows(const Matrix &m, const std::vector<double> &s) {
    if (s.size() != m.rows()) {
        throw DimensionError("scale_rows: diagonal length mismatch");
    }
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out(i, j) = m(i, j) * s[i];
        }
    }
    return out;
}

} // namespace eora
