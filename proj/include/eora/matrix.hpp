#pragma once

#include <cstddef>
#include <vector>

#include "eora/errors.hpp"

namespace eora {

/// Dense row-major matrix of doubles. The universal carrier for weights,
/// activations, deltas and low-rank factors.
class Matrix {
public:
    Matrix() = default;

    // Zero-initialized.
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    // Takes ownership of row-major data; rejects size mismatch and
    // non-finite entries.
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double operator()(std::size_t i, std::size_t j) const {
        return data_[i * cols_ + j];
    }
    double &operator()(std::size_t i, std::size_t j) {
        return data_[i * cols_ + j];
    }

    const std::vector<double> &data() const { return data_; }
    std::vector<double> &data() { return data_; }

    const double *row_ptr(std::size_t i) const { return data_.data() + i * cols_; }
    double *row_ptr(std::size_t i) { return data_.data() + i * cols_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Throws ValidationError if any entry is NaN/Inf.
void require_finite(const Matrix &m, const char *what);

Matrix matmul(const Matrix &a, const Matrix &b);
Matrix transpose(const Matrix &m);
double frobenius_norm(const Matrix &m);

Matrix add(const Matrix &a, const Matrix &b);
Matrix subtract(const Matrix &a, const Matrix &b);
double trace(const Matrix &m);

// Column/row scaling by a diagonal: scale_columns(M, s) = M * diag(s),
// scale_rows(M, s) = diag(s) * M.
Matrix scale_columns(const Matrix &m, const std::vector<double> &s);
Matrix scale_rows(const Matrix &m, const std::vector<double> &s);

bool same_shape(const Matrix &a, const Matrix &b);

} // namespace eora
