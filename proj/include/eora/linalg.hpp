#pragma once

#include <vector>

#include "eora/matrix.hpp"

namespace eora {

/// Symmetric eigendecomposition G = Q diag(lambda) Q^T with eigenvalues
/// sorted descending and orthonormal eigenvector columns.
struct EigenDecomposition {
    Matrix eigenvectors;              // k x k, columns orthonormal
    std::vector<double> eigenvalues;  // length k, descending
};

/// Truncated SVD M ~= U diag(sigma) Vt with orthonormal U columns and Vt
/// rows. Singular values are non-increasing and >= 0; for rank-deficient
/// inputs the factors are completed to orthonormal and the tail singular
/// values are exact zeros. Sign convention: in each column of U the entry
/// of largest magnitude is non-negative.
struct SvdFactors {
    Matrix u;                             // d x r
    std::vector<double> singular_values;  // length r
    Matrix vt;                            // r x k
};

// Cyclic Jacobi eigensolver. Precondition: g square, finite, and symmetric
// to within ||G - G^T||_F <= 1e-10 ||G||_F (the caller symmetrizes first).
EigenDecomposition sym_eig(const Matrix &g);

// One-sided Jacobi SVD truncated to rank r, 1 <= r <= min(rows, cols).
SvdFactors truncated_svd(const Matrix &m, int r);

} // namespace eora
