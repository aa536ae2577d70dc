#pragma once

#include <cstdint>

#include "eora/calibration.hpp"
#include "eora/matrix.hpp"
#include "eora/rng.hpp"

namespace eora {

enum class CovarianceKind { identity, random_spd };

// Dense Gaussian matrix, entries N(0, 1), row-major fill order.
Matrix random_matrix(Rng &rng, std::size_t rows, std::size_t cols);

// Random symmetric matrix (Gaussian, symmetrized).
Matrix random_symmetric(Rng &rng, std::size_t n);

// Random orthogonal matrix: eigenvectors of a random symmetric matrix.
Matrix random_orthogonal(Rng &rng, std::size_t n);

// Factor L with L L^T = Q^T D Q, D log-uniform in [1e-2, 1e2]: sampling
// x = L z with z ~ N(0, I) gives an anisotropic activation eigenspace, so
// the eigenprojection actually differs from plain SVD.
Matrix random_spd_factor(Rng &rng, std::size_t k);

// Calibration batch of `samples` draws of shape k x n with the chosen
// covariance (one factor shared across the batch).
ActivationBatch synthetic_activations(Rng &rng, std::size_t k, std::size_t n,
                                      std::size_t samples, CovarianceKind covariance);

} // namespace eora
