#include "eora/synthetic.hpp"

#include <cmath>

#include "eora/linalg.hpp"

namespace eora {

Matrix random_matrix(Rng &rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (double &v : m.data()) v = rng.gaussian();
    return m;
}

Matrix random_symmetric(Rng &rng, std::size_t n) {
    Matrix g = random_matrix(rng, n, n);
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            s(i, j) = 0.5 * (g(i, j) + g(j, i));
        }
    }
    return s;
}

Matrix random_orthogonal(Rng &rng, std::size_t n) {
    return sym_eig(random_symmetric(rng, n)).eigenvectors;
}

Matrix random_spd_factor(Rng &rng, std::size_t k) {
    Matrix q = random_orthogonal(rng, k);
    std::vector<double> sqrt_d(k);
    const double lo = std::log(1e-2), hi = std::log(1e2);
    for (std::size_t i = 0; i < k; ++i) {
        sqrt_d[i] = std::sqrt(std::exp(rng.uniform(lo, hi)));
    }
    // L = Q^T sqrt(D) so that L L^T = Q^T D Q.
    return scale_columns(transpose(q), sqrt_d);
}

ActivationBatch synthetic_activations(Rng &rng, std::size_t k, std::size_t n,
                                      std::size_t samples, CovarianceKind covariance) {
    ActivationBatch batch;
    batch.samples.reserve(samples);
    if (covariance == CovarianceKind::identity) {
        for (std::size_t s = 0; s < samples; ++s) {
            batch.samples.push_back(random_matrix(rng, k, n));
        }
    } else {
        Matrix factor = random_spd_factor(rng, k);
        for (std::size_t s = 0; s < samples; ++s) {
            batch.samples.push_back(matmul(factor, random_matrix(rng, k, n)));
        }
    }
    return batch;
}

} // namespace eora
