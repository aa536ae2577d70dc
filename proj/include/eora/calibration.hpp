#pragma once

#include <string>
#include <vector>

#include "eora/linalg.hpp"
#include "eora/matrix.hpp"

namespace eora {

/// Calibration activations: sample_count matrices of identical shape k x n
/// (k input features, n token positions).
struct ActivationBatch {
    std::vector<Matrix> samples;

    std::size_t sample_count() const { return samples.size(); }
    std::size_t k() const { return samples.empty() ? 0 : samples[0].rows(); }
    std::size_t n() const { return samples.empty() ? 0 : samples[0].cols(); }
};

/// Averaged activations plus everything EoRA derives from them: the Gram
/// matrix, its eigendecomposition, and the eigenspace projector pair
/// projector = Q sqrt(L), projector_inv = sqrt(L)^-1 Q^T (eigenvalues
/// clamped to a relative floor before the square roots).
struct CalibrationStats {
    Matrix mean_activation;   // k x n
    Matrix gram;              // k x k
    EigenDecomposition eig;
    Matrix projector;         // k x k
    Matrix projector_inv;     // k x k
    double eigen_floor = 0.0; // absolute clamp applied to eigenvalues
    bool clamped = false;     // true if any eigenvalue hit the floor

    std::size_t k() const { return gram.rows(); }
};

// Elementwise mean over samples, accumulated in compensated (Neumaier)
// summation with a fixed order.
Matrix average_activations(const ActivationBatch &batch);

// Gram, eigendecomposition and projectors from an averaged activation.
// eigen_floor_rel in (0, 1e-2], default 1e-10; an all-zero mean activation
// has no usable eigenspace and raises DegenerateCalibrationError.
CalibrationStats build_stats(const Matrix &mean_activation, double eigen_floor_rel = 1e-10);

// Batch persistence as a single 3-D f64 tensor [samples, k, n]; round-trips
// bit-exactly.
void save_activations(const ActivationBatch &batch, const std::string &path);
ActivationBatch load_activations(const std::string &path);

} // namespace eora
