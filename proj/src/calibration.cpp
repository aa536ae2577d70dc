#include "eora/calibration.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "eora/tensor_io.hpp"

namespace eora {

Matrix average_activations(const ActivationBatch &batch) {
    if (batch.samples.empty()) {
        throw ValidationError("average_activations: empty batch");
    }
    const std::size_t k = batch.k(), n = batch.n();
    for (const Matrix &s : batch.samples) {
        if (s.rows() != k || s.cols() != n) {
            throw DimensionError("average_activations: sample shape mismatch");
        }
        require_finite(s, "average_activations");
    }

    // Neumaier-compensated accumulation, samples in order: the result is
    // independent of how many samples there are up to ~2 ulp.
    const std::size_t sz = k * n;
    std::vector<double> sum(sz, 0.0), comp(sz, 0.0);
    for (const Matrix &s : batch.samples) {
        for (std::size_t i = 0; i < sz; ++i) {
            double v = s.data()[i];
            double t = sum[i] + v;
            if (std::fabs(sum[i]) >= std::fabs(v)) {
                comp[i] += (sum[i] - t) + v;
            } else {
                comp[i] += (v - t) + sum[i];
            }
            sum[i] = t;
        }
    }
    Matrix mean(k, n);
    const double inv = 1.0 / static_cast<double>(batch.sample_count());
    for (std::size_t i = 0; i < sz; ++i) {
        mean.data()[i] = (sum[i] + comp[i]) * inv;
    }
    return mean;
}

CalibrationStats build_stats(const Matrix &mean_activation, double eigen_floor_rel) {
    if (!(eigen_floor_rel > 0.0) || eigen_floor_rel > 1e-2) {
        throw ParameterError("build_stats: eigen_floor_rel must be in (0, 1e-2]");
    }
    require_finite(mean_activation, "build_stats");
    if (mean_activation.rows() == 0 || mean_activation.cols() == 0) {
        throw DimensionError("build_stats: empty activation");
    }

    const std::size_t k = mean_activation.rows();
    Matrix gram_raw = matmul(mean_activation, transpose(mean_activation));
    Matrix gram(k, k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            gram(i, j) = 0.5 * (gram_raw(i, j) + gram_raw(j, i));
        }
    }

    CalibrationStats stats;
    stats.mean_activation = mean_activation;
    stats.eig = sym_eig(gram);
    stats.gram = std::move(gram);

    const double lambda_max = stats.eig.eigenvalues.front();
    if (lambda_max <= 0.0) {
        throw DegenerateCalibrationError(
            "build_stats: mean activation is zero, no usable eigenspace");
    }
    stats.eigen_floor = eigen_floor_rel * lambda_max;

    std::vector<double> sqrt_l(k), inv_sqrt_l(k);
    for (std::size_t i = 0; i < k; ++i) {
        double l = stats.eig.eigenvalues[i];
        if (l < stats.eigen_floor) {
            l = stats.eigen_floor;
            stats.clamped = true;
        }
        sqrt_l[i] = std::sqrt(l);
        inv_sqrt_l[i] = 1.0 / sqrt_l[i];
    }
    stats.projector = scale_columns(stats.eig.eigenvectors, sqrt_l);
    stats.projector_inv = scale_rows(transpose(stats.eig.eigenvectors), inv_sqrt_l);
    return stats;
}

void save_activations(const ActivationBatch &batch, const std::string &path) {
    if (batch.samples.empty()) {
        throw ValidationError("save_activations: empty batch");
    }
    const std::size_t k = batch.k(), n = batch.n();
    TensorData t;
    t.dtype = TensorDtype::f64;
    t.dims = {batch.sample_count(), k, n};
    t.payload.resize(batch.sample_count() * k * n * 8);
    std::uint8_t *dst = t.payload.data();
    for (const Matrix &s : batch.samples) {
        if (s.rows() != k || s.cols() != n) {
            throw DimensionError("save_activations: sample shape mismatch");
        }
        std::memcpy(dst, s.data().data(), k * n * 8);
        dst += k * n * 8;
    }
    write_tensor(path, t);
}

ActivationBatch load_activations(const std::string &path) {
    TensorData t = read_tensor(path);
    if (t.dtype != TensorDtype::f64 || t.dims.size() != 3) {
        throw FormatError(path + ": expected 3-D f64 activation tensor");
    }
    const std::size_t s = static_cast<std::size_t>(t.dims[0]);
    const std::size_t k = static_cast<std::size_t>(t.dims[1]);
    const std::size_t n = static_cast<std::size_t>(t.dims[2]);
    ActivationBatch batch;
    batch.samples.reserve(s);
    const std::uint8_t *src = t.payload.data();
    for (std::size_t i = 0; i < s; ++i) {
        std::vector<double> data(k * n);
        std::memcpy(data.data(), src, k * n * 8);
        src += k * n * 8;
        batch.samples.emplace_back(k, n, std::move(data));
    }
    return batch;
}

} // namespace eora
