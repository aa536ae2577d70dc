#include "eora/compensation.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace eora {

const char *to_string(CompensationMethod m) {
    switch (m) {
        case CompensationMethod::none: return "none";
        case CompensationMethod::svd_plain: return "svd_plain";
        case CompensationMethod::act_s: return "act_s";
        case CompensationMethod::eora: return "eora";
    }
    return "?";
}

namespace {

void check_rank(const CompressedLayer &layer, int r) {
    const std::size_t min_dim = std::min(layer.d(), layer.k());
    if (r < 1 || static_cast<std::size_t>(r) > min_dim) {
        throw RankError("compensate: rank " + std::to_string(r) + " outside [1, " +
                        std::to_string(min_dim) + "]");
    }
}

// B = U Sigma, A = Vt with rows belonging to zero singular values zeroed:
// those directions carry no signal, and zeroing them makes a zero error
// produce a genuinely zero adapter.
std::pair<Matrix, Matrix> factors_from_svd(const SvdFactors &f) {
    Matrix b = scale_columns(f.u, f.singular_values);
    Matrix a = f.vt;
    for (std::size_t j = 0; j < f.singular_values.size(); ++j) {
        if (f.singular_values[j] == 0.0) {
            for (std::size_t i = 0; i < a.cols(); ++i) a(j, i) = 0.0;
        }
    }
    return {std::move(b), std::move(a)};
}

} // namespace

DiagonalScaling activation_scaling(const Matrix &mean_activation) {
    const std::size_t k = mean_activation.rows(), n = mean_activation.cols();
    DiagonalScaling scaling;
    scaling.s.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += std::fabs(mean_activation(i, j));
        }
        // Floor keeps S invertible for silent channels.
        scaling.s[i] = std::max(std::sqrt(acc / static_cast<double>(n)), 1e-6);
    }
    return scaling;
}

LowRankAdapter compensate_eora(const CompressedLayer &layer,
                               const CalibrationStats &stats, int r) {
    check_rank(layer, r);
    if (stats.k() != layer.k()) {
        throw DimensionError("compensate_eora: calibration width " +
                             std::to_string(stats.k()) + " does not match layer k " +
                             std::to_string(layer.k()));
    }
    Matrix delta_proj = matmul(layer.delta(), stats.projector);
    SvdFactors f = truncated_svd(delta_proj, r);
    auto [b, a_proj] = factors_from_svd(f);

    LowRankAdapter adapter;
    adapter.b = std::move(b);
    adapter.a = matmul(a_proj, stats.projector_inv); // fold the back-projection
    adapter.rank = r;
    adapter.method = CompensationMethod::eora;
    return adapter;
}

LowRankAdapter compensate_svd(const CompressedLayer &layer, int r) {
    check_rank(layer, r);
    SvdFactors f = truncated_svd(layer.delta(), r);
    auto [b, a] = factors_from_svd(f);

    LowRankAdapter adapter;
    adapter.b = std::move(b);
    adapter.a = std::move(a);
    adapter.rank = r;
    adapter.method = CompensationMethod::svd_plain;
    return adapter;
}

LowRankAdapter compensate_act_s(const CompressedLayer &layer,
                                const CalibrationStats &stats, int r) {
    check_rank(layer, r);
    if (stats.k() != layer.k()) {
        throw DimensionError("compensate_act_s: calibration width mismatch");
    }
    DiagonalScaling scaling = activation_scaling(stats.mean_activation);
    Matrix delta_scaled = scale_columns(layer.delta(), scaling.s);
    SvdFactors f = truncated_svd(delta_scaled, r);
    auto [b, a_scaled] = factors_from_svd(f);

    std::vector<double> inv(scaling.s.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / scaling.s[i];

    LowRankAdapter adapter;
    adapter.b = std::move(b);
    adapter.a = scale_columns(a_scaled, inv); // A'' S^-1
    adapter.rank = r;
    adapter.method = CompensationMethod::act_s;
    return adapter;
}

Matrix forward(const CompressedLayer &layer, const LowRankAdapter &adapter,
               const Matrix &x) {
    if (x.rows() != layer.k()) {
        throw DimensionError("forward: x has " + std::to_string(x.rows()) +
                             " rows, layer expects " + std::to_string(layer.k()));
    }
    if (adapter.b.rows() != layer.d() || adapter.a.cols() != layer.k() ||
        adapter.b.cols() != adapter.a.rows()) {
        throw DimensionError("forward: adapter shape does not conform to layer");
    }
    Matrix y = matmul(layer.w_hat, x);
    Matrix ax = matmul(adapter.a, x);   // r x n first: the cheap path
    Matrix bax = matmul(adapter.b, ax);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y.data()[i] += bax.data()[i];
    }
    return y;
}

LowRankAdapter quantize_adapter(const LowRankAdapter &adapter, int bits) {
    CompressedLayer qb = quantize_rtn(adapter.b, bits);
    CompressedLayer qa = quantize_rtn(adapter.a, bits);

    LowRankAdapter out;
    out.b = std::move(qb.w_hat);
    out.a = std::move(qa.w_hat);
    out.rank = adapter.rank;
    out.method = adapter.method;
    out.quant = AdapterQuant{std::move(*qb.quant), std::move(*qa.quant)};
    return out;
}

} // namespace eora
