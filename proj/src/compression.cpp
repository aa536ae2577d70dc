#include "eora/compression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace eora {

const char *to_string(CompressionMethod m) {
    switch (m) {
        case CompressionMethod::none: return "none";
        case CompressionMethod::prune_nm: return "prune_nm";
        case CompressionMethod::quant_rtn: return "quant_rtn";
        case CompressionMethod::prune_then_quant: return "prune_then_quant";
    }
    return "?";
}

CompressedLayer prune_nm(const Matrix &w, int n_keep, int m_group) {
    if (m_group < 2 || n_keep < 1 || n_keep > m_group) {
        throw ParameterError("prune_nm: need 1 <= n_keep <= m_group and m_group >= 2, got " +
                             std::to_string(n_keep) + ":" + std::to_string(m_group));
    }
    require_finite(w, "prune_nm");

    SparsityPattern pattern;
    pattern.n_keep = n_keep;
    pattern.m_group = m_group;
    pattern.rows = w.rows();
    pattern.cols = w.cols();
    pattern.mask.assign(w.rows() * w.cols(), 0);

    Matrix w_hat(w.rows(), w.cols());
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < w.rows(); ++i) {
        for (std::size_t start = 0; start < w.cols(); start += m_group) {
            const std::size_t len = std::min<std::size_t>(m_group, w.cols() - start);
            const std::size_t keep = std::min<std::size_t>(n_keep, len);
            idx.resize(len);
            std::iota(idx.begin(), idx.end(), start);
            // Largest magnitude first; ties toward the lower column index.
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                return std::fabs(w(i, a)) > std::fabs(w(i, b));
            });
            for (std::size_t t = 0; t < keep; ++t) {
                w_hat(i, idx[t]) = w(i, idx[t]);
                pattern.mask[i * w.cols() + idx[t]] = 1;
            }
        }
    }

    CompressedLayer layer;
    layer.w = w;
    layer.w_hat = std::move(w_hat);
    layer.method = CompressionMethod::prune_nm;
    layer.pattern = std::move(pattern);
    return layer;
}

namespace {

int max_code(int bits) { return (1 << bits) - 1; }

int clamp_code(double v, int hi) {
    if (v < 0.0) return 0;
    if (v > hi) return hi;
    return static_cast<int>(v);
}

// Row-wise RTN onto the asymmetric grid. Writes dequantized values into
// `out` and returns the per-channel grid parameters.
QuantParams rtn_rows(const Matrix &w, int bits, Matrix &out) {
    const int hi = max_code(bits);
    QuantParams params;
    params.bits = bits;
    params.scale.resize(w.rows());
    params.zero_point.resize(w.rows());

    for (std::size_t i = 0; i < w.rows(); ++i) {
        double mn = 0.0, mx = 0.0; // zero-inclusive channel range
        for (std::size_t j = 0; j < w.cols(); ++j) {
            mn = std::min(mn, w(i, j));
            mx = std::max(mx, w(i, j));
        }
        double scale;
        int zp;
        if (mx == mn) {
            // All-zero channel: any positive scale works; pick one that maps
            // code 0 to an exact zero.
            scale = 1.0 / hi;
            zp = 0;
        } else {
            scale = (mx - mn) / hi;
            zp = clamp_code(std::round(-mn / scale), hi);
        }
        params.scale[i] = scale;
        params.zero_point[i] = zp;
        for (std::size_t j = 0; j < w.cols(); ++j) {
            int q = clamp_code(std::round(w(i, j) / scale) + zp, hi);
            out(i, j) = scale * (q - zp);
        }
    }
    return params;
}

} // namespace

CompressedLayer quantize_rtn(const Matrix &w, int bits) {
    if (bits < 2 || bits > 8) {
        throw ParameterError("quantize_rtn: bits must be in [2, 8], got " +
                             std::to_string(bits));
    }
    require_finite(w, "quantize_rtn");

    Matrix w_hat(w.rows(), w.cols());
    QuantParams params = rtn_rows(w, bits, w_hat);

    CompressedLayer layer;
    layer.w = w;
    layer.w_hat = std::move(w_hat);
    layer.method = CompressionMethod::quant_rtn;
    layer.quant = std::move(params);
    return layer;
}

CompressedLayer prune_then_quantize(const Matrix &w, int n_keep, int m_group, int bits) {
    CompressedLayer pruned = prune_nm(w, n_keep, m_group);
    CompressedLayer quantized = quantize_rtn(pruned.w_hat, bits);

    // Pruned zeros dequantize to exactly zero (code == zero_point), but the
    // contract is that the mask holds regardless of grid arithmetic.
    Matrix w_hat = std::move(quantized.w_hat);
    const SparsityPattern &pattern = *pruned.pattern;
    for (std::size_t i = 0; i < w.rows(); ++i) {
        for (std::size_t j = 0; j < w.cols(); ++j) {
            if (!pattern.kept(i, j)) w_hat(i, j) = 0.0;
        }
    }

    CompressedLayer layer;
    layer.w = w;
    layer.w_hat = std::move(w_hat);
    layer.method = CompressionMethod::prune_then_quant;
    layer.quant = std::move(quantized.quant);
    layer.pattern = pruned.pattern;
    return layer;
}

CompressedLayer compress_none(const Matrix &w) {
    require_finite(w, "compress_none");
    CompressedLayer layer;
    layer.w = w;
    layer.w_hat = w;
    layer.method = CompressionMethod::none;
    return layer;
}

} // namespace eora
