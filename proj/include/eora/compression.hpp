#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "eora/matrix.hpp"

namespace eora {

enum class CompressionMethod { none, prune_nm, quant_rtn, prune_then_quant };

const char *to_string(CompressionMethod m);

/// Per-output-channel asymmetric quantization grid: one (scale, zero_point)
/// pair per row of the quantized matrix.
struct QuantParams {
    int bits = 0;
    std::vector<double> scale;        // > 0 per channel
    std::vector<int> zero_point;      // in [0, 2^bits - 1]
};

/// N:M structured sparsity mask: within each group of m_group consecutive
/// entries along a row, exactly min(n_keep, group length) survive.
struct SparsityPattern {
    int n_keep = 0;
    int m_group = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> mask;   // row-major, 1 = kept

    bool kept(std::size_t i, std::size_t j) const { return mask[i * cols + j] != 0; }
};

/// Original weight alongside its compressed counterpart. The compression
/// error delta() = w - w_hat is recomputed on demand so no rounding hides
/// between the fields.
struct CompressedLayer {
    Matrix w;
    Matrix w_hat;
    CompressionMethod method = CompressionMethod::none;
    std::optional<QuantParams> quant;
    std::optional<SparsityPattern> pattern;

    Matrix delta() const { return subtract(w, w_hat); }
    std::size_t d() const { return w.rows(); }
    std::size_t k() const { return w.cols(); }
};

// Magnitude N:M pruning: per group of m_group consecutive entries in each
// row, keep the n_keep largest-magnitude values verbatim and zero the rest.
// Ties break toward the lower column index.
CompressedLayer prune_nm(const Matrix &w, int n_keep, int m_group);

// Per-output-channel (row-wise) asymmetric round-to-nearest quantization.
// The channel range is widened to include zero so the grid always has an
// exact zero code and the elementwise bound |w - w_hat| <= scale/2 holds
// for one-sided channels too.
CompressedLayer quantize_rtn(const Matrix &w, int bits);

// prune_nm followed by quantize_rtn on the pruned matrix; the mask is
// re-applied after dequantization so pruned zeros stay exact.
CompressedLayer prune_then_quantize(const Matrix &w, int n_keep, int m_group, int bits);

// Identity compression (w_hat == w); used by the pipeline to force a zero
// compression error.
CompressedLayer compress_none(const Matrix &w);

} // namespace eora
