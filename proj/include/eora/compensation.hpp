#pragma once

#include <optional>
#include <vector>

#include "eora/calibration.hpp"
#include "eora/compression.hpp"
#include "eora/matrix.hpp"

namespace eora {

enum class CompensationMethod { none, svd_plain, act_s, eora };

const char *to_string(CompensationMethod m);

/// Quant parameters for a quantized adapter: one grid per factor, both
/// row-channel RTN.
struct AdapterQuant {
    QuantParams b_params;
    QuantParams a_params;
};

/// Residual low-rank pair added to the frozen compressed weight so the
/// forward pass becomes w_hat X + b (a X). For EoRA the eigenspace
/// back-projection is already folded into `a`, so inference costs nothing
/// extra. If quant is present, b and a hold the dequantized values.
struct LowRankAdapter {
    Matrix b;   // d x r
    Matrix a;   // r x k
    int rank = 0;
    CompensationMethod method = CompensationMethod::none;
    std::optional<AdapterQuant> quant;

    std::size_t param_count() const { return b.size() + a.size(); }
};

/// Diagonal activation scaling of the Act-S baseline: s_i is the square
/// root of channel i's mean absolute activation, floored so S stays
/// invertible.
struct DiagonalScaling {
    std::vector<double> s;
};

DiagonalScaling activation_scaling(const Matrix &mean_activation);

// The eigenspace method: project the compression error with the calibration
// projector, SVD-truncate, and fold the inverse projector into the returned
// `a` factor.
LowRankAdapter compensate_eora(const CompressedLayer &layer,
                               const CalibrationStats &stats, int r);

// Plain-SVD baseline: truncated SVD of the raw compression error.
LowRankAdapter compensate_svd(const CompressedLayer &layer, int r);

// Act-S baseline: SVD of the column-scaled error, back-projected by the
// inverse scaling.
LowRankAdapter compensate_act_s(const CompressedLayer &layer,
                                const CalibrationStats &stats, int r);

// Compensated forward pass w_hat X + b (a X), low-rank path first.
Matrix forward(const CompressedLayer &layer, const LowRankAdapter &adapter,
               const Matrix &x);

// Row-channel RTN on both factors; the stored factors become the
// dequantized values and the grids are recorded.
LowRankAdapter quantize_adapter(const LowRankAdapter &adapter, int bits);

} // namespace eora
