#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eora/compensation.hpp"

namespace eora {

/// One evaluation cell: a (layer, method, rank, bits) combination with its
/// losses and size accounting. elapsed_ms is informational and is excluded
/// from the canonical report serialization so reports stay byte-identical
/// across runs.
struct CompensationReport {
    std::string layer_name;
    CompensationMethod method = CompensationMethod::none;
    int rank = 0;
    std::optional<int> bits;
    double layerwise_loss = 0.0; // ||WX - (W_hat + BA)X||_F
    double approx_loss = 0.0;    // ||dW - BA||_F
    double eora_loss = 0.0;      // ||dW P - BA P||_F, P the eigenspace projector
    std::size_t adapter_param_count = 0;
    std::size_t adapter_bytes = 0;
    double elapsed_ms = 0.0;
};

// ||WX - W_hat X||_F without an adapter.
double layerwise_loss(const CompressedLayer &layer, const Matrix &x);

// ||WX - (W_hat + BA)X||_F with the adapter folded into the forward pass.
double layerwise_loss(const CompressedLayer &layer, const LowRankAdapter &adapter,
                      const Matrix &x);

// ||dW - BA||_F.
double approx_loss(const CompressedLayer &layer, const LowRankAdapter &adapter);

// ||dW P - B (A P)||_F: the projected-space objective, evaluated by
// unfolding the adapter's a through the projector.
double eora_loss(const CompressedLayer &layer, const LowRankAdapter &adapter,
                 const CalibrationStats &stats);

// Storage accounting: f64 factors, or packed codes plus per-channel grid
// parameters (8-byte scale + 1-byte zero point) when bits is set.
std::size_t adapter_storage_bytes(std::size_t d, std::size_t k, int rank,
                                  std::optional<int> bits);

// One report per method x rank x bits cell. Methods run in the fixed order
// none, svd_plain, act_s, eora; each adapter method is evaluated
// unquantized first and then once per entry of adapter_bits. The `none`
// rows skip the bits dimension (there is nothing to quantize). Loss
// evaluation uses eval_x as the activation (the calibration mean by
// default).
std::vector<CompensationReport> compare_methods(
    const std::string &layer_name, const CompressedLayer &layer,
    const CalibrationStats &stats, const std::vector<int> &ranks,
    const std::vector<int> &adapter_bits, const Matrix &eval_x);

// Evaluation half of compare_methods, reused by the staged pipeline: build
// the report for one already-computed adapter.
CompensationReport evaluate_adapter(const std::string &layer_name,
                                    const CompressedLayer &layer,
                                    const CalibrationStats &stats,
                                    const LowRankAdapter &adapter,
                                    std::optional<int> bits, const Matrix &eval_x);

// The rank-0 "no compensation" row.
CompensationReport evaluate_uncompensated(const std::string &layer_name,
                                          const CompressedLayer &layer,
                                          const CalibrationStats &stats, int rank,
                                          const Matrix &eval_x);

} // namespace eora
