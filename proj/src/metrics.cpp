#include "eora/metrics.hpp"

#include <chrono>

namespace eora {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

} // namespace

double layerwise_loss(const CompressedLayer &layer, const Matrix &x) {
    if (x.rows() != layer.k()) {
        throw DimensionError("layerwise_loss: activation row count mismatch");
    }
    return frobenius_norm(subtract(matmul(layer.w, x), matmul(layer.w_hat, x)));
}

double layerwise_loss(const CompressedLayer &layer, const LowRankAdapter &adapter,
                      const Matrix &x) {
    return frobenius_norm(subtract(matmul(layer.w, x), forward(layer, adapter, x)));
}

double approx_loss(const CompressedLayer &layer, const LowRankAdapter &adapter) {
    return frobenius_norm(subtract(layer.delta(), matmul(adapter.b, adapter.a)));
}

double eora_loss(const CompressedLayer &layer, const LowRankAdapter &adapter,
                 const CalibrationStats &stats) {
    if (stats.k() != layer.k()) {
        throw DimensionError("eora_loss: calibration width mismatch");
    }
    Matrix delta_proj = matmul(layer.delta(), stats.projector);
    Matrix ba_proj = matmul(adapter.b, matmul(adapter.a, stats.projector));
    return frobenius_norm(subtract(delta_proj, ba_proj));
}

std::size_t adapter_storage_bytes(std::size_t d, std::size_t k, int rank,
                                  std::optional<int> bits) {
    const std::size_t r = static_cast<std::size_t>(rank);
    if (!bits.has_value()) {
        return r * (d + k) * 8;
    }
    const std::size_t bb = static_cast<std::size_t>(*bits);
    // Row-aligned packed codes for both factors plus per-channel grid
    // parameters: b is d x r (d channels), a is r x k (r channels).
    const std::size_t b_codes = d * ((r * bb + 7) / 8);
    const std::size_t a_codes = r * ((k * bb + 7) / 8);
    const std::size_t channel_params = (d + r) * (8 + 1);
    return b_codes + a_codes + channel_params;
}

CompensationReport evaluate_adapter(const std::string &layer_name,
                                    const CompressedLayer &layer,
                                    const CalibrationStats &stats,
                                    const LowRankAdapter &adapter,
                                    std::optional<int> bits, const Matrix &eval_x) {
    auto start = Clock::now();
    CompensationReport rep;
    rep.layer_name = layer_name;
    rep.method = adapter.method;
    rep.rank = adapter.rank;
    rep.bits = bits;
    rep.layerwise_loss = layerwise_loss(layer, adapter, eval_x);
    rep.approx_loss = approx_loss(layer, adapter);
    rep.eora_loss = eora_loss(layer, adapter, stats);
    rep.adapter_param_count = adapter.param_count();
    rep.adapter_bytes = adapter_storage_bytes(layer.d(), layer.k(), adapter.rank, bits);
    rep.elapsed_ms = ms_since(start);
    return rep;
}

CompensationReport evaluate_uncompensated(const std::string &layer_name,
                                          const CompressedLayer &layer,
                                          const CalibrationStats &stats, int rank,
                                          const Matrix &eval_x) {
    auto start = Clock::now();
    CompensationReport rep;
    rep.layer_name = layer_name;
    rep.method = CompensationMethod::none;
    rep.rank = rank;
    rep.layerwise_loss = layerwise_loss(layer, eval_x);
    rep.approx_loss = frobenius_norm(layer.delta());
    rep.eora_loss = frobenius_norm(matmul(layer.delta(), stats.projector));
    rep.adapter_param_count = 0;
    rep.adapter_bytes = 0;
    rep.elapsed_ms = ms_since(start);
    return rep;
}

std::vector<CompensationReport> compare_methods(
    const std::string &layer_name, const CompressedLayer &layer,
    const CalibrationStats &stats, const std::vector<int> &ranks,
    const std::vector<int> &adapter_bits, const Matrix &eval_x) {
    if (ranks.empty()) {
        throw ParameterError("compare_methods: empty rank list");
    }

    std::vector<CompensationReport> reports;
    auto run_method = [&](CompensationMethod method, int rank) {
        auto start = Clock::now();
        LowRankAdapter adapter;
        switch (method) {
            case CompensationMethod::svd_plain:
                adapter = compensate_svd(layer, rank);
                break;
            case CompensationMethod::act_s:
                adapter = compensate_act_s(layer, stats, rank);
                break;
            case CompensationMethod::eora:
                adapter = compensate_eora(layer, stats, rank);
                break;
            case CompensationMethod::none:
                return;
        }
        double build_ms = ms_since(start);

        CompensationReport rep =
            evaluate_adapter(layer_name, layer, stats, adapter, std::nullopt, eval_x);
        rep.elapsed_ms += build_ms;
        reports.push_back(rep);

        for (int bits : adapter_bits) {
            auto qstart = Clock::now();
            LowRankAdapter quantized = quantize_adapter(adapter, bits);
            double quant_ms = ms_since(qstart);
            CompensationReport qrep =
                evaluate_adapter(layer_name, layer, stats, quantized, bits, eval_x);
            qrep.elapsed_ms += build_ms + quant_ms;
            reports.push_back(qrep);
        }
    };

    for (int rank : ranks) {
        reports.push_back(evaluate_uncompensated(layer_name, layer, stats, rank, eval_x));
        run_method(CompensationMethod::svd_plain, rank);
        run_method(CompensationMethod::act_s, rank);
        run_method(CompensationMethod::eora, rank);
    }
    return reports;
}

} // namespace eora
