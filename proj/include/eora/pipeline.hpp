#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eora/metrics.hpp"
#include "eora/synthetic.hpp"

namespace eora {

struct LayerSpec {
    std::string name;
    std::size_t d = 0;
    std::size_t k = 0;
};

struct CompressionConfig {
    CompressionMethod method = CompressionMethod::none;
    int n_keep = 2;
    int m_group = 4;
    int bits = 4;
};

enum class ActivationSource { synthetic, path };

struct CalibrationConfig {
    std::size_t samples = 16;
    std::size_t n_tokens = 128;
    ActivationSource source = ActivationSource::synthetic;
    std::string path; // directory holding <layer>.acts.eora when source == path
    CovarianceKind covariance = CovarianceKind::random_spd;
};

struct CompensationConfig {
    std::vector<CompensationMethod> methods = {CompensationMethod::svd_plain,
                                               CompensationMethod::act_s,
                                               CompensationMethod::eora};
    std::vector<int> ranks;
    std::vector<int> adapter_bits;
};

enum class LossActivations { calibration, heldout };

/// Full pipeline description. Parsed from JSON with unknown fields
/// rejected; validated before any compute.
struct PipelineConfig {
    std::uint64_t seed = 0;
    std::vector<LayerSpec> layers;
    CompressionConfig compression;
    CalibrationConfig calibration;
    CompensationConfig compensation;
    double eigen_floor_rel = 1e-10;
    std::string output_path;
    LossActivations loss_activations = LossActivations::calibration;
};

PipelineConfig parse_config(const std::string &json_text);
PipelineConfig load_config(const std::string &path);
void validate(const PipelineConfig &cfg);

// Named configurations mirroring the common desk-scale setups:
// "2to4-r128", "2to4-w4-r128", "rank-grid".
PipelineConfig preset_config(const std::string &name);
std::vector<std::string> preset_names();

// ============================================================================
// Stages. Each stage is a pure function of the config (and prior stage
// outputs); the staged CLI persists results between stages through the
// tensor container + JSON manifests, and because f64 round-trips bit-exact,
// staged runs compose to the byte-identical report of a single-shot run.
// ============================================================================

struct CompressedArtifacts {
    std::vector<CompressedLayer> layers; // aligned with cfg.layers
};

struct CalibrationArtifacts {
    std::vector<Matrix> mean_activations; // aligned with cfg.layers
};

struct AdapterCell {
    std::size_t layer_index = 0;
    CompensationMethod method = CompensationMethod::none;
    int rank = 0;
    std::optional<int> bits;
    LowRankAdapter adapter;
};

struct CompensationArtifacts {
    std::vector<AdapterCell> cells;
};

CompressedArtifacts run_compress(const PipelineConfig &cfg);
CalibrationArtifacts run_calibrate(const PipelineConfig &cfg);
CompensationArtifacts run_compensate(const PipelineConfig &cfg,
                                     const CompressedArtifacts &compressed,
                                     const CalibrationArtifacts &calibration);
std::vector<CompensationReport> run_evaluate(const PipelineConfig &cfg,
                                             const CompressedArtifacts &compressed,
                                             const CalibrationArtifacts &calibration,
                                             const CompensationArtifacts &adapters);

// All four stages in memory; writes the report to cfg.output_path when set.
std::vector<CompensationReport> run_pipeline(const PipelineConfig &cfg);

// Stage persistence for the CLI.
void save_compressed(const PipelineConfig &cfg, const CompressedArtifacts &art,
                     const std::string &dir);
CompressedArtifacts load_compressed(const PipelineConfig &cfg, const std::string &dir);
void save_calibration(const PipelineConfig &cfg, const CalibrationArtifacts &art,
                      const std::string &dir);
CalibrationArtifacts load_calibration(const PipelineConfig &cfg, const std::string &dir);
void save_adapters(const PipelineConfig &cfg, const CompensationArtifacts &art,
                   const std::string &dir);
CompensationArtifacts load_adapters(const PipelineConfig &cfg, const std::string &dir);

// Canonical report serialization: JSON array with stable key order and
// reals at 17 significant digits, suitable for byte-exact golden tests.
std::string serialize_reports(const std::vector<CompensationReport> &reports);
void write_reports(const std::string &path, const std::vector<CompensationReport> &reports);

// Worker pool size: min(njobs, EORA_THREADS or hardware concurrency).
std::size_t worker_count(std::size_t njobs);

} // namespace eora
