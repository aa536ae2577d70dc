#include "eora/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <climits>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "eora/tensor_io.hpp"

namespace eora {

namespace fs = std::filesystem;
using nlohmann::json;

// ============================================================================
// Config parsing
// ============================================================================

namespace {

void check_keys(const json &obj, std::initializer_list<const char *> allowed,
                const std::string &ctx) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char *key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError("unknown field \"" + it.key() + "\" in " + ctx);
        }
    }
}

CompressionMethod parse_compression_method(const std::string &s) {
    if (s == "none") return CompressionMethod::none;
    if (s == "prune_nm") return CompressionMethod::prune_nm;
    if (s == "quant_rtn") return CompressionMethod::quant_rtn;
    if (s == "prune_then_quant") return CompressionMethod::prune_then_quant;
    throw ConfigError("unknown compression method \"" + s + "\"");
}

CompensationMethod parse_compensation_method(const std::string &s) {
    if (s == "svd") return CompensationMethod::svd_plain;
    if (s == "act-s") return CompensationMethod::act_s;
    if (s == "eora") return CompensationMethod::eora;
    throw ConfigError("unknown compensation method \"" + s + "\" (want eora, svd, act-s or all)");
}

const char *method_flag(CompensationMethod m) {
    switch (m) {
        case CompensationMethod::none: return "none";
        case CompensationMethod::svd_plain: return "svd";
        case CompensationMethod::act_s: return "act-s";
        case CompensationMethod::eora: return "eora";
    }
    return "?";
}

template <typename T>
T get_number(const json &obj, const char *key, T fallback, const std::string &ctx) {
    if (!obj.contains(key)) return fallback;
    const json &v = obj.at(key);
    if (!v.is_number()) throw ConfigError(std::string(key) + " must be a number in " + ctx);
    return v.get<T>();
}

} // namespace

PipelineConfig parse_config(const std::string &json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception &e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be an object");
    check_keys(root,
               {"seed", "layers", "compression", "calibration", "compensation",
                "eigen_floor_rel", "output_path", "loss_activations"},
               "config");

    PipelineConfig cfg;
    cfg.seed = get_number<std::uint64_t>(root, "seed", 0, "config");

    if (!root.contains("layers") || !root.at("layers").is_array()) {
        throw ConfigError("config needs a \"layers\" array");
    }
    for (const json &jl : root.at("layers")) {
        check_keys(jl, {"name", "d", "k"}, "layer");
        LayerSpec spec;
        if (!jl.contains("name") || !jl.at("name").is_string()) {
            throw ConfigError("layer needs a string \"name\"");
        }
        spec.name = jl.at("name").get<std::string>();
        spec.d = get_number<std::size_t>(jl, "d", 0, "layer");
        spec.k = get_number<std::size_t>(jl, "k", 0, "layer");
        cfg.layers.push_back(std::move(spec));
    }

    if (root.contains("compression")) {
        const json &jc = root.at("compression");
        check_keys(jc, {"method", "n_keep", "m_group", "bits"}, "compression");
        if (jc.contains("method")) {
            cfg.compression.method =
                parse_compression_method(jc.at("method").get<std::string>());
        }
        cfg.compression.n_keep = get_number<int>(jc, "n_keep", 2, "compression");
        cfg.compression.m_group = get_number<int>(jc, "m_group", 4, "compression");
        cfg.compression.bits = get_number<int>(jc, "bits", 4, "compression");
    }

    if (root.contains("calibration")) {
        const json &jc = root.at("calibration");
        check_keys(jc, {"samples", "n_tokens", "source", "path", "covariance"},
                   "calibration");
        cfg.calibration.samples = get_number<std::size_t>(jc, "samples", 16, "calibration");
        cfg.calibration.n_tokens = get_number<std::size_t>(jc, "n_tokens", 128, "calibration");
        if (jc.contains("source")) {
            std::string s = jc.at("source").get<std::string>();
            if (s == "synthetic") cfg.calibration.source = ActivationSource::synthetic;
            else if (s == "path") cfg.calibration.source = ActivationSource::path;
            else throw ConfigError("calibration source must be synthetic or path");
        }
        if (jc.contains("path")) cfg.calibration.path = jc.at("path").get<std::string>();
        if (jc.contains("covariance")) {
            std::string s = jc.at("covariance").get<std::string>();
            if (s == "identity") cfg.calibration.covariance = CovarianceKind::identity;
            else if (s == "random_spd") cfg.calibration.covariance = CovarianceKind::random_spd;
            else throw ConfigError("covariance must be identity or random_spd");
        }
    }

    if (root.contains("compensation")) {
        const json &jc = root.at("compensation");
        check_keys(jc, {"methods", "ranks", "adapter_bits"}, "compensation");
        if (jc.contains("methods")) {
            cfg.compensation.methods.clear();
            for (const json &jm : jc.at("methods")) {
                std::string s = jm.get<std::string>();
                if (s == "all") {
                    cfg.compensation.methods = {CompensationMethod::svd_plain,
                                                CompensationMethod::act_s,
                                                CompensationMethod::eora};
                    break;
                }
                cfg.compensation.methods.push_back(parse_compensation_method(s));
            }
        }
        if (jc.contains("ranks")) {
            for (const json &jr : jc.at("ranks")) {
                cfg.compensation.ranks.push_back(jr.get<int>());
            }
        }
        if (jc.contains("adapter_bits")) {
            for (const json &jb : jc.at("adapter_bits")) {
                cfg.compensation.adapter_bits.push_back(jb.get<int>());
            }
        }
    }

    if (root.contains("eigen_floor_rel")) {
        cfg.eigen_floor_rel = root.at("eigen_floor_rel").get<double>();
    }
    if (root.contains("output_path")) {
        cfg.output_path = root.at("output_path").get<std::string>();
    }
    if (root.contains("loss_activations")) {
        std::string s = root.at("loss_activations").get<std::string>();
        if (s == "calibration") cfg.loss_activations = LossActivations::calibration;
        else if (s == "heldout") cfg.loss_activations = LossActivations::heldout;
        else throw ConfigError("loss_activations must be calibration or heldout");
    }

    validate(cfg);
    return cfg;
}

PipelineConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

namespace {

bool valid_name(const std::string &name) {
    if (name.empty() || name.size() > 64) return false;
    for (char c : name) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) {
            return false;
        }
    }
    return true;
}

} // namespace

void validate(const PipelineConfig &cfg) {
    if (cfg.layers.empty()) throw ConfigError("config has no layers");
    std::size_t min_dim = SIZE_MAX;
    for (const LayerSpec &l : cfg.layers) {
        if (!valid_name(l.name)) {
            throw ConfigError("layer name \"" + l.name +
                              "\" must match [A-Za-z0-9._-]{1,64}");
        }
        if (l.d == 0 || l.k == 0) {
            throw ConfigError("layer " + l.name + " has zero dimension");
        }
        min_dim = std::min(min_dim, std::min(l.d, l.k));
        for (const LayerSpec &other : cfg.layers) {
            if (&other != &l && other.name == l.name) {
                throw ConfigError("duplicate layer name " + l.name);
            }
        }
    }

    const CompressionConfig &comp = cfg.compression;
    if (comp.method == CompressionMethod::prune_nm ||
        comp.method == CompressionMethod::prune_then_quant) {
        if (comp.m_group < 2 || comp.n_keep < 1 || comp.n_keep > comp.m_group) {
            throw ConfigError("invalid N:M setting " + std::to_string(comp.n_keep) + ":" +
                              std::to_string(comp.m_group));
        }
    }
    if (comp.method == CompressionMethod::quant_rtn ||
        comp.method == CompressionMethod::prune_then_quant) {
        if (comp.bits < 2 || comp.bits > 8) {
            throw ConfigError("compression bits must be in [2, 8]");
        }
    }

    if (cfg.calibration.samples == 0) throw ConfigError("calibration.samples must be >= 1");
    if (cfg.calibration.n_tokens == 0) throw ConfigError("calibration.n_tokens must be >= 1");
    if (cfg.calibration.source == ActivationSource::path && cfg.calibration.path.empty()) {
        throw ConfigError("calibration.source is path but calibration.path is empty");
    }

    if (cfg.compensation.ranks.empty()) {
        throw ConfigError("compensation.ranks must not be empty");
    }
    for (int r : cfg.compensation.ranks) {
        if (r < 1 || static_cast<std::size_t>(r) > min_dim) {
            throw ConfigError("rank " + std::to_string(r) +
                              " exceeds the smallest layer dimension " +
                              std::to_string(min_dim));
        }
    }
    if (cfg.compensation.methods.empty()) {
        throw ConfigError("compensation.methods must not be empty");
    }
    for (int b : cfg.compensation.adapter_bits) {
        if (b < 2 || b > 8) throw ConfigError("adapter_bits entries must be in [2, 8]");
    }
    if (!(cfg.eigen_floor_rel > 0.0) || cfg.eigen_floor_rel > 1e-2) {
        throw ConfigError("eigen_floor_rel must be in (0, 1e-2]");
    }
}

PipelineConfig preset_config(const std::string &name) {
    PipelineConfig cfg;
    cfg.seed = 42;
    cfg.calibration.samples = 64;
    cfg.calibration.n_tokens = 2048;
    cfg.calibration.covariance = CovarianceKind::random_spd;
    cfg.layers = {{"layer0", 512, 512}};
    if (name == "2to4-r128") {
        cfg.compression = {CompressionMethod::prune_nm, 2, 4, 4};
        cfg.compensation.ranks = {128};
    } else if (name == "2to4-w4-r128") {
        cfg.compression = {CompressionMethod::prune_then_quant, 2, 4, 4};
        cfg.compensation.ranks = {128};
    } else if (name == "rank-grid") {
        cfg.compression = {CompressionMethod::prune_nm, 2, 4, 4};
        cfg.compensation.ranks = {64, 128, 256, 512};
    } else {
        throw ConfigError("unknown preset \"" + name + "\"");
    }
    validate(cfg);
    return cfg;
}

std::vector<std::string> preset_names() {
    return {"2to4-r128", "2to4-w4-r128", "rank-grid"};
}

// ============================================================================
// Stage execution
// ============================================================================

std::size_t worker_count(std::size_t njobs) {
    std::size_t cap = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char *env = std::getenv("EORA_THREADS")) {
        char *end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) {
            throw ConfigError("EORA_THREADS must be a positive integer");
        }
        cap = static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::min(cap, njobs));
}

namespace {

// Run fn(i) for i in [0, njobs) across the worker pool. Each job owns its
// output slot, so scheduling cannot change results.
template <typename Fn>
void parallel_for(std::size_t njobs, Fn &&fn) {
    const std::size_t workers = worker_count(njobs);
    if (workers <= 1) {
        for (std::size_t i = 0; i < njobs; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mu;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < njobs; i += workers) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (std::thread &t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

CompressedLayer compress_one(const PipelineConfig &cfg, const LayerSpec &spec) {
    Rng rng(Rng::derive(cfg.seed, "weights/" + spec.name));
    Matrix w = random_matrix(rng, spec.d, spec.k);
    switch (cfg.compression.method) {
        case CompressionMethod::none:
            return compress_none(w);
        case CompressionMethod::prune_nm:
            return prune_nm(w, cfg.compression.n_keep, cfg.compression.m_group);
        case CompressionMethod::quant_rtn:
            return quantize_rtn(w, cfg.compression.bits);
        case CompressionMethod::prune_then_quant:
            return prune_then_quantize(w, cfg.compression.n_keep, cfg.compression.m_group,
                                       cfg.compression.bits);
    }
    throw ConfigError("unhandled compression method");
}

Matrix mean_activation_for(const PipelineConfig &cfg, const LayerSpec &spec,
                           const char *stream) {
    if (cfg.calibration.source == ActivationSource::path) {
        fs::path p = fs::path(cfg.calibration.path) / (spec.name + ".acts.eora");
        ActivationBatch batch = load_activations(p.string());
        if (batch.k() != spec.k) {
            throw FormatError(p.string() + ": activation width " +
                              std::to_string(batch.k()) + " does not match layer k " +
                              std::to_string(spec.k));
        }
        return average_activations(batch);
    }
    Rng rng(Rng::derive(cfg.seed, std::string(stream) + "/" + spec.name));
    ActivationBatch batch =
        synthetic_activations(rng, spec.k, cfg.calibration.n_tokens,
                              cfg.calibration.samples, cfg.calibration.covariance);
    return average_activations(batch);
}

// Cell enumeration shared by the single-shot and staged paths; order is
// part of the report contract.
struct CellKey {
    CompensationMethod method;
    int rank;
    std::optional<int> bits;
};

std::vector<CellKey> enumerate_cells(const CompensationConfig &cc) {
    std::vector<CellKey> cells;
    for (int rank : cc.ranks) {
        for (CompensationMethod m :
             {CompensationMethod::svd_plain, CompensationMethod::act_s,
              CompensationMethod::eora}) {
            if (std::find(cc.methods.begin(), cc.methods.end(), m) == cc.methods.end()) {
                continue;
            }
            cells.push_back({m, rank, std::nullopt});
            for (int bits : cc.adapter_bits) {
                cells.push_back({m, rank, bits});
            }
        }
    }
    return cells;
}

std::string cell_id(const std::string &layer, CompensationMethod method, int rank,
                    std::optional<int> bits) {
    std::string id = layer + "|" + method_flag(method) + "|" + std::to_string(rank);
    if (bits) id += "|q" + std::to_string(*bits);
    return id;
}

Matrix eval_activation_for(const PipelineConfig &cfg, const LayerSpec &spec,
                           const Matrix &mean_activation) {
    if (cfg.loss_activations == LossActivations::heldout) {
        return mean_activation_for(cfg, spec, "heldout");
    }
    return mean_activation;
}

} // namespace

CompressedArtifacts run_compress(const PipelineConfig &cfg) {
    CompressedArtifacts art;
    art.layers.resize(cfg.layers.size());
    parallel_for(cfg.layers.size(),
                 [&](std::size_t i) { art.layers[i] = compress_one(cfg, cfg.layers[i]); });
    return art;
}

CalibrationArtifacts run_calibrate(const PipelineConfig &cfg) {
    CalibrationArtifacts art;
    art.mean_activations.resize(cfg.layers.size());
    parallel_for(cfg.layers.size(), [&](std::size_t i) {
        art.mean_activations[i] = mean_activation_for(cfg, cfg.layers[i], "calib");
    });
    return art;
}

CompensationArtifacts run_compensate(const PipelineConfig &cfg,
                                     const CompressedArtifacts &compressed,
                                     const CalibrationArtifacts &calibration) {
    if (compressed.layers.size() != cfg.layers.size() ||
        calibration.mean_activations.size() != cfg.layers.size()) {
        throw DimensionError("run_compensate: artifact count mismatch");
    }
    const std::vector<CellKey> cells = enumerate_cells(cfg.compensation);

    std::vector<std::vector<AdapterCell>> per_layer(cfg.layers.size());
    parallel_for(cfg.layers.size(), [&](std::size_t i) {
        const CompressedLayer &layer = compressed.layers[i];
        CalibrationStats stats =
            build_stats(calibration.mean_activations[i], cfg.eigen_floor_rel);

        // Unquantized adapters are shared across the bit grid of a cell.
        std::unordered_map<std::string, LowRankAdapter> base;
        for (const CellKey &cell : cells) {
            std::string base_id = cell_id(cfg.layers[i].name, cell.method, cell.rank, {});
            auto it = base.find(base_id);
            if (it == base.end()) {
                LowRankAdapter adapter;
                switch (cell.method) {
                    case CompensationMethod::svd_plain:
                        adapter = compensate_svd(layer, cell.rank);
                        break;
                    case CompensationMethod::act_s:
                        adapter = compensate_act_s(layer, stats, cell.rank);
                        break;
                    case CompensationMethod::eora:
                        adapter = compensate_eora(layer, stats, cell.rank);
                        break;
                    case CompensationMethod::none:
                        continue;
                }
                it = base.emplace(base_id, std::move(adapter)).first;
            }
            AdapterCell out;
            out.layer_index = i;
            out.method = cell.method;
            out.rank = cell.rank;
            out.bits = cell.bits;
            out.adapter = cell.bits ? quantize_adapter(it->second, *cell.bits) : it->second;
            per_layer[i].push_back(std::move(out));
        }
    });

    CompensationArtifacts art;
    for (std::vector<AdapterCell> &cells_i : per_layer) {
        for (AdapterCell &c : cells_i) art.cells.push_back(std::move(c));
    }
    return art;
}

std::vector<CompensationReport> run_evaluate(const PipelineConfig &cfg,
                                             const CompressedArtifacts &compressed,
                                             const CalibrationArtifacts &calibration,
                                             const CompensationArtifacts &adapters) {
    if (compressed.layers.size() != cfg.layers.size() ||
        calibration.mean_activations.size() != cfg.layers.size()) {
        throw DimensionError("run_evaluate: artifact count mismatch");
    }
    std::unordered_map<std::string, const LowRankAdapter *> lookup;
    for (const AdapterCell &cell : adapters.cells) {
        lookup[cell_id(cfg.layers[cell.layer_index].name, cell.method, cell.rank,
                       cell.bits)] = &cell.adapter;
    }

    const std::vector<CellKey> cells = enumerate_cells(cfg.compensation);
    std::vector<std::vector<CompensationReport>> per_layer(cfg.layers.size());
    parallel_for(cfg.layers.size(), [&](std::size_t i) {
        const LayerSpec &spec = cfg.layers[i];
        const CompressedLayer &layer = compressed.layers[i];
        CalibrationStats stats =
            build_stats(calibration.mean_activations[i], cfg.eigen_floor_rel);
        Matrix eval_x = eval_activation_for(cfg, spec, calibration.mean_activations[i]);

        std::vector<CompensationReport> reports;
        int last_rank = INT_MIN;
        for (const CellKey &cell : cells) {
            if (cell.rank != last_rank) {
                reports.push_back(
                    evaluate_uncompensated(spec.name, layer, stats, cell.rank, eval_x));
                last_rank = cell.rank;
            }
            auto it = lookup.find(cell_id(spec.name, cell.method, cell.rank, cell.bits));
            if (it == lookup.end()) {
                throw FormatError("missing adapter for " +
                                  cell_id(spec.name, cell.method, cell.rank, cell.bits));
            }
            reports.push_back(
                evaluate_adapter(spec.name, layer, stats, *it->second, cell.bits, eval_x));
        }
        per_layer[i] = std::move(reports);
    });

    std::vector<CompensationReport> all;
    for (std::vector<CompensationReport> &reports : per_layer) {
        for (CompensationReport &r : reports) all.push_back(std::move(r));
    }
    return all;
}

std::vector<CompensationReport> run_pipeline(const PipelineConfig &cfg) {
    validate(cfg);
    CompressedArtifacts compressed = run_compress(cfg);
    CalibrationArtifacts calibration = run_calibrate(cfg);
    CompensationArtifacts adapters = run_compensate(cfg, compressed, calibration);
    std::vector<CompensationReport> reports =
        run_evaluate(cfg, compressed, calibration, adapters);
    if (!cfg.output_path.empty()) {
        write_reports(cfg.output_path, reports);
    }
    return reports;
}

// ============================================================================
// Stage persistence
// ============================================================================

namespace {

void write_json_file(const fs::path &path, const json &j) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

json read_json_file(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception &e) {
        throw FormatError(path.string() + ": invalid JSON: " + e.what());
    }
}

void ensure_dir(const std::string &dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

} // namespace

void save_compressed(const PipelineConfig &cfg, const CompressedArtifacts &art,
                     const std::string &dir) {
    ensure_dir(dir);
    json manifest;
    manifest["version"] = 1;
    manifest["stage"] = "compress";
    manifest["layers"] = json::array();
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        const LayerSpec &spec = cfg.layers[i];
        const CompressedLayer &layer = art.layers[i];
        std::string w_file = spec.name + ".w.eora";
        std::string what_file = spec.name + ".what.eora";
        save_matrix((fs::path(dir) / w_file).string(), layer.w);
        save_matrix((fs::path(dir) / what_file).string(), layer.w_hat);
        manifest["layers"].push_back({{"name", spec.name},
                                      {"d", spec.d},
                                      {"k", spec.k},
                                      {"method", to_string(layer.method)},
                                      {"w", w_file},
                                      {"w_hat", what_file}});
    }
    write_json_file(fs::path(dir) / "compress.json", manifest);
}

CompressedArtifacts load_compressed(const PipelineConfig &cfg, const std::string &dir) {
    json manifest = read_json_file(fs::path(dir) / "compress.json");
    CompressedArtifacts art;
    art.layers.resize(cfg.layers.size());
    if (!manifest.contains("layers") || manifest["layers"].size() != cfg.layers.size()) {
        throw FormatError("compress.json does not match the config layer list");
    }
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        const json &jl = manifest["layers"][i];
        if (jl.at("name").get<std::string>() != cfg.layers[i].name) {
            throw FormatError("compress.json layer order does not match the config");
        }
        CompressedLayer layer;
        layer.w = load_matrix((fs::path(dir) / jl.at("w").get<std::string>()).string());
        layer.w_hat =
            load_matrix((fs::path(dir) / jl.at("w_hat").get<std::string>()).string());
        layer.method = parse_compression_method(jl.at("method").get<std::string>());
        if (!same_shape(layer.w, layer.w_hat) || layer.w.rows() != cfg.layers[i].d ||
            layer.w.cols() != cfg.layers[i].k) {
            throw FormatError("compressed tensors for " + cfg.layers[i].name +
                              " have unexpected shapes");
        }
        art.layers[i] = std::move(layer);
    }
    return art;
}

void save_calibration(const PipelineConfig &cfg, const CalibrationArtifacts &art,
                      const std::string &dir) {
    ensure_dir(dir);
    json manifest;
    manifest["version"] = 1;
    manifest["stage"] = "calibrate";
    manifest["layers"] = json::array();
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        std::string file = cfg.layers[i].name + ".xtilde.eora";
        save_matrix((fs::path(dir) / file).string(), art.mean_activations[i]);
        manifest["layers"].push_back(
            {{"name", cfg.layers[i].name}, {"mean_activation", file}});
    }
    write_json_file(fs::path(dir) / "calibrate.json", manifest);
}

CalibrationArtifacts load_calibration(const PipelineConfig &cfg, const std::string &dir) {
    json manifest = read_json_file(fs::path(dir) / "calibrate.json");
    if (!manifest.contains("layers") || manifest["layers"].size() != cfg.layers.size()) {
        throw FormatError("calibrate.json does not match the config layer list");
    }
    CalibrationArtifacts art;
    art.mean_activations.resize(cfg.layers.size());
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        const json &jl = manifest["layers"][i];
        if (jl.at("name").get<std::string>() != cfg.layers[i].name) {
            throw FormatError("calibrate.json layer order does not match the config");
        }
        art.mean_activations[i] = load_matrix(
            (fs::path(dir) / jl.at("mean_activation").get<std::string>()).string());
        if (art.mean_activations[i].rows() != cfg.layers[i].k) {
            throw FormatError("mean activation width mismatch for " + cfg.layers[i].name);
        }
    }
    return art;
}

void save_adapters(const PipelineConfig &cfg, const CompensationArtifacts &art,
                   const std::string &dir) {
    ensure_dir(dir);
    json manifest;
    manifest["version"] = 1;
    manifest["stage"] = "compensate";
    manifest["cells"] = json::array();
    for (const AdapterCell &cell : art.cells) {
        const std::string &name = cfg.layers[cell.layer_index].name;
        std::string stem = name + "." + method_flag(cell.method) + ".r" +
                           std::to_string(cell.rank);
        if (cell.bits) stem += ".q" + std::to_string(*cell.bits);
        std::string b_file = stem + ".b.eora";
        std::string a_file = stem + ".a.eora";
        save_matrix((fs::path(dir) / b_file).string(), cell.adapter.b);
        save_matrix((fs::path(dir) / a_file).string(), cell.adapter.a);
        json jc = {{"layer", name},
                   {"method", method_flag(cell.method)},
                   {"rank", cell.rank},
                   {"b", b_file},
                   {"a", a_file}};
        jc["bits"] = cell.bits ? json(*cell.bits) : json(nullptr);
        manifest["cells"].push_back(std::move(jc));
    }
    write_json_file(fs::path(dir) / "compensate.json", manifest);
}

CompensationArtifacts load_adapters(const PipelineConfig &cfg, const std::string &dir) {
    json manifest = read_json_file(fs::path(dir) / "compensate.json");
    if (!manifest.contains("cells")) {
        throw FormatError("compensate.json has no cells");
    }
    std::unordered_map<std::string, std::size_t> layer_index;
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        layer_index[cfg.layers[i].name] = i;
    }

    CompensationArtifacts art;
    for (const json &jc : manifest["cells"]) {
        AdapterCell cell;
        auto it = layer_index.find(jc.at("layer").get<std::string>());
        if (it == layer_index.end()) {
            throw FormatError("compensate.json references unknown layer " +
                              jc.at("layer").get<std::string>());
        }
        cell.layer_index = it->second;
        cell.method = parse_compensation_method(jc.at("method").get<std::string>());
        cell.rank = jc.at("rank").get<int>();
        if (jc.contains("bits") && !jc.at("bits").is_null()) {
            cell.bits = jc.at("bits").get<int>();
        }
        cell.adapter.b = load_matrix((fs::path(dir) / jc.at("b").get<std::string>()).string());
        cell.adapter.a = load_matrix((fs::path(dir) / jc.at("a").get<std::string>()).string());
        cell.adapter.rank = cell.rank;
        cell.adapter.method = cell.method;
        art.cells.push_back(std::move(cell));
    }
    return art;
}

// ============================================================================
// Report serialization
// ============================================================================

namespace {

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string serialize_reports(const std::vector<CompensationReport> &reports) {
    std::string out = "[\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const CompensationReport &r = reports[i];
        out += "{\"layer\":\"" + r.layer_name + "\"";
        out += ",\"method\":\"";
        out += to_string(r.method);
        out += "\",\"rank\":" + std::to_string(r.rank);
        out += ",\"bits\":" + (r.bits ? std::to_string(*r.bits) : std::string("null"));
        out += ",\"layerwise_loss\":" + format_real(r.layerwise_loss);
        out += ",\"approx_loss\":" + format_real(r.approx_loss);
        out += ",\"eora_loss\":" + format_real(r.eora_loss);
        out += ",\"adapter_param_count\":" + std::to_string(r.adapter_param_count);
        out += ",\"adapter_bytes\":" + std::to_string(r.adapter_bytes);
        out += "}";
        if (i + 1 < reports.size()) out += ",";
        out += "\n";
    }
    out += "]\n";
    return out;
}

void write_reports(const std::string &path, const std::vector<CompensationReport> &reports) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << serialize_reports(reports);
    if (!out) throw IoError("write failed: " + path);
}

} // namespace eora
