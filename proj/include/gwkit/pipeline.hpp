#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gwkit/data_model.hpp"
#include "gwkit/error.hpp"
#include "gwkit/spatial_weights.hpp"

namespace gwkit {

enum class WeightsKind { automatic, queen, rook, knn };

struct PipelineConfig {
    std::filesystem::path config_path;   // empty when built in code
    std::string config_sha256;           // of the config file bytes
    std::filesystem::path input;
    TableSchema schema;
    bool standardize = true;
    WeightsKind weights = WeightsKind::automatic;
    std::size_t knn_k = 8;
    KernelFamily family = KernelFamily::bisquare;
    BandwidthMode mode = BandwidthMode::adaptive;
    std::optional<double> bandwidth_lower;
    std::optional<double> bandwidth_upper;
    bool run_mgwr = true;
    double mgwr_tol = 1e-5;
    std::size_t mgwr_max_iter = 200;
    bool mgwr_init_gwr = true;
    bool allow_unstandardized = false;
    std::size_t permutations = 999;
    std::optional<std::uint64_t> seed;
    double moran_gate = 0.05;
    bool gate_on_permutation = true;  // otherwise the normal approximation
    double alpha = 0.05;
    double cn_threshold = 30.0;
    unsigned threads = 0;             // 0: hardware concurrency
    std::filesystem::path output_dir;
};

// Validates and resolves a config. Relative paths are taken against
// base_dir. Throws Error describing the offending key.
PipelineConfig parse_pipeline_config(const nlohmann::json& config, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// A failure inside one pipeline stage.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message)
        : Error("[" + stage + "] " + message), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct RunOptions {
    // Keep existing outputs and only produce the missing ones.
    bool resume = false;
};

struct PipelineResult {
    bool proceeded = false;               // Moran gate passed
    double gate_p = 1.0;
    std::vector<std::string> written;     // files written by this run
    std::vector<std::string> skipped;     // files kept from a previous run
    std::vector<std::string> warnings;
};

// Runs load, trip change, standardization, OLS with VIF, Moran's I on the
// residuals and, when the residuals are autocorrelated, GWR, MGWR and hot
// spots. Every output lands in config.output_dir together with
// manifest.json. On failure a FAILED file names the stage, partial outputs
// stay, and StageError is thrown.
PipelineResult run_pipeline(const PipelineConfig& config, const RunOptions& options = {});

// Weights used for Moran's I (row standardized) following the config rule:
// queen contiguity for polygon input under "auto", otherwise k nearest
// neighbors.
WeightsBuild pipeline_weights(const ObservationTable& table, WeightsKind kind, std::size_t k);

}  // namespace gwkit
