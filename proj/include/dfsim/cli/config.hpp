#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dfsim/cli/json_io.hpp"
#include "dfsim/metrics/metrics.hpp"
#include "dfsim/scenario/scenario.hpp"
#include "dfsim/sim/params.hpp"
#include "dfsim/synth/corrupt.hpp"
#include "dfsim/synth/dataset.hpp"

namespace dfsim::cli {

namespace fs = std::filesystem;

struct DatasetConfig {
    std::vector<synth::TargetVariable> variables{synth::TargetVariable::MaxWaterLevel,
                                                 synth::TargetVariable::Deformation};
    std::size_t patch = 256;
    std::size_t stride = 256;
    /// Cases in the training split, counted in (seed, gamma) order. Unset
    /// means two thirds of the cases, rounded down.
    std::optional<std::size_t> train_cases;
    bool train_all = false;  // "train_cases": "all"
    std::uint64_t seed = 0;
};

/// Everything the simulate / ensemble / synth-dataset commands need. Paths
/// are stored as written and resolved against `base_dir`.
struct EnsembleConfig {
    fs::path dem;
    std::optional<fs::path> weights;      // logistic model JSON
    std::optional<fs::path> probability;  // precomputed probability grid
    double probability_scale = 1.0;
    std::vector<std::uint64_t> seeds;
    std::vector<double> gammas{0.0};
    double duration = 3600.0;  // s
    sim::SimParams sim;
    scenario::SupplyTemplate supply_template;
    double slope_mask_deg = 15.0;  // <= 0 disables the mask
    synth::CorruptionParams corruption;
    DatasetConfig dataset;
    std::optional<fs::path> pre_index;
    metrics::LshiParams lshi;
    fs::path out = "out";
    std::size_t workers = 1;  // 0: hardware concurrency
    fs::path base_dir;

    fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }
    /// Throws ConfigError on empty seed or gamma lists, a missing input file,
    /// or both/neither of weights and probability.
    void validate() const;
};

EnsembleConfig config_from_json(const io::json& j, const fs::path& base_dir);
io::json to_json(const EnsembleConfig& c);
EnsembleConfig load_config(const fs::path& path);

/// Hash of the effective configuration, as written into every artifact.
inline std::string config_hash(const EnsembleConfig& c) { return io::config_hash(to_json(c)); }

/// Throws ConfigError naming `what` when `path` is not an existing file.
void require_file(const fs::path& path, const std::string& what);

}  // namespace dfsim::cli
