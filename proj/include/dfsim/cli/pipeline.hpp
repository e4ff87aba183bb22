#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dfsim/cli/config.hpp"
#include "dfsim/grid/raster.hpp"
#include "dfsim/scenario/scenario.hpp"
#include "dfsim/sim/solver.hpp"

namespace dfsim::cli {

/// Inputs shared by every case of a configuration.
struct PreparedInputs {
    grid::Raster dem;
    grid::Raster slope;        // radians
    grid::Raster probability;  // already scaled and clamped to [0, 1]
    grid::BinaryRaster eligible;
};

PreparedInputs prepare_inputs(const EnsembleConfig& config);

/// "case_<seed>_<gamma>", gamma in shortest round-trip form.
std::string case_dir_name(std::uint64_t seed, double gamma);

scenario::Scenario make_scenario(const EnsembleConfig& config, const PreparedInputs& inputs, std::uint64_t seed,
                                 double gamma);

/// maxwl.asc, deform.asc, ledger.json and scenario.json in `dir`.
void write_case(const fs::path& dir, const sim::SimResult& result, const scenario::Scenario& scenario,
                const std::string& hash);

struct CaseOutcome {
    std::uint64_t seed = 0;
    double gamma = 0.0;
    bool ok = false;
    std::string error;
    std::size_t points = 0;
    std::size_t steps = 0;
    double seconds = 0.0;  // wall clock
    sim::MassLedger ledger;
};

struct EnsembleSummary {
    std::vector<CaseOutcome> cases;  // (seed, gamma) order
    std::size_t failures = 0;
};

/// Runs every (seed, gamma) case on `workers` threads, each case writing its
/// own directory under out/cases. After the join, per-gamma averages of the
/// successful cases go to out/average and the summary to out/summary.json.
/// Case failures are recorded, not thrown.
EnsembleSummary run_ensemble(const EnsembleConfig& config, const fs::path& out, std::size_t workers,
                             std::ostream& log);

struct SplitCounts {
    std::size_t train = 0;
    std::size_t test = 0;
};

/// First k cases in (seed, gamma) order train, the rest test.
SplitCounts split_cases(std::size_t total, const DatasetConfig& dataset);

/// Reads out/cases, writes out/dataset/{train,test}_<variable>.tsp1 and
/// out/dataset/manifest.json. Returns the manifest.
io::json run_synth_dataset(const EnsembleConfig& config, const fs::path& out, std::size_t workers,
                           std::ostream& log);

std::size_t resolve_workers(std::size_t requested);

}  // namespace dfsim::cli
