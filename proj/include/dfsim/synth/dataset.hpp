#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dfsim/grid/raster.hpp"
#include "dfsim/synth/corrupt.hpp"
#include "dfsim/synth/patch.hpp"

namespace dfsim::synth {

enum class TargetVariable { MaxWaterLevel, Deformation };

std::string to_string(TargetVariable v);
TargetVariable target_variable_from_string(const std::string& text);

struct DatasetOptions {
    TargetVariable variable = TargetVariable::MaxWaterLevel;
    CorruptionParams corruption;
    std::size_t patch = 256;
    std::size_t stride = 256;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

struct SynthCase {
    std::uint64_t case_id = 0;
    std::string name;
    /// Produces the target grid when the case is processed, so only the
    /// cases in flight are held in memory.
    std::function<grid::Raster()> load;
};

/// Seed of one case: dataset seed XOR case id.
inline std::uint64_t case_seed(std::uint64_t seed, std::uint64_t case_id) noexcept { return seed ^ case_id; }

/// Binary change map of one case: threshold, vegetation mask (when enabled and
/// `pre_index` is given), erosion, false positives with the case seed.
grid::BinaryRaster corrupted_change_map(const grid::Raster& target, const grid::Raster* pre_index,
                                        const CorruptionParams& params, std::uint64_t seed);

/// Full pipeline for one case: corrupted_change_map, patchify, then cutout on
/// each patch with seed splitmix64_mix(case seed + patch ordinal + 1).
std::vector<PatchSample> synth_case(std::uint64_t case_id, const grid::Raster& target, const grid::Raster& slope,
                                    const grid::Raster* pre_index, const DatasetOptions& options);

struct CaseCount {
    std::uint64_t case_id = 0;
    std::string name;
    std::size_t patches = 0;
};

struct DatasetSummary {
    std::vector<CaseCount> cases;
    std::size_t total_patches = 0;
};

/// Runs synth_case over `cases` (in parallel over `options.workers`) and writes
/// the patches to `writer` in case order. A failing case aborts with its id.
DatasetSummary synth_dataset(const std::vector<SynthCase>& cases, const grid::Raster& slope,
                             const grid::Raster* pre_index, const DatasetOptions& options, PatchWriter& writer);

}  // namespace dfsim::synth
