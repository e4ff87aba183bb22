#include "dfsim/synth/dataset.hpp"

#include <exception>
#include <thread>

#include "dfsim/common/error.hpp"
#include "dfsim/common/random.hpp"

namespace dfsim::synth {

std::string to_string(TargetVariable v) { return v == TargetVariable::MaxWaterLevel ? "maxwl" : "deform"; }

TargetVariable target_variable_from_string(const std::string& text) {
    if (text == "maxwl") return TargetVariable::MaxWaterLevel;
    if (text == "deform") return TargetVariable::Deformation;
    throw ConfigError("unknown target variable '" + text + "' (expected maxwl or deform)");
}

grid::BinaryRaster corrupted_change_map(const grid::Raster& target, const grid::Raster* pre_index,
                                        const CorruptionParams& params, std::uint64_t seed) {
    params.validate();
    grid::BinaryRaster map = threshold_truth(target, params.truth_threshold);
    if (params.mask_vegetation && pre_index) map = mask_unvegetated(map, *pre_index, params.veg_threshold);
    map = erode(map, params.erosion_radius, params.erosion_iterations);
    return add_false_positives(map, params.fp_rate, seed);
}

std::vector<PatchSample> synth_case(std::uint64_t case_id, const grid::Raster& target, const grid::Raster& slope,
                                    const grid::Raster* pre_index, const DatasetOptions& options) {
    const std::uint64_t seed = case_seed(options.seed, case_id);
    const grid::BinaryRaster change = corrupted_change_map(target, pre_index, options.corruption, seed);
    std::vector<PatchSample> patches = patchify(change, slope, target, options.patch, options.stride, case_id);
    for (std::size_t k = 0; k < patches.size(); ++k) {
        cutout(patches[k], options.corruption, splitmix64_mix(seed + k + 1));
    }
    return patches;
}

DatasetSummary synth_dataset(const std::vector<SynthCase>& cases, const grid::Raster& slope,
                             const grid::Raster* pre_index, const DatasetOptions& options, PatchWriter& writer) {
    options.corruption.validate();
    DatasetSummary summary;
    const std::size_t workers = std::max<std::size_t>(1, options.workers);
    for (std::size_t start = 0; start < cases.size(); start += workers) {
        const std::size_t end = std::min(cases.size(), start + workers);
        std::vector<std::vector<PatchSample>> batch(end - start);
        std::vector<std::exception_ptr> errors(end - start);
        auto work = [&](std::size_t k) {
            try {
                const SynthCase& c = cases[start + k];
                batch[k] = synth_case(c.case_id, c.load(), slope, pre_index, options);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        };
        if (end - start == 1) {
            work(0);
        } else {
            std::vector<std::thread> threads;
            for (std::size_t k = 0; k < end - start; ++k) threads.emplace_back(work, k);
            for (auto& t : threads) t.join();
        }
        for (std::size_t k = 0; k < end - start; ++k) {
            const SynthCase& c = cases[start + k];
            if (errors[k]) {
                try {
                    std::rethrow_exception(errors[k]);
                } catch (const std::exception& e) {
                    throw PipelineError("dataset case " + std::to_string(c.case_id) + " (" + c.name + "): " + e.what());
                }
            }
            for (const auto& p : batch[k]) writer.write(p);
            summary.cases.push_back({c.case_id, c.name, batch[k].size()});
            summary.total_patches += batch[k].size();
        }
    }
    return summary;
}

}  // namespace dfsim::synth
