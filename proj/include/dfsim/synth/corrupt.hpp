#pragma once

#include <cstdint>

#include "dfsim/grid/raster.hpp"

namespace dfsim::synth {

/// Corruption applied to a true change map to mimic optical change detection.
struct CorruptionParams {
    double truth_threshold = 0.1;  // m, compared against |value|
    bool mask_vegetation = true;   // needs a pre-event index
    double veg_threshold = 0.7;
    std::size_t erosion_radius = 1;      // cells
    std::size_t erosion_iterations = 1;
    double fp_rate = 0.01;
    std::size_t cutout_count = 2;
    std::size_t cutout_min = 16;  // rectangle side, cells
    std::size_t cutout_max = 64;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
    /// No masking, erosion, noise or cutout.
    static CorruptionParams none(double truth_threshold = 0.1);
};

/// 1 iff |value| >= t; nodata is 0. Requires t > 0.
grid::BinaryRaster threshold_truth(const grid::Raster& target, double t);

/// Zero the map where the pre-event index is below veg_threshold or nodata.
grid::BinaryRaster mask_unvegetated(const grid::BinaryRaster& map, const grid::Raster& pre_index,
                                    double veg_threshold);

/// Binary erosion by a (2 radius + 1)^2 square, repeated `iterations` times.
/// Cells outside the grid count as 0. Evaluated as a separable min.
grid::BinaryRaster erode(const grid::BinaryRaster& map, std::size_t radius, std::size_t iterations);

/// Each 0 cell i becomes 1 iff CounterRng(seed, FalsePositives).uniform(i) < fp_rate.
grid::BinaryRaster add_false_positives(const grid::BinaryRaster& map, double fp_rate, std::uint64_t seed);

}  // namespace dfsim::synth
