#include "dfsim/synth/corrupt.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dfsim/common/error.hpp"
#include "dfsim/common/random.hpp"

namespace dfsim::synth {

void CorruptionParams::validate() const {
    if (!(truth_threshold > 0.0) || !std::isfinite(truth_threshold)) {
        throw ConfigError("corruption: truth_threshold must be > 0");
    }
    if (!(fp_rate >= 0.0 && fp_rate <= 1.0)) throw ConfigError("corruption: fp_rate must lie in [0, 1]");
    if (erosion_iterations > 0 && erosion_radius == 0) {
        throw ConfigError("corruption: erosion_radius must be >= 1 when erosion_iterations > 0");
    }
    if (cutout_count > 0 && (cutout_min == 0 || cutout_max < cutout_min)) {
        throw ConfigError("corruption: need 1 <= cutout_min <= cutout_max");
    }
}

CorruptionParams CorruptionParams::none(double truth_threshold) {
    CorruptionParams p;
    p.truth_threshold = truth_threshold;
    p.mask_vegetation = false;
    p.erosion_radius = 0;
    p.erosion_iterations = 0;
    p.fp_rate = 0.0;
    p.cutout_count = 0;
    return p;
}

grid::BinaryRaster threshold_truth(const grid::Raster& target, double t) {
    if (!(t > 0.0)) throw ConfigError("threshold_truth: threshold must be > 0");
    grid::BinaryRaster out = grid::make_binary_like(target.header());
    for (std::size_t i = 0; i < target.size(); ++i) {
        out[i] = !target.is_nodata(i) && std::abs(target[i]) >= t ? 1 : 0;
    }
    return out;
}

grid::BinaryRaster mask_unvegetated(const grid::BinaryRaster& map, const grid::Raster& pre_index,
                                    double veg_threshold) {
    grid::require_same_geometry(map.header(), pre_index.header(), "pre-event index");
    grid::BinaryRaster out = map;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (pre_index.is_nodata(i) || pre_index[i] < veg_threshold) out[i] = 0;
    }
    return out;
}

namespace {

// Sliding-window minimum along one axis with zero padding.
void min_pass(const std::vector<std::uint8_t>& in, std::vector<std::uint8_t>& out, std::size_t rows,
              std::size_t cols, std::size_t radius, bool along_rows) {
    const std::size_t n = along_rows ? cols : rows;
    const std::size_t lines = along_rows ? rows : cols;
    const std::size_t step = along_rows ? 1 : cols;
    std::vector<std::size_t> zeros;  // prefix count of zero cells
    zeros.resize(n + 1);
    for (std::size_t line = 0; line < lines; ++line) {
        const std::size_t base = along_rows ? line * cols : line;
        zeros[0] = 0;
        for (std::size_t k = 0; k < n; ++k) zeros[k + 1] = zeros[k] + (in[base + k * step] ? 0 : 1);
        for (std::size_t k = 0; k < n; ++k) {
            if (k < radius || k + radius >= n) {
                out[base + k * step] = 0;
                continue;
            }
            out[base + k * step] = zeros[k + radius + 1] == zeros[k - radius] ? 1 : 0;
        }
    }
}

}  // namespace

grid::BinaryRaster erode(const grid::BinaryRaster& map, std::size_t radius, std::size_t iterations) {
    if (iterations > 0 && radius == 0) throw ConfigError("erode: radius must be >= 1");
    grid::BinaryRaster out = map;
    std::vector<std::uint8_t> tmp(map.size());
    for (std::size_t it = 0; it < iterations; ++it) {
        min_pass(out.data(), tmp, map.rows(), map.cols(), radius, true);
        min_pass(tmp, out.data(), map.rows(), map.cols(), radius, false);
    }
    return out;
}

grid::BinaryRaster add_false_positives(const grid::BinaryRaster& map, double fp_rate, std::uint64_t seed) {
    if (!(fp_rate >= 0.0 && fp_rate <= 1.0)) throw ConfigError("add_false_positives: fp_rate must lie in [0, 1]");
    grid::BinaryRaster out = map;
    if (fp_rate == 0.0) return out;
    const CounterRng rng(seed, RandomStream::FalsePositives);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!out[i] && rng.uniform(i) < fp_rate) out[i] = 1;
    }
    return out;
}

}  // namespace dfsim::synth
