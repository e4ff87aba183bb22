#include "dfsim/scenario/scenario.hpp"

#include <cmath>
#include <numbers>

#include "dfsim/common/error.hpp"
#include "dfsim/common/random.hpp"

namespace dfsim::scenario {

std::vector<grid::CellIndex> sample_initiation_points(const grid::Raster& probability, std::uint64_t seed,
                                                      const grid::BinaryRaster* eligible) {
    if (eligible) grid::require_same_geometry(probability.header(), eligible->header(), "eligibility mask");
    const CounterRng rng(seed, RandomStream::InitiationPoints);
    std::vector<grid::CellIndex> points;
    const std::size_t cols = probability.cols();
    for (std::size_t i = 0; i < probability.size(); ++i) {
        if (probability.is_nodata(i)) continue;
        if (eligible && !(*eligible)[i]) continue;
        if (rng.uniform(i) < probability[i]) points.push_back({i / cols, i % cols});
    }
    return points;
}

grid::BinaryRaster slope_mask(const grid::Raster& slope, double min_degrees) {
    const double min_rad = min_degrees * std::numbers::pi / 180.0;
    grid::BinaryRaster mask = grid::make_binary_like(slope.header());
    for (std::size_t i = 0; i < slope.size(); ++i) {
        mask[i] = !slope.is_nodata(i) && slope[i] >= min_rad ? 1 : 0;
    }
    return mask;
}

void SupplyTemplate::validate() const {
    if (!(peak_discharge >= 0.0) || !std::isfinite(peak_discharge)) {
        throw ConfigError("supply template: peak_discharge must be >= 0");
    }
    if (!(rise_time > 0.0) || !(duration > rise_time) || !std::isfinite(duration)) {
        throw ConfigError("supply template: need 0 < rise_time < duration");
    }
    if (!(concentration >= 0.0 && concentration < 1.0)) {
        throw ConfigError("supply template: concentration must lie in [0, 1)");
    }
}

std::vector<sim::HydrographPoint> SupplyTemplate::hydrograph() const {
    return {{0.0, 0.0, concentration}, {rise_time, peak_discharge, concentration}, {duration, 0.0, concentration}};
}

Scenario build_scenario(const std::vector<grid::CellIndex>& points, double gamma, const SupplyTemplate& tmpl,
                        std::uint64_t seed) {
    tmpl.validate();
    Scenario s;
    s.seed = seed;
    s.gamma = gamma;
    s.points = points;
    s.supply_template = tmpl;
    s.supplies.reserve(points.size());
    for (const auto& p : points) s.supplies.push_back({p, tmpl.hydrograph()});
    return s;
}

}  // namespace dfsim::scenario
