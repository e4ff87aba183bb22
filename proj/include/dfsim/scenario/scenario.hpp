#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dfsim/grid/raster.hpp"
#include "dfsim/sim/flow_state.hpp"

namespace dfsim::scenario {

/// Bernoulli draw per valid cell, visited row-major: cell i is selected iff
/// u_i < p_i, with u_i = CounterRng(seed, InitiationPoints).uniform(i) and i
/// the flat cell index. Nodata probabilities and cells outside `eligible`
/// are never selected. Because u does not depend on p, raising p never drops
/// a point.
std::vector<grid::CellIndex> sample_initiation_points(const grid::Raster& probability, std::uint64_t seed,
                                                      const grid::BinaryRaster* eligible = nullptr);

/// Cells whose slope is at least min_degrees (nodata slope is ineligible).
grid::BinaryRaster slope_mask(const grid::Raster& slope, double min_degrees);

/// Triangular inflow attached to each initiation point: zero at t = 0, peak
/// at rise_time, back to zero at duration, constant concentration.
struct SupplyTemplate {
    double peak_discharge = 5.0;  // m^3/s
    double rise_time = 120.0;     // s
    double duration = 600.0;      // s
    double concentration = 0.2;

    void validate() const;
    std::vector<sim::HydrographPoint> hydrograph() const;
};

struct Scenario {
    std::uint64_t seed = 0;
    double gamma = 0.0;
    std::vector<grid::CellIndex> points;
    std::vector<sim::SupplySpec> supplies;
    SupplyTemplate supply_template;
};

Scenario build_scenario(const std::vector<grid::CellIndex>& points, double gamma, const SupplyTemplate& tmpl,
                        std::uint64_t seed = 0);

}  // namespace dfsim::scenario
