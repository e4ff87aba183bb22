#pragma once

#include <cstdint>

#include "dfsim/grid/raster.hpp"

namespace dfsim::grid {

/// V-shaped valley draining toward the last row:
///   z = long_slope * (rows-1-r) * dx + side_slope * |c - centre| * dx
Raster valley_dem(std::size_t rows, std::size_t cols, double cellsize, double long_slope = 0.1,
                  double side_slope = 0.3);

/// Paraboloid bowl z = depth * ((r - rc)^2 + (c - cc)^2) / R^2 with R the
/// distance from the centre to the nearest edge.
Raster bowl_dem(std::size_t rows, std::size_t cols, double cellsize, double depth);

/// Mountain catchment: a south-facing regional slope cut by parallel
/// north-south valleys, plus seeded low-frequency relief. Deterministic per seed.
Raster synthetic_catchment(std::size_t rows, std::size_t cols, double cellsize, std::uint64_t seed);

}  // namespace dfsim::grid
