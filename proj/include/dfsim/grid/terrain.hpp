#pragma once

#include <cstdint>
#include <vector>

#include "dfsim/grid/raster.hpp"

namespace dfsim::grid {

/// Terrain derivatives on the DEM grid. Nodata propagates: a cell whose
/// 3x3 neighbourhood touches nodata is nodata in every derived grid.
struct TerrainFeatures {
    Raster slope;                 // radians, [0, pi/2)
    Raster flow_accumulation;     // upstream cell count including the cell itself
    Raster plan_curvature;        // 1/m
    Raster tangential_curvature;  // 1/m
};

/// Slope angle atan(|grad z|). Central differences in the interior,
/// one-sided differences on the outer rows/columns. Requires >= 3x3 cells.
Raster slope_grid(const Raster& dem);

/// Receiver of every cell under single-direction routing: the lowest of the
/// 8 neighbours if it is strictly lower than the cell, otherwise the cell
/// itself (a sink). Ties go to the first neighbour in N, NE, E, SE, S, SW,
/// W, NW order. Nodata cells are sinks and receive nothing.
std::vector<std::size_t> d8_receivers(const Raster& dem);

/// Number of cells draining through each cell (counting itself) under d8_receivers.
Raster flow_accumulation(const Raster& dem);

/// Curvatures from the Zevenbergen-Thorne 3x3 quadratic fit
///   z = D x^2 + E y^2 + F xy + G x + H y + I
/// with zx = G, zy = H, zxx = 2D, zyy = 2E, zxy = F (x east, y north):
///   plan       = -(zy^2 zxx - 2 zx zy zxy + zx^2 zyy) / (p^{3/2})
///   tangential = -(zy^2 zxx - 2 zx zy zxy + zx^2 zyy) / (p sqrt(1 + p))
/// where p = zx^2 + zy^2; both are 0 where p == 0. Edge cells use
/// zero-gradient padding for the missing neighbours.
void curvatures(const Raster& dem, Raster& plan, Raster& tangential);

TerrainFeatures terrain_features(const Raster& dem);

}  // namespace dfsim::grid
