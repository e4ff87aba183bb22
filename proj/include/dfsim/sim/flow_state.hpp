#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "dfsim/grid/raster.hpp"
#include "dfsim/sim/params.hpp"

namespace dfsim::sim {

/// Primitive flow variables, one grid each, all sharing the DEM header.
/// u is positive toward increasing column (east), v toward increasing row
/// (south). Dry cells (h < h_min) carry u = v = 0.
struct FlowState {
    grid::Raster h;
    grid::Raster u;
    grid::Raster v;
    grid::Raster c;
    grid::Raster zb;

    /// Dry state over a DEM (nodata cells must already be resolved).
    static FlowState dry(const grid::Raster& bed);

    const grid::GridHeader& header() const noexcept { return h.header(); }

    /// Throws SolverError if h < 0, C outside [0, cstar], a non-finite value,
    /// or a wet velocity on a dry cell.
    void validate(double cstar, double h_min) const;
};

struct HydrographPoint {
    double time = 0.0;           // s
    double discharge = 0.0;      // m^3/s
    double concentration = 0.0;  // volumetric sediment fraction
};

/// Point inflow at one cell. Discharge and concentration are linear between
/// hydrograph points and zero outside [first time, last time].
struct SupplySpec {
    grid::CellIndex cell;
    std::vector<HydrographPoint> hydrograph;

    void validate(const grid::GridHeader& header, double cstar) const;

    double discharge_at(double t) const;

    /// Exact integrals over [t0, t1] of Q (water+sediment volume) and of Q*C
    /// (sediment volume), piecewise exact for the linear interpolant.
    std::pair<double, double> volumes(double t0, double t1) const;

    /// Integral of Q over the whole hydrograph (trapezoid rule, exact).
    double total_volume() const;
};

/// Volumes added by one call of apply_supplies, m^3.
struct SupplyVolumes {
    double mixture = 0.0;
    double sediment = 0.0;
};

/// Add each supply's inflow over [t, t + dt] to its cell: depth by V / A,
/// suspended sediment C h by Vs / A. Momentum is kept, so velocities scale
/// down with the added depth.
SupplyVolumes apply_supplies(FlowState& state, std::span<const SupplySpec> supplies, double t, double dt);

/// Conservative flux vectors of the governing equations for one cell:
///   E = (uh, u^2 h + g h^2 / 2, uvh, Cuh, 0)
///   F = (vh, uvh, v^2 h + g h^2 / 2, Cvh, 0)
struct CellFlux {
    std::array<double, 5> e{};
    std::array<double, 5> f{};
};

CellFlux cell_flux(double h, double u, double v, double c, double g);

struct FluxGrids {
    std::array<grid::Raster, 5> e;
    std::array<grid::Raster, 5> f;
};

FluxGrids compute_fluxes(const FlowState& state, double g);

/// CFL time step: cfl * cellsize / max over wet cells of max(|u| + sqrt(gh), |v| + sqrt(gh)),
/// further bounded by dt_max and, when eps_diff > 0, by 0.2 cellsize^2 / eps_diff.
/// An all-dry state returns dt_max.
double stable_dt(const FlowState& state, const SimParams& params);

}  // namespace dfsim::sim
