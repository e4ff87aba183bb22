#include "dfsim/sim/flow_state.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dfsim/common/error.hpp"

namespace dfsim::sim {

FlowState FlowState::dry(const grid::Raster& bed) {
    const grid::GridHeader& hdr = bed.header();
    return FlowState{grid::Raster(hdr, 0.0), grid::Raster(hdr, 0.0), grid::Raster(hdr, 0.0),
                     grid::Raster(hdr, 0.0), bed};
}

void FlowState::validate(double cstar, double h_min) const {
    const std::array<const grid::Raster*, 5> fields{&h, &u, &v, &c, &zb};
    for (const grid::Raster* f : fields) {
        grid::require_same_geometry(header(), f->header(), "FlowState");
    }
    for (std::size_t i = 0; i < h.size(); ++i) {
        const std::string at = " at cell " + std::to_string(i);
        for (const grid::Raster* f : fields) {
            if (!std::isfinite((*f)[i])) throw SolverError("FlowState: non-finite value" + at);
        }
        if (h[i] < 0.0) throw SolverError("FlowState: negative depth" + at);
        if (c[i] < 0.0 || c[i] > cstar) throw SolverError("FlowState: concentration outside [0, C*]" + at);
        if (h[i] < h_min && (u[i] != 0.0 || v[i] != 0.0)) {
            throw SolverError("FlowState: nonzero velocity on dry cell" + at);
        }
    }
}

void SupplySpec::validate(const grid::GridHeader& header, double cstar) const {
    const std::string who = "supply at (" + std::to_string(cell.row) + ", " + std::to_string(cell.col) + ")";
    if (cell.row >= header.rows || cell.col >= header.cols) {
        throw ConfigError(who + " lies outside the grid");
    }
    if (hydrograph.empty()) {
        throw ConfigError(who + " has an empty hydrograph");
    }
    for (std::size_t k = 0; k < hydrograph.size(); ++k) {
        const HydrographPoint& p = hydrograph[k];
        if (!std::isfinite(p.time) || !std::isfinite(p.discharge) || !std::isfinite(p.concentration)) {
            throw ConfigError(who + ": non-finite hydrograph entry");
        }
        if (k > 0 && !(p.time > hydrograph[k - 1].time)) {
            throw ConfigError(who + ": hydrograph times must be strictly increasing");
        }
        if (p.discharge < 0.0) throw ConfigError(who + ": negative discharge");
        if (p.concentration < 0.0 || p.concentration > cstar) {
            throw ConfigError(who + ": concentration outside [0, C*]");
        }
    }
}

double SupplySpec::discharge_at(double t) const {
    if (hydrograph.empty() || t < hydrograph.front().time || t > hydrograph.back().time) return 0.0;
    if (hydrograph.size() == 1) return hydrograph.front().discharge;
    auto it = std::upper_bound(hydrograph.begin(), hydrograph.end(), t,
                               [](double x, const HydrographPoint& p) { return x < p.time; });
    if (it == hydrograph.end()) return hydrograph.back().discharge;
    const HydrographPoint& b = *it;
    const HydrographPoint& a = *(it - 1);
    const double w = (t - a.time) / (b.time - a.time);
    return a.discharge + w * (b.discharge - a.discharge);
}

std::pair<double, double> SupplySpec::volumes(double t0, double t1) const {
    double water = 0.0, sediment = 0.0;
    if (hydrograph.size() < 2 || t1 <= t0) return {0.0, 0.0};
    for (std::size_t k = 1; k < hydrograph.size(); ++k) {
        const HydrographPoint& a = hydrograph[k - 1];
        const HydrographPoint& b = hydrograph[k];
        const double lo = std::max(t0, a.time);
        const double hi = std::min(t1, b.time);
        if (hi <= lo) continue;
        const double span = b.time - a.time;
        auto q = [&](double t) { return a.discharge + (t - a.time) / span * (b.discharge - a.discharge); };
        auto cc = [&](double t) { return a.concentration + (t - a.time) / span * (b.concentration - a.concentration); };
        const double mid = 0.5 * (lo + hi);
        const double dt = hi - lo;
        water += 0.5 * dt * (q(lo) + q(hi));
        // Q*C is quadratic on the piece; Simpson's rule is exact.
        sediment += dt / 6.0 * (q(lo) * cc(lo) + 4.0 * q(mid) * cc(mid) + q(hi) * cc(hi));
    }
    return {water, sediment};
}

double SupplySpec::total_volume() const {
    double total = 0.0;
    for (std::size_t k = 1; k < hydrograph.size(); ++k) {
        total += 0.5 * (hydrograph[k].time - hydrograph[k - 1].time) *
                 (hydrograph[k].discharge + hydrograph[k - 1].discharge);
    }
    return total;
}

SupplyVolumes apply_supplies(FlowState& state, std::span<const SupplySpec> supplies, double t, double dt) {
    SupplyVolumes added;
    const double area = state.header().cellsize * state.header().cellsize;
    for (const SupplySpec& s : supplies) {
        const auto [water, sediment] = s.volumes(t, t + dt);
        if (water <= 0.0) continue;
        const std::size_t r = s.cell.row, col = s.cell.col;
        const double h_old = state.h(r, col);
        const double h_new = h_old + water / area;
        const double m_new = state.c(r, col) * h_old + sediment / area;
        state.u(r, col) *= h_old / h_new;
        state.v(r, col) *= h_old / h_new;
        state.h(r, col) = h_new;
        state.c(r, col) = m_new / h_new;
        added.mixture += water;
        added.sediment += sediment;
    }
    return added;
}

CellFlux cell_flux(double h, double u, double v, double c, double g) {
    const double p = 0.5 * g * h * h;
    CellFlux out;
    out.e = {u * h, u * u * h + p, u * v * h, c * u * h, 0.0};
    out.f = {v * h, u * v * h, v * v * h + p, c * v * h, 0.0};
    return out;
}

FluxGrids compute_fluxes(const FlowState& s, double g) {
    FluxGrids grids;
    for (std::size_t k = 0; k < 5; ++k) {
        grids.e[k] = grid::Raster(s.header(), 0.0);
        grids.f[k] = grid::Raster(s.header(), 0.0);
    }
    for (std::size_t i = 0; i < s.h.size(); ++i) {
        const CellFlux cf = cell_flux(s.h[i], s.u[i], s.v[i], s.c[i], g);
        for (std::size_t k = 0; k < 5; ++k) {
            grids.e[k][i] = cf.e[k];
            grids.f[k][i] = cf.f[k];
        }
    }
    return grids;
}

double stable_dt(const FlowState& s, const SimParams& p) {
    double max_speed = 0.0;
    for (std::size_t i = 0; i < s.h.size(); ++i) {
        const double h = s.h[i];
        if (h < p.h_min) continue;
        const double wave = std::sqrt(p.g * h);
        max_speed = std::max({max_speed, std::abs(s.u[i]) + wave, std::abs(s.v[i]) + wave});
    }
    const double dx = s.header().cellsize;
    double dt = p.dt_max;
    if (max_speed > 0.0) dt = std::min(dt, p.cfl * dx / max_speed);
    if (p.eps_diff > 0.0) dt = std::min(dt, 0.2 * dx * dx / p.eps_diff);
    return dt;
}

}  // namespace dfsim::sim
