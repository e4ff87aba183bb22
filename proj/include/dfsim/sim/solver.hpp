#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "dfsim/grid/raster.hpp"
#include "dfsim/sim/flow_state.hpp"
#include "dfsim/sim/params.hpp"

namespace dfsim::sim {

/// Volumes (m^3) that left the domain through open boundaries during one step.
struct StepOutflow {
    double mixture = 0.0;
    double sediment = 0.0;
};

/// One explicit step of the debris-flow equations.
///
/// Hydrodynamics use the two-step MacCormack scheme. With D+ / D- the
/// forward / backward one-sided differences and U = (h, uh, vh):
///
///   predictor  U*      = U^n + dt R(U^n; D+)
///   corrector  U^{n+1} = (U^n + U* + dt R(U*; D-)) / 2
///
/// (the roles of D+ and D- swap every other step when alternate_sweeps is
/// set). R holds the flux divergence of E, F and the bed-slope source. The
/// pressure part of the momentum flux and the bed slope are combined into
/// g h_face (eta_b - eta_a) / dx on each face, with h_face the mean depth and
/// eta = z_b + h, so a lake at rest produces no force. A face between a dry
/// cell whose bed lies above the neighbouring water surface and that wet cell
/// carries no pressure force and no viscous mass exchange (wet/dry wall).
/// The eddy-diffusion term eps * Laplacian(uh, vh) is added in both stages.
///
/// Because the combined update equals a divergence of face fluxes
/// (h_face = (q^n_{i+1} + q*_i) / 2 for the forward predictor), mass is
/// handled in flux form:
///  1. Artificial viscosity adds kappa * s_face * (eta_b - eta_a) to every
///     interior face, with s the normalised second difference of the
///     tentative depth |h+ - 2h + h-| / (h+ + 2h + h-), maximised over the
///     two cells; momentum gets the same smoothing of uh and vh.
///  2. Boundary faces pass outflow only (open) or nothing (closed).
///  3. A cell whose outgoing face transfers exceed its depth has all of
///     them scaled down so the depth cannot turn negative.
///  4. Suspended sediment C h moves with each face transfer at the donor
///     cell's concentration, which keeps 0 <= C <= C*.
///
/// Point sources are then applied in split form on wet cells:
///  - friction, point-implicit: uh <- uh / (1 + dt g K) with Sf = K (u, v);
///  - bed exchange i from the equilibrium concentration of the local
///    water-surface slope: h += i dt, C h += C* i dt, z_b -= i dt. Erosion
///    stops at the bedrock floor, deposition at the available sediment.
class MacCormackSolver {
public:
    /// `bedrock` bounds erosion; when absent it is the initial bed minus
    /// params.bedrock_depth, fixed at the first step.
    MacCormackSolver(const grid::GridHeader& header, const SimParams& params,
                     std::optional<grid::Raster> bedrock = std::nullopt);

    /// Advance `state` by dt in place. Throws SolverError naming the cell and
    /// component on a non-finite result.
    StepOutflow step(FlowState& state, double dt, bool forward_predictor);

    const SimParams& params() const noexcept { return params_; }

private:
    // Cells are processed in maximal runs of active cells per row. The active
    // set is every 8x8 tile holding water plus its neighbouring tiles, so it
    // keeps a margin of at least 8 cells around the flow.
    struct Span {
        std::size_t row = 0, c0 = 0, c1 = 0;  // inclusive
    };

    bool update_region(const FlowState& state);
    template <typename F>
    void for_cells(F&& fn) const;
    template <typename F>
    void for_xfaces(F&& fn) const;
    template <typename F>
    void for_yfaces(F&& fn) const;
    void stage(const std::vector<double>& h, const std::vector<double>& q, const std::vector<double>& r,
               const std::vector<double>& eta, bool forward, std::vector<double>& fx, std::vector<double>& fy,
               std::vector<double>& dq, std::vector<double>& dr);
    double wall_delta(std::size_t a, std::size_t b, const std::vector<double>& h,
                      const std::vector<double>& eta, const std::vector<double>& zb) const;

    grid::GridHeader header_;
    SimParams params_;
    Medium medium_;
    std::optional<grid::Raster> bedrock_;

    // scratch, sized once
    std::vector<double> q_, r_, m_, eta_, zb_;
    std::vector<double> hs_, qs_, rs_, etas_;
    std::vector<double> fx0_, fy0_, fx1_, fy1_;
    std::vector<double> dq0_, dr0_, dq1_, dr1_;
    std::vector<double> tx_, ty_, sx_, sy_, vx_, vy_, out_, scale_;
    std::vector<double> axq_, axr_, wx_, ayq_, ayr_, wy_;
    std::vector<std::uint8_t> active_, tiles_;
    std::vector<Span> spans_;
};

/// Single step with a fresh solver (bedrock = current bed - bedrock_depth).
FlowState maccormack_step(const FlowState& state, double dt, const SimParams& params,
                          bool forward_predictor = true);

/// Per-cell target variables of one run.
struct SimOutputs {
    grid::Raster max_water_level;  // depth (or surface elevation, see MaxLevelMode)
    grid::Raster deformation;      // final minus initial bed elevation
};

/// Volume bookkeeping, m^3. "water" is the fluid phase: (1 - C) h in the
/// flow plus (1 - C*) of any bed change; "sediment" is C h plus C* of any
/// bed change.
struct MassLedger {
    double water_injected = 0.0;
    double water_initial = 0.0;
    double water_stored = 0.0;
    double water_outflow = 0.0;
    double sediment_injected = 0.0;
    double sediment_initial = 0.0;
    double sediment_stored = 0.0;
    double sediment_outflow = 0.0;

    /// |injected - (stored - initial) - outflow| / max(injected, initial), 0 if both vanish.
    double water_closure() const;
    double sediment_closure() const;
};

struct SimResult {
    SimOutputs outputs;
    MassLedger ledger;
    FlowState final_state;
    std::size_t steps = 0;
    double time = 0.0;
};

/// Time loop: stable_dt -> apply_supplies -> step, tracking the running
/// maximum depth, the bed change and the mass ledger.
class Simulation {
public:
    /// Dry start on `dem`. Nodata DEM cells become high walls and are nodata
    /// in the outputs. Supplies on nodata cells are rejected.
    Simulation(const grid::Raster& dem, std::vector<SupplySpec> supplies, SimParams params);
    /// Start from an explicit state (lake at rest, dam break, ...).
    Simulation(FlowState initial, std::vector<SupplySpec> supplies, SimParams params);

    /// One time step, capped so time does not pass `t_limit`. Returns dt.
    double step(double t_limit);
    void run_until(double t_end);
    void run_steps(std::size_t count);

    double time() const noexcept { return time_; }
    std::size_t steps() const noexcept { return steps_; }
    const FlowState& state() const noexcept { return state_; }
    const Medium& medium() const noexcept { return medium_; }

    SimOutputs outputs() const;
    MassLedger ledger() const;
    SimResult result() const;

private:
    void init();
    void track_max();

    SimParams params_;
    Medium medium_;
    FlowState state_;
    std::vector<SupplySpec> supplies_;
    grid::Raster initial_bed_;
    std::vector<std::uint8_t> nodata_mask_;
    grid::Raster max_level_;
    std::optional<MacCormackSolver> solver_;
    MassLedger ledger_;
    double time_ = 0.0;
    std::size_t steps_ = 0;
};

SimResult run_simulation(const grid::Raster& dem, std::vector<SupplySpec> supplies, const SimParams& params,
                         double duration);

}  // namespace dfsim::sim
