#pragma once

#include <array>
#include <string_view>

#include "dfsim/sim/params.hpp"

namespace dfsim::sim {

enum class FlowMode { Water, HyperConcentrated, StonyDebris };

std::string_view to_string(FlowMode mode);

/// Fluidization of fine solids:
///   rho = (gamma sigma C*0 + rho0 (1 - C*0)) / (gamma C*0 + (1 - C*0))
///   C*  = C*0 (1 - gamma)
Medium effective_medium(const SimParams& params);

/// StonyDebris if C >= c_stony_frac * C*, Water if C <= c_water,
/// HyperConcentrated otherwise. The stony test wins when both hold.
FlowMode classify_flow_mode(double c, double cstar, const SimParams& params);
FlowMode classify_flow_mode(double c, double cstar);

/// Friction slope per unit velocity: returns K with (Sfx, Sfy) = (K u, K v).
///   Water:             K = n^2 |V| / h^{4/3}
///   HyperConcentrated: K = |V| d^2 / (0.49 g h^3)
///   StonyDebris:       K = |V| d^2 / (8 g h^3 [C + (1-C) rho/sigma] [(C*/C)^{1/3} - 1]^2)
/// K is +inf for a stony flow with C >= C* (the mixture is locked).
double friction_coefficient(double h, double u, double v, double c, const SimParams& params);

/// (Sfx, Sfy) for a wet cell. Callers must not pass dry cells (h < h_min).
std::array<double, 2> friction_gradient(double h, double u, double v, double c, const SimParams& params);

/// Equilibrium concentration for a water-surface slope tan(theta_w):
///   C_inf = rho tan / ((sigma - rho)(tan_phi - tan))  clamped to [0, 0.9 C*],
/// and 0.9 C* once tan >= tan_phi.
double equilibrium_concentration(double tan_theta_w, const SimParams& params);

/// Exchange velocity with the bed (m/s); > 0 erodes, < 0 deposits.
///   i = delta_e (C_inf - C) |V|   if C_inf > C
///   i = delta_d (C_inf - C) |V|   otherwise
/// The bedrock-floor and available-sediment limits are applied by the solver.
double erosion_deposition_velocity(double c, double speed, double c_inf, const SimParams& params);

}  // namespace dfsim::sim
