#include "dfsim/sim/physics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dfsim::sim {

std::string_view to_string(FlowMode mode) {
    switch (mode) {
        case FlowMode::Water: return "water";
        case FlowMode::HyperConcentrated: return "hyper_concentrated";
        case FlowMode::StonyDebris: return "stony_debris";
    }
    return "unknown";
}

Medium effective_medium(const SimParams& p) {
    const double num = p.gamma * p.sigma * p.cstar0 + p.rho0 * (1.0 - p.cstar0);
    const double den = p.gamma * p.cstar0 + (1.0 - p.cstar0);
    return Medium{num / den, p.cstar0 * (1.0 - p.gamma)};
}

FlowMode classify_flow_mode(double c, double cstar, const SimParams& p) {
    if (c >= p.c_stony_frac * cstar) return FlowMode::StonyDebris;
    if (c <= p.c_water) return FlowMode::Water;
    return FlowMode::HyperConcentrated;
}

FlowMode classify_flow_mode(double c, double cstar) {
    return classify_flow_mode(c, cstar, SimParams{});
}

double friction_coefficient(double h, double u, double v, double c, const SimParams& p) {
    const double speed = std::sqrt(u * u + v * v);
    if (speed == 0.0) return 0.0;
    const Medium medium = effective_medium(p);
    switch (classify_flow_mode(c, medium.cstar, p)) {
        case FlowMode::Water:
            return p.manning_n * p.manning_n * speed / std::pow(h, 4.0 / 3.0);
        case FlowMode::HyperConcentrated:
            return speed * p.d_m * p.d_m / (0.49 * p.g * h * h * h);
        case FlowMode::StonyDebris: {
            if (c >= medium.cstar) return std::numeric_limits<double>::infinity();
            const double packing = std::cbrt(medium.cstar / c) - 1.0;
            const double mix = c + (1.0 - c) * medium.rho / p.sigma;
            return speed * p.d_m * p.d_m / (8.0 * p.g * h * h * h * mix * packing * packing);
        }
    }
    return 0.0;
}

std::array<double, 2> friction_gradient(double h, double u, double v, double c, const SimParams& p) {
    if (u == 0.0 && v == 0.0) return {0.0, 0.0};
    const double k = friction_coefficient(h, u, v, c, p);
    return {k * u, k * v};
}

double equilibrium_concentration(double tan_theta_w, const SimParams& p) {
    const Medium medium = effective_medium(p);
    const double cap = 0.9 * medium.cstar;
    if (tan_theta_w >= p.tan_phi) return cap;
    if (tan_theta_w <= 0.0) return 0.0;
    const double c_inf = medium.rho * tan_theta_w / ((p.sigma - medium.rho) * (p.tan_phi - tan_theta_w));
    return std::clamp(c_inf, 0.0, cap);
}

double erosion_deposition_velocity(double c, double speed, double c_inf, const SimParams& p) {
    const double gap = c_inf - c;
    return (gap > 0.0 ? p.delta_e : p.delta_d) * gap * speed;
}

}  // namespace dfsim::sim
