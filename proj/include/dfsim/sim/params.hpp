#pragma once

#include <string>

namespace dfsim::sim {

enum class BoundaryMode { Open, Closed };

/// What the "maximum water level" output records per cell.
enum class MaxLevelMode {
    Depth,             // running max of flow depth h
    SurfaceElevation,  // running max of z_b + h over wet times; never-wet cells are nodata
};

/// Physical and numerical constants of the debris-flow solver.
///
/// sigma and rho0 are specific weights relative to water (sediment grain
/// density ratio and water, i.e. 2.65 and 1.0 by default). The friction and
/// erosion closures use the fluidization-adjusted rho and C* from
/// effective_medium(), never rho0 / cstar0 directly.
struct SimParams {
    double g = 9.81;
    double eps_diff = 0.01;      // eddy momentum diffusivity, m^2/s
    double sigma = 2.65;
    double rho0 = 1.0;
    double cstar0 = 0.6;         // bed concentration before fluidization
    double gamma = 0.0;          // fluidization rate, [0, 1)
    double d_m = 0.1;            // representative grain diameter, m
    double manning_n = 0.03;
    double tan_phi = 0.7;        // internal friction
    double delta_e = 0.0007;     // erosion rate coefficient
    double delta_d = 0.05;       // deposition rate coefficient
    double h_min = 1e-4;         // dry threshold, m
    double cfl = 0.2;
    double visc_kappa = 0.1;     // artificial viscosity coefficient
    double c_water = 0.02;       // C at or below: water flow
    double c_stony_frac = 0.4;   // C at or above c_stony_frac * C*: stony debris flow
    double dt_max = 0.5;         // s
    double bedrock_depth = 10.0; // erodible depth below the initial bed, m
    BoundaryMode boundary = BoundaryMode::Open;
    bool friction = true;
    bool erosion = true;
    /// Swap forward/backward differences between predictor and corrector every step.
    bool alternate_sweeps = true;
    MaxLevelMode max_level = MaxLevelMode::Depth;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// Fluidization-adjusted specific weight of the fluid phase and bed concentration.
struct Medium {
    double rho = 1.0;
    double cstar = 0.6;
};

std::string to_string(BoundaryMode mode);
BoundaryMode boundary_mode_from_string(const std::string& text);
std::string to_string(MaxLevelMode mode);
MaxLevelMode max_level_mode_from_string(const std::string& text);

}  // namespace dfsim::sim
