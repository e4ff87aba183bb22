#include "dfsim/sim/params.hpp"

#include <cmath>

#include "dfsim/common/error.hpp"

namespace dfsim::sim {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError("SimParams: " + message);
}

bool positive(double x) { return std::isfinite(x) && x > 0.0; }
bool non_negative(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

void SimParams::validate() const {
    require(positive(g), "g must be positive");
    require(non_negative(eps_diff), "eps_diff must be >= 0");
    require(positive(sigma), "sigma must be positive");
    require(positive(rho0), "rho0 must be positive");
    require(sigma > rho0, "sigma must exceed rho0");
    require(cstar0 > 0.0 && cstar0 < 1.0, "cstar0 must lie in (0, 1)");
    require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
    require(positive(d_m), "d_m must be positive");
    require(non_negative(manning_n), "manning_n must be >= 0");
    require(positive(tan_phi), "tan_phi must be positive");
    require(non_negative(delta_e), "delta_e must be >= 0");
    require(non_negative(delta_d), "delta_d must be >= 0");
    require(positive(h_min), "h_min must be positive");
    require(cfl > 0.0 && cfl < 1.0, "cfl must lie in (0, 1)");
    require(visc_kappa >= 0.0 && visc_kappa <= 0.25, "visc_kappa must lie in [0, 0.25]");
    require(non_negative(c_water), "c_water must be >= 0");
    require(c_stony_frac > 0.0 && c_stony_frac <= 1.0, "c_stony_frac must lie in (0, 1]");
    require(positive(dt_max), "dt_max must be positive");
    require(non_negative(bedrock_depth), "bedrock_depth must be >= 0");
}

std::string to_string(BoundaryMode mode) {
    return mode == BoundaryMode::Open ? "open" : "closed";
}

BoundaryMode boundary_mode_from_string(const std::string& text) {
    if (text == "open") return BoundaryMode::Open;
    if (text == "closed") return BoundaryMode::Closed;
    throw ConfigError("unknown boundary mode '" + text + "' (expected open|closed)");
}

std::string to_string(MaxLevelMode mode) {
    return mode == MaxLevelMode::Depth ? "depth" : "surface";
}

MaxLevelMode max_level_mode_from_string(const std::string& text) {
    if (text == "depth") return MaxLevelMode::Depth;
    if (text == "surface") return MaxLevelMode::SurfaceElevation;
    throw ConfigError("unknown max level mode '" + text + "' (expected depth|surface)");
}

}  // namespace dfsim::sim
