#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dfsim/grid/raster.hpp"
#include "dfsim/grid/terrain.hpp"

namespace dfsim::scenario {

/// Logistic model on standardized features:
///   p = 1 / (1 + exp(-(sum_k w_k (x_k - mean_k) / std_k + b)))
struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> mean;
    std::vector<double> stddev;

    std::size_t num_features() const noexcept { return weights.size(); }
    double probability(const double* x) const;
    /// Throws ConfigError on size mismatch, non-finite weights or stddev <= 0.
    void validate() const;
};

/// Terrain feature order used by the terrain wrappers.
inline constexpr const char* kTerrainFeatureNames[4] = {"slope", "log1p_accumulation", "plan_curvature",
                                                        "tangential_curvature"};

struct FitOptions {
    double grad_tol = 1e-6;
    std::size_t max_iterations = 100000;
    /// <= 0 selects 4 / (num_features + 1), the inverse of a Lipschitz bound of
    /// the mean cross-entropy gradient on standardized features.
    double learning_rate = 0.0;
    bool record_loss = false;
};

struct FitResult {
    LogisticModel model;
    std::size_t iterations = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    std::vector<double> loss_history;  // loss before each iteration, when recorded
};

/// Full-batch gradient descent on the mean cross-entropy. `x` is row-major,
/// samples x num_features. Constant features get stddev 1.
/// Throws ConfigError unless both labels occur.
FitResult fit_logistic(const std::vector<double>& x, const std::vector<std::uint8_t>& y, std::size_t num_features,
                       const FitOptions& options = {});

/// Mean cross-entropy of a model on raw (unstandardized) samples.
double mean_cross_entropy(const LogisticModel& model, const std::vector<double>& x,
                          const std::vector<std::uint8_t>& y);

/// Row-major feature matrix of the valid cells (all four terrain grids valid)
/// in kTerrainFeatureNames order, accumulation as log(1 + a). `cells` receives
/// the flat index of each row.
std::vector<double> terrain_design_matrix(const grid::TerrainFeatures& features, std::vector<std::size_t>& cells);

/// Fit on every valid cell, labels from a 0/1 raster on the same grid.
FitResult fit_logistic(const grid::TerrainFeatures& features, const grid::BinaryRaster& labels,
                       const FitOptions& options = {});

/// Per-cell probability; nodata where any feature is nodata.
grid::Raster predict_probability(const LogisticModel& model, const grid::TerrainFeatures& features);

}  // namespace dfsim::scenario
