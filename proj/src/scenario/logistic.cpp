#include "dfsim/scenario/logistic.hpp"

#include <cmath>
#include <string>

#include "dfsim/common/error.hpp"

namespace dfsim::scenario {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Cross-entropy of a label given the logit: y ? softplus(-z) : softplus(z).
double cross_entropy(double z, bool y) { return y ? softplus(-z) : softplus(z); }

}  // namespace

double LogisticModel::probability(const double* x) const {
    double z = bias;
    for (std::size_t k = 0; k < weights.size(); ++k) z += weights[k] * (x[k] - mean[k]) / stddev[k];
    return sigmoid(z);
}

void LogisticModel::validate() const {
    if (mean.size() != weights.size() || stddev.size() != weights.size()) {
        throw ConfigError("logistic model: weights, mean and stddev must have the same length");
    }
    if (!std::isfinite(bias)) throw ConfigError("logistic model: bias is not finite");
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (!std::isfinite(weights[k]) || !std::isfinite(mean[k])) {
            throw ConfigError("logistic model: feature " + std::to_string(k) + " has a non-finite parameter");
        }
        if (!(stddev[k] > 0.0) || !std::isfinite(stddev[k])) {
            throw ConfigError("logistic model: stddev of feature " + std::to_string(k) + " must be > 0");
        }
    }
}

FitResult fit_logistic(const std::vector<double>& x, const std::vector<std::uint8_t>& y, std::size_t num_features,
                       const FitOptions& options) {
    if (num_features == 0) throw ConfigError("fit_logistic: no features");
    const std::size_t n = y.size();
    if (x.size() != n * num_features) throw ConfigError("fit_logistic: design matrix size does not match labels");
    std::size_t positives = 0;
    for (auto v : y) positives += v ? 1 : 0;
    if (positives == 0 || positives == n) {
        throw ConfigError("fit_logistic: labels need at least one positive and one negative cell");
    }

    const std::size_t m = num_features;
    LogisticModel model;
    model.weights.assign(m, 0.0);
    model.mean.assign(m, 0.0);
    model.stddev.assign(m, 1.0);
    for (std::size_t k = 0; k < m; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i * m + k];
        const double mu = s / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += (x[i * m + k] - mu) * (x[i * m + k] - mu);
        const double sd = std::sqrt(ss / static_cast<double>(n));
        model.mean[k] = mu;
        model.stddev[k] = sd > 0.0 ? sd : 1.0;
    }

    std::vector<double> xs(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < m; ++k) xs[i * m + k] = (x[i * m + k] - model.mean[k]) / model.stddev[k];
    }

    const double lr = options.learning_rate > 0.0 ? options.learning_rate : 4.0 / static_cast<double>(m + 1);
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> grad(m);
    FitResult result;

    for (std::size_t iter = 0;; ++iter) {
        double loss = 0.0, gb = 0.0;
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = &xs[i * m];
            double z = model.bias;
            for (std::size_t k = 0; k < m; ++k) z += model.weights[k] * row[k];
            loss += cross_entropy(z, y[i] != 0);
            const double r = sigmoid(z) - (y[i] ? 1.0 : 0.0);
            gb += r;
            for (std::size_t k = 0; k < m; ++k) grad[k] += r * row[k];
        }
        loss *= inv_n;
        gb *= inv_n;
        double norm2 = gb * gb;
        for (double& g : grad) {
            g *= inv_n;
            norm2 += g * g;
        }
        result.loss = loss;
        result.grad_norm = std::sqrt(norm2);
        result.iterations = iter;
        if (result.grad_norm < options.grad_tol || iter >= options.max_iterations) break;
        if (options.record_loss) result.loss_history.push_back(loss);
        model.bias -= lr * gb;
        for (std::size_t k = 0; k < m; ++k) model.weights[k] -= lr * grad[k];
    }
    if (options.record_loss) result.loss_history.push_back(result.loss);
    result.model = std::move(model);
    return result;
}

double mean_cross_entropy(const LogisticModel& model, const std::vector<double>& x,
                          const std::vector<std::uint8_t>& y) {
    const std::size_t m = model.num_features();
    double loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double z = model.bias;
        for (std::size_t k = 0; k < m; ++k) z += model.weights[k] * (x[i * m + k] - model.mean[k]) / model.stddev[k];
        loss += cross_entropy(z, y[i] != 0);
    }
    return loss / static_cast<double>(y.size());
}

std::vector<double> terrain_design_matrix(const grid::TerrainFeatures& f, std::vector<std::size_t>& cells) {
    const grid::Raster* grids[4] = {&f.slope, &f.flow_accumulation, &f.plan_curvature, &f.tangential_curvature};
    for (const auto* g : grids) grid::require_same_geometry(f.slope.header(), g->header(), "terrain features");
    cells.clear();
    std::vector<double> x;
    for (std::size_t i = 0; i < f.slope.size(); ++i) {
        bool valid = true;
        for (const auto* g : grids) valid = valid && !g->is_nodata(i);
        if (!valid) continue;
        cells.push_back(i);
        x.push_back(f.slope[i]);
        x.push_back(std::log1p(f.flow_accumulation[i]));
        x.push_back(f.plan_curvature[i]);
        x.push_back(f.tangential_curvature[i]);
    }
    return x;
}

FitResult fit_logistic(const grid::TerrainFeatures& features, const grid::BinaryRaster& labels,
                       const FitOptions& options) {
    grid::require_same_geometry(features.slope.header(), labels.header(), "labels");
    std::vector<std::size_t> cells;
    const std::vector<double> x = terrain_design_matrix(features, cells);
    std::vector<std::uint8_t> y(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) y[i] = labels[cells[i]];
    return fit_logistic(x, y, 4, options);
}

grid::Raster predict_probability(const LogisticModel& model, const grid::TerrainFeatures& features) {
    if (model.num_features() != 4) {
        throw ConfigError("predict_probability: terrain model needs 4 weights, got " +
                          std::to_string(model.num_features()));
    }
    model.validate();
    std::vector<std::size_t> cells;
    const std::vector<double> x = terrain_design_matrix(features, cells);
    grid::Raster p(features.slope.header(), features.slope.nodata());
    for (std::size_t i = 0; i < cells.size(); ++i) p[cells[i]] = model.probability(&x[i * 4]);
    return p;
}

}  // namespace dfsim::scenario
