// Writes the demo inputs: a synthetic catchment DEM, a pre-event NDVI grid,
// logistic weights fitted to planted initiation labels, and a config.
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"

#include "dfsim/cli/config.hpp"
#include "dfsim/cli/json_io.hpp"
#include "dfsim/common/random.hpp"
#include "dfsim/grid/ascii_grid.hpp"
#include "dfsim/grid/synthetic.hpp"
#include "dfsim/grid/terrain.hpp"
#include "dfsim/scenario/logistic.hpp"
#include "dfsim/scenario/scenario.hpp"

using namespace dfsim;
namespace fs = std::filesystem;

namespace {

// Planted model on standardized features: steep, convergent, well-drained cells.
constexpr double kPlantedWeights[4] = {2.0, 0.8, -0.6, -0.3};
constexpr double kPlantedBias = -3.0;

double round_sig(double v, int digits) {
    if (v == 0.0) return 0.0;
    const double scale = std::pow(10.0, digits - 1 - static_cast<int>(std::floor(std::log10(std::abs(v)))));
    return std::round(v * scale) / scale;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate the demo inputs"};
    std::string out = "data/demo";
    std::size_t size = 256;
    double cellsize = 5.0;
    std::uint64_t seed = 7;
    std::size_t fit_iterations = 2000;
    double points_per_seed = 7.0;
    app.add_option("--out", out, "Output directory");
    app.add_option("--size", size, "Grid side, cells");
    app.add_option("--cellsize", cellsize, "m");
    app.add_option("--seed", seed, "Terrain and label seed");
    app.add_option("--fit-iterations", fit_iterations, "Gradient steps for the demo fit");
    app.add_option("--points", points_per_seed, "Expected initiation points per seed");
    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(out);
        const auto dem = grid::synthetic_catchment(size, size, cellsize, seed);
        const auto features = grid::terrain_features(dem);

        std::vector<std::size_t> cells;
        const auto x = scenario::terrain_design_matrix(features, cells);
        const std::size_t n = cells.size();
        std::vector<double> mean(4, 0.0), sd(4, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (int k = 0; k < 4; ++k) mean[k] += x[4 * i + k] / static_cast<double>(n);
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (int k = 0; k < 4; ++k) sd[k] += std::pow(x[4 * i + k] - mean[k], 2) / static_cast<double>(n);
        }
        for (auto& s : sd) s = s > 0 ? std::sqrt(s) : 1.0;

        const CounterRng labels_rng(seed, RandomStream::DemoLabels);
        std::vector<std::uint8_t> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double z = kPlantedBias;
            for (int k = 0; k < 4; ++k) z += kPlantedWeights[k] * (x[4 * i + k] - mean[k]) / sd[k];
            y[i] = labels_rng.uniform(cells[i]) < 1.0 / (1.0 + std::exp(-z));
        }
        scenario::FitOptions opt;
        opt.max_iterations = fit_iterations;
        const auto fit = scenario::fit_logistic(x, y, 4, opt);

        // Scale so the expected number of eligible points per seed is about `points_per_seed`.
        const auto prob = scenario::predict_probability(fit.model, features);
        const auto eligible = scenario::slope_mask(features.slope, 15.0);
        double expected = 0.0;
        for (std::size_t i = 0; i < prob.size(); ++i) {
            if (eligible[i] && !prob.is_nodata(i)) expected += prob[i];
        }
        const double scale = round_sig(points_per_seed / expected, 4);

        // Vegetated hillslopes, bare channels and a sparser southern plain.
        const CounterRng veg_rng(seed, RandomStream::DemoVegetation);
        grid::Raster ndvi(dem.header(), dem.nodata());
        double max_acc = 1.0;
        for (double a : features.flow_accumulation.data()) max_acc = std::max(max_acc, a);
        for (std::size_t r = 0; r < dem.rows(); ++r) {
            for (std::size_t c = 0; c < dem.cols(); ++c) {
                const std::size_t i = r * dem.cols() + c;
                const double channel = std::log1p(features.flow_accumulation[i]) / std::log1p(max_acc);
                const double south = static_cast<double>(r) / static_cast<double>(dem.rows() - 1);
                const double v = 0.9 - 0.7 * channel * channel - 0.25 * south * south +
                                 0.1 * (veg_rng.uniform(i) - 0.5);
                ndvi[i] = std::clamp(v, -1.0, 1.0);
            }
        }

        grid::write_ascii_grid(dem, fs::path(out) / "dem.asc");
        grid::write_ascii_grid(ndvi, fs::path(out) / "pre_ndvi.asc");
        io::json w = io::to_json(fit.model);
        w["fit"] = {{"iterations", fit.iterations}, {"loss", fit.loss}, {"grad_norm", fit.grad_norm},
                    {"samples", n}, {"positives", std::count(y.begin(), y.end(), 1)}};
        io::write_json_file(w, fs::path(out) / "weights.json");

        io::json cfg = {{"dem", "dem.asc"},
                        {"weights", "weights.json"},
                        {"probability_scale", scale},
                        {"seed_range", {{"first", 1}, {"count", 10}}},
                        {"gammas", {0.0}},
                        {"duration", 600.0},
                        {"sim", io::json::object()},
                        {"supply_template", io::to_json(scenario::SupplyTemplate{})},
                        {"slope_mask_deg", 15.0},
                        {"corruption", io::to_json(synth::CorruptionParams{})},
                        {"dataset", {{"variables", {"maxwl", "deform"}},
                                     {"patch", 64},
                                     {"stride", 64},
                                     {"train_cases", 7},
                                     {"seed", 0}}},
                        {"pre_index", "pre_ndvi.asc"},
                        {"out", "../../out/demo"},
                        {"workers", 0}};
        io::write_json_file(cfg, fs::path(out) / "config.json");
        std::cout << "fit: " << fit.iterations << " iterations, loss " << fit.loss << "; " << n << " cells, "
                  << std::count(y.begin(), y.end(), 1) << " planted positives; expected points per seed "
                  << expected << " before scale " << scale << "\n";
    } catch (const std::exception& e) {
        std::cerr << "make_demo: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
