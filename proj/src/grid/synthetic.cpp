#include "dfsim/grid/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "dfsim/common/random.hpp"

namespace dfsim::grid {

namespace {

GridHeader make_header(std::size_t rows, std::size_t cols, double cellsize) {
    GridHeader h;
    h.rows = rows;
    h.cols = cols;
    h.cellsize = cellsize;
    h.validate();
    return h;
}

}  // namespace

Raster valley_dem(std::size_t rows, std::size_t cols, double cellsize, double long_slope, double side_slope) {
    Raster z(make_header(rows, cols, cellsize), 0.0);
    const double centre = 0.5 * static_cast<double>(cols - 1);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            z(r, c) = long_slope * static_cast<double>(rows - 1 - r) * cellsize +
                      side_slope * std::abs(static_cast<double>(c) - centre) * cellsize;
        }
    }
    return z;
}

Raster bowl_dem(std::size_t rows, std::size_t cols, double cellsize, double depth) {
    Raster z(make_header(rows, cols, cellsize), 0.0);
    const double rc = 0.5 * static_cast<double>(rows - 1);
    const double cc = 0.5 * static_cast<double>(cols - 1);
    const double radius = std::min(rc, cc);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double dr = static_cast<double>(r) - rc, dc = static_cast<double>(c) - cc;
            z(r, c) = depth * (dr * dr + dc * dc) / (radius * radius);
        }
    }
    return z;
}

Raster synthetic_catchment(std::size_t rows, std::size_t cols, double cellsize, std::uint64_t seed) {
    Raster z(make_header(rows, cols, cellsize), 0.0);
    const CounterRng rng(seed, RandomStream::DemoTerrain);
    // a handful of random low-frequency modes
    constexpr int kModes = 6;
    double amp[kModes], kx[kModes], ky[kModes], phase[kModes];
    for (int m = 0; m < kModes; ++m) {
        amp[m] = 4.0 + 8.0 * rng.uniform(4 * m);
        kx[m] = 2.0 * std::numbers::pi * (0.5 + 2.5 * rng.uniform(4 * m + 1)) / static_cast<double>(cols);
        ky[m] = 2.0 * std::numbers::pi * (0.5 + 2.5 * rng.uniform(4 * m + 2)) / static_cast<double>(rows);
        phase[m] = 2.0 * std::numbers::pi * rng.uniform(4 * m + 3);
    }
    const double valleys = 3.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double y = static_cast<double>(r);
        // steep headwaters in the north flattening toward the southern plain
        const double t = 1.0 - y / static_cast<double>(rows - 1);
        const double regional = 0.35 * cellsize * static_cast<double>(rows) * t * t;
        for (std::size_t c = 0; c < cols; ++c) {
            const double x = static_cast<double>(c);
            const double ridge = 0.25 * cellsize * static_cast<double>(cols) / valleys *
                                 std::abs(std::sin(std::numbers::pi * valleys * x / static_cast<double>(cols))) *
                                 (0.2 + t);
            double relief = 0.0;
            for (int m = 0; m < kModes; ++m) relief += amp[m] * std::sin(kx[m] * x + ky[m] * y + phase[m]);
            z(r, c) = regional + ridge + relief * (0.3 + t);
        }
    }
    return z;
}

}  // namespace dfsim::grid
