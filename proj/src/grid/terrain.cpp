#include "dfsim/grid/terrain.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace dfsim::grid {

namespace {

constexpr std::array<int, 8> kDr{-1, -1, 0, 1, 1, 1, 0, -1};
constexpr std::array<int, 8> kDc{0, 1, 1, 1, 0, -1, -1, -1};

bool window_has_nodata(const Raster& dem, std::size_t r, std::size_t c) {
    const std::size_t r0 = r == 0 ? 0 : r - 1;
    const std::size_t r1 = std::min(r + 1, dem.rows() - 1);
    const std::size_t c0 = c == 0 ? 0 : c - 1;
    const std::size_t c1 = std::min(c + 1, dem.cols() - 1);
    for (std::size_t rr = r0; rr <= r1; ++rr) {
        for (std::size_t cc = c0; cc <= c1; ++cc) {
            if (dem.is_nodata(rr, cc)) return true;
        }
    }
    return false;
}

// Gradient with y pointing north (row index decreasing).
void gradient(const Raster& dem, std::size_t r, std::size_t c, double& dzdx, double& dzdy) {
    const double L = dem.cellsize();
    const std::size_t rows = dem.rows(), cols = dem.cols();
    if (c == 0) {
        dzdx = (dem(r, 1) - dem(r, 0)) / L;
    } else if (c == cols - 1) {
        dzdx = (dem(r, c) - dem(r, c - 1)) / L;
    } else {
        dzdx = (dem(r, c + 1) - dem(r, c - 1)) / (2.0 * L);
    }
    if (r == 0) {
        dzdy = (dem(0, c) - dem(1, c)) / L;
    } else if (r == rows - 1) {
        dzdy = (dem(r - 1, c) - dem(r, c)) / L;
    } else {
        dzdy = (dem(r - 1, c) - dem(r + 1, c)) / (2.0 * L);
    }
}

void require_3x3(const Raster& dem, const char* what) {
    if (dem.rows() < 3 || dem.cols() < 3) {
        throw ConfigError(std::string(what) + " needs a DEM of at least 3x3 cells");
    }
}

}  // namespace

Raster slope_grid(const Raster& dem) {
    require_3x3(dem, "slope_grid");
    Raster out(dem.header(), 0.0);
    for (std::size_t r = 0; r < dem.rows(); ++r) {
        for (std::size_t c = 0; c < dem.cols(); ++c) {
            if (window_has_nodata(dem, r, c)) {
                out(r, c) = dem.nodata();
                continue;
            }
            double dzdx = 0.0, dzdy = 0.0;
            gradient(dem, r, c, dzdx, dzdy);
            out(r, c) = std::atan(std::sqrt(dzdx * dzdx + dzdy * dzdy));
        }
    }
    return out;
}

std::vector<std::size_t> d8_receivers(const Raster& dem) {
    const auto rows = static_cast<long>(dem.rows());
    const auto cols = static_cast<long>(dem.cols());
    std::vector<std::size_t> receiver(dem.size());
    for (long r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) {
            const std::size_t i = static_cast<std::size_t>(r * cols + c);
            receiver[i] = i;
            if (dem.is_nodata(i)) continue;
            double lowest = dem[i];
            for (std::size_t k = 0; k < 8; ++k) {
                const long rr = r + kDr[k], cc = c + kDc[k];
                if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
                const std::size_t j = static_cast<std::size_t>(rr * cols + cc);
                if (dem.is_nodata(j)) continue;
                if (dem[j] < lowest) {
                    lowest = dem[j];
                    receiver[i] = j;
                }
            }
        }
    }
    return receiver;
}

Raster flow_accumulation(const Raster& dem) {
    const std::vector<std::size_t> receiver = d8_receivers(dem);
    // Receivers are strictly lower, so processing from high to low elevation
    // visits every donor before its receiver.
    std::vector<std::size_t> order(dem.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dem[a] > dem[b]; });

    Raster acc(dem.header(), 1.0);
    for (std::size_t i : order) {
        if (dem.is_nodata(i)) {
            acc[i] = dem.nodata();
            continue;
        }
        if (receiver[i] != i) {
            acc[receiver[i]] += acc[i];
        }
    }
    return acc;
}

void curvatures(const Raster& dem, Raster& plan, Raster& tangential) {
    require_3x3(dem, "curvatures");
    plan = Raster(dem.header(), 0.0);
    tangential = Raster(dem.header(), 0.0);
    const double L = dem.cellsize();
    const long rows = static_cast<long>(dem.rows());
    const long cols = static_cast<long>(dem.cols());
    auto z = [&](long r, long c) {
        r = std::clamp(r, 0L, rows - 1);
        c = std::clamp(c, 0L, cols - 1);
        return dem(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    };
    for (long r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) {
            const auto ur = static_cast<std::size_t>(r), uc = static_cast<std::size_t>(c);
            if (window_has_nodata(dem, ur, uc)) {
                plan(ur, uc) = dem.nodata();
                tangential(ur, uc) = dem.nodata();
                continue;
            }
            const double z1 = z(r - 1, c - 1), z2 = z(r - 1, c), z3 = z(r - 1, c + 1);
            const double z4 = z(r, c - 1), z5 = z(r, c), z6 = z(r, c + 1);
            const double z7 = z(r + 1, c - 1), z8 = z(r + 1, c), z9 = z(r + 1, c + 1);
            const double D = ((z4 + z6) / 2.0 - z5) / (L * L);
            const double E = ((z2 + z8) / 2.0 - z5) / (L * L);
            const double F = (-z1 + z3 + z7 - z9) / (4.0 * L * L);
            const double G = (z6 - z4) / (2.0 * L);
            const double H = (z2 - z8) / (2.0 * L);
            const double p = G * G + H * H;
            if (p <= 0.0) continue;
            const double num = -(H * H * 2.0 * D - 2.0 * G * H * F + G * G * 2.0 * E);
            plan(ur, uc) = num / (p * std::sqrt(p));
            tangential(ur, uc) = num / (p * std::sqrt(1.0 + p));
        }
    }
}

TerrainFeatures terrain_features(const Raster& dem) {
    dem.validate();
    TerrainFeatures f;
    f.slope = slope_grid(dem);
    f.flow_accumulation = flow_accumulation(dem);
    curvatures(dem, f.plan_curvature, f.tangential_curvature);
    return f;
}

}  // namespace dfsim::grid
