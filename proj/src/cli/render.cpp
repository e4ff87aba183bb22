#include "dfsim/cli/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dfsim/common/error.hpp"

namespace dfsim::cli {

namespace {

using Rgb = std::array<double, 3>;

constexpr Rgb kLinearStops[] = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
constexpr Rgb kBlue{33, 102, 172};
constexpr Rgb kWhite{247, 247, 247};
constexpr Rgb kRed{178, 24, 43};

Rgb mix(const Rgb& a, const Rgb& b, double t) {
    return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

Rgb linear_color(double t) {
    constexpr int n = std::size(kLinearStops) - 1;
    const double x = std::clamp(t, 0.0, 1.0) * n;
    const int k = std::min(static_cast<int>(x), n - 1);
    return mix(kLinearStops[k], kLinearStops[k + 1], x - k);
}

Rgb diverging_color(double t) {
    t = std::clamp(t, -1.0, 1.0);
    return t < 0 ? mix(kWhite, kBlue, -t) : mix(kWhite, kRed, t);
}

}  // namespace

Colormap colormap_from_string(const std::string& text) {
    if (text == "linear") return Colormap::Linear;
    if (text == "diverging") return Colormap::Diverging;
    throw ConfigError("unknown colormap '" + text + "' (linear, diverging)");
}

std::string to_string(Colormap c) { return c == Colormap::Linear ? "linear" : "diverging"; }

std::vector<std::uint8_t> render_rgb(const grid::Raster& raster, Colormap cmap, RenderStats& stats) {
    stats = {};
    for (std::size_t i = 0; i < raster.size(); ++i) {
        if (raster.is_nodata(i)) {
            ++stats.nodata_cells;
            continue;
        }
        const double v = raster[i];
        stats.min = stats.min ? std::min(*stats.min, v) : v;
        stats.max = stats.max ? std::max(*stats.max, v) : v;
    }
    const double lo = stats.min.value_or(0.0), hi = stats.max.value_or(0.0);
    const double span = hi - lo;
    const double s = std::max(std::abs(lo), std::abs(hi));

    std::vector<std::uint8_t> rgb(raster.size() * 3);
    for (std::size_t i = 0; i < raster.size(); ++i) {
        std::uint8_t* px = &rgb[3 * i];
        if (raster.is_nodata(i)) {
            std::copy(kNodataColor.begin(), kNodataColor.end(), px);
            continue;
        }
        const double v = raster[i];
        const Rgb c = cmap == Colormap::Linear ? linear_color(span > 0 ? (v - lo) / span : 0.0)
                                               : diverging_color(s > 0 ? v / s : 0.0);
        for (int k = 0; k < 3; ++k) px[k] = static_cast<std::uint8_t>(std::lround(c[k]));
    }
    return rgb;
}

void write_ppm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& rgb) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << "P6\n" << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (!out) throw FormatError("write failed on " + path.string());
}

}  // namespace dfsim::cli
