#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dfsim/grid/raster.hpp"

namespace dfsim::cli {

enum class Colormap {
    Linear,     // min -> max along a five-stop blue-green-yellow ramp
    Diverging,  // -s -> 0 -> +s as blue -> white -> red, s = max |v|
};

Colormap colormap_from_string(const std::string& text);
std::string to_string(Colormap c);

inline constexpr std::array<std::uint8_t, 3> kNodataColor{128, 128, 128};

struct RenderStats {
    std::optional<double> min, max;  // over valid cells; empty if none
    std::size_t nodata_cells = 0;
};

/// RGB bytes, row 0 (north) first.
std::vector<std::uint8_t> render_rgb(const grid::Raster& raster, Colormap cmap, RenderStats& stats);

/// Binary PPM (P6).
void write_ppm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& rgb);

}  // namespace dfsim::cli
