#pragma once

#include <optional>

#include "dfsim/grid/raster.hpp"

namespace dfsim::changedet {

/// Reflectance bands of one acquisition, all on one grid. NDVI needs nir;
/// VARI uses red, green and blue.
struct BandSet {
    grid::Raster red;
    grid::Raster green;
    grid::Raster blue;
    std::optional<grid::Raster> nir;

    /// Throws ConfigError if the present bands disagree in geometry.
    void validate() const;
};

enum class VegetationIndex { Ndvi, Vari };

/// (NIR - Red) / (NIR + Red); nodata where |NIR + Red| < 1e-12 or a band is nodata.
grid::Raster ndvi(const BandSet& bands);

/// (Green - Red) / (Green + Red - Blue); nodata where the denominator is below 1e-12 in magnitude.
grid::Raster vari(const BandSet& bands);

grid::Raster vegetation_index(const BandSet& bands, VegetationIndex index);

/// 0.7 for NDVI, 0 for VARI.
double default_threshold(VegetationIndex index);

struct ChangeMap {
    grid::BinaryRaster changed;
    grid::BinaryRaster valid;  // 1 where both indices are valid and the optional mask allows it
};

/// changed = pre >= threshold AND post < threshold on valid cells, 0 elsewhere.
/// `mask` (optional, 1 = usable) removes clouds or manually excluded areas.
ChangeMap vegetation_loss(const grid::Raster& pre, const grid::Raster& post, double threshold,
                          const grid::BinaryRaster* mask = nullptr);

}  // namespace dfsim::changedet
