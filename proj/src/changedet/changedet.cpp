#include "dfsim/changedet/changedet.hpp"

#include <cmath>

#include "dfsim/common/error.hpp"

namespace dfsim::changedet {

namespace {

constexpr double kMinDenominator = 1e-12;

template <typename F>
grid::Raster ratio_index(const grid::Raster& like, const grid::Raster* const* bands, std::size_t count, F&& f) {
    grid::Raster out(like.header(), like.nodata());
    for (std::size_t i = 0; i < out.size(); ++i) {
        bool valid = true;
        for (std::size_t b = 0; b < count; ++b) valid = valid && !bands[b]->is_nodata(i) && std::isfinite((*bands[b])[i]);
        if (!valid) continue;
        const auto [num, den] = f(i);
        if (std::abs(den) < kMinDenominator) continue;
        out[i] = num / den;
    }
    return out;
}

}  // namespace

void BandSet::validate() const {
    grid::require_same_geometry(red.header(), green.header(), "green band");
    grid::require_same_geometry(red.header(), blue.header(), "blue band");
    if (nir) grid::require_same_geometry(red.header(), nir->header(), "nir band");
}

grid::Raster ndvi(const BandSet& bands) {
    if (!bands.nir) throw ConfigError("NDVI needs a near-infrared band");
    grid::require_same_geometry(bands.red.header(), bands.nir->header(), "nir band");
    const grid::Raster* used[] = {&bands.red, &*bands.nir};
    const grid::Raster& nir = *bands.nir;
    const grid::Raster& red = bands.red;
    return ratio_index(red, used, 2, [&](std::size_t i) {
        return std::pair{nir[i] - red[i], nir[i] + red[i]};
    });
}

grid::Raster vari(const BandSet& bands) {
    grid::require_same_geometry(bands.red.header(), bands.green.header(), "green band");
    grid::require_same_geometry(bands.red.header(), bands.blue.header(), "blue band");
    const grid::Raster* used[] = {&bands.red, &bands.green, &bands.blue};
    const grid::Raster& r = bands.red;
    const grid::Raster& g = bands.green;
    const grid::Raster& b = bands.blue;
    return ratio_index(r, used, 3, [&](std::size_t i) {
        return std::pair{g[i] - r[i], g[i] + r[i] - b[i]};
    });
}

grid::Raster vegetation_index(const BandSet& bands, VegetationIndex index) {
    return index == VegetationIndex::Ndvi ? ndvi(bands) : vari(bands);
}

double default_threshold(VegetationIndex index) { return index == VegetationIndex::Ndvi ? 0.7 : 0.0; }

ChangeMap vegetation_loss(const grid::Raster& pre, const grid::Raster& post, double threshold,
                          const grid::BinaryRaster* mask) {
    grid::require_same_geometry(pre.header(), post.header(), "post-event index");
    if (mask) grid::require_same_geometry(pre.header(), mask->header(), "validity mask");
    ChangeMap out{grid::make_binary_like(pre.header()), grid::make_binary_like(pre.header())};
    for (std::size_t i = 0; i < pre.size(); ++i) {
        const bool valid = !pre.is_nodata(i) && !post.is_nodata(i) && (!mask || (*mask)[i]);
        if (!valid) continue;
        out.valid[i] = 1;
        out.changed[i] = pre[i] >= threshold && post[i] < threshold ? 1 : 0;
    }
    return out;
}

}  // namespace dfsim::changedet
