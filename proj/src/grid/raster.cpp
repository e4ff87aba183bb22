#include "dfsim/grid/raster.hpp"

#include <algorithm>

namespace dfsim::grid {

void GridHeader::validate() const {
    if (rows < 1 || cols < 1) {
        throw ConfigError("grid must have at least one row and one column");
    }
    if (!(cellsize > 0.0) || !std::isfinite(cellsize)) {
        throw ConfigError("grid cellsize must be positive and finite");
    }
}

void Raster::validate() const {
    header().validate();
    for (std::size_t i = 0; i < size(); ++i) {
        if (!is_nodata(i) && !std::isfinite((*this)[i])) {
            throw ConfigError("raster value at index " + std::to_string(i) + " is not finite");
        }
    }
}

std::size_t BinaryRaster::count_ones() const noexcept {
    return static_cast<std::size_t>(std::count(data().begin(), data().end(), std::uint8_t{1}));
}

void BinaryRaster::validate() const {
    header().validate();
    for (std::size_t i = 0; i < size(); ++i) {
        if ((*this)[i] > 1) {
            throw ConfigError("binary raster value at index " + std::to_string(i) + " is not 0 or 1");
        }
    }
}

BinaryRaster make_binary_like(const GridHeader& header, std::uint8_t fill) {
    return BinaryRaster(header, fill);
}

BinaryRaster to_binary(const Raster& raster) {
    BinaryRaster out(raster.header(), 0);
    for (std::size_t i = 0; i < raster.size(); ++i) {
        const double v = raster[i];
        if (raster.is_nodata(i) || v == 0.0) {
            continue;
        }
        if (v != 1.0) {
            throw FormatError("binary grid holds value " + std::to_string(v) + " at index " +
                              std::to_string(i));
        }
        out[i] = 1;
    }
    return out;
}

Raster to_real(const BinaryRaster& binary) {
    Raster out(binary.header(), 0.0);
    for (std::size_t i = 0; i < binary.size(); ++i) {
        out[i] = binary[i];
    }
    return out;
}

void require_same_geometry(const GridHeader& a, const GridHeader& b, const std::string& what) {
    if (!a.same_geometry(b)) {
        throw ConfigError(what + ": grid headers differ (" + std::to_string(a.rows) + "x" +
                          std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                          std::to_string(b.cols) + ")");
    }
}

}  // namespace dfsim::grid
