#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dfsim/common/error.hpp"

namespace dfsim::grid {

/// Georeferencing header shared by every raster. Row 0 is the northernmost row;
/// (origin_x, origin_y) is the lower-left corner of the lower-left cell.
struct GridHeader {
    std::size_t rows = 0;
    std::size_t cols = 0;
    double cellsize = 1.0;
    double origin_x = 0.0;
    double origin_y = 0.0;
    double nodata = -9999.0;

    std::size_t size() const noexcept { return rows * cols; }

    /// Throws ConfigError unless rows, cols >= 1 and cellsize > 0.
    void validate() const;

    /// Same dimensions and georeferencing (nodata may differ).
    bool same_geometry(const GridHeader& other) const noexcept {
        return rows == other.rows && cols == other.cols && cellsize == other.cellsize &&
               origin_x == other.origin_x && origin_y == other.origin_y;
    }

    bool operator==(const GridHeader&) const = default;
};

struct CellIndex {
    std::size_t row = 0;
    std::size_t col = 0;

    bool operator==(const CellIndex&) const = default;
    auto operator<=>(const CellIndex&) const = default;
};

/// Row-major grid of values sharing a GridHeader.
template <typename T>
class Grid {
public:
    using value_type = T;

    Grid() = default;
    explicit Grid(GridHeader header, T fill = T{}) : header_(header), values_(header.size(), fill) {
        header_.validate();
    }
    Grid(GridHeader header, std::vector<T> values) : header_(header), values_(std::move(values)) {
        header_.validate();
        if (values_.size() != header_.size()) {
            throw ConfigError("grid value count " + std::to_string(values_.size()) +
                              " does not match header " + std::to_string(header_.rows) + "x" +
                              std::to_string(header_.cols));
        }
    }

    const GridHeader& header() const noexcept { return header_; }
    std::size_t rows() const noexcept { return header_.rows; }
    std::size_t cols() const noexcept { return header_.cols; }
    std::size_t size() const noexcept { return values_.size(); }
    double cellsize() const noexcept { return header_.cellsize; }
    double nodata() const noexcept { return header_.nodata; }

    T& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * header_.cols + c]; }
    const T& operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * header_.cols + c]; }
    T& operator[](std::size_t i) noexcept { return values_[i]; }
    const T& operator[](std::size_t i) const noexcept { return values_[i]; }

    std::span<T> values() noexcept { return values_; }
    std::span<const T> values() const noexcept { return values_; }
    std::vector<T>& data() noexcept { return values_; }
    const std::vector<T>& data() const noexcept { return values_; }

    bool operator==(const Grid&) const = default;

private:
    GridHeader header_{};
    std::vector<T> values_;
};

/// Real-valued raster (elevations, depths, indices, ...).
class Raster : public Grid<double> {
public:
    using Grid<double>::Grid;

    bool is_nodata(std::size_t i) const noexcept { return (*this)[i] == nodata(); }
    bool is_nodata(std::size_t r, std::size_t c) const noexcept { return (*this)(r, c) == nodata(); }

    /// Throws ConfigError if any non-nodata value is not finite.
    void validate() const;
};

/// 0/1 raster. Never holds nodata: invalid cells are 0 and a separate mask
/// carries validity when it matters.
class BinaryRaster : public Grid<std::uint8_t> {
public:
    using Grid<std::uint8_t>::Grid;

    std::size_t count_ones() const noexcept;

    /// Throws ConfigError if any value is not exactly 0 or 1.
    void validate() const;
};

/// Copy the header and reuse it for a binary result.
BinaryRaster make_binary_like(const GridHeader& header, std::uint8_t fill = 0);

/// Convert a 0/1 real raster (e.g. read from a grid file); nodata and 0 map to 0,
/// everything else must be 1.
BinaryRaster to_binary(const Raster& raster);

/// 0/1 values as reals with the given header nodata.
Raster to_real(const BinaryRaster& binary);

/// Throws ConfigError naming `what` if the two headers disagree in geometry.
void require_same_geometry(const GridHeader& a, const GridHeader& b, const std::string& what);

}  // namespace dfsim::grid
