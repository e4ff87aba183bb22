#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "dfsim/grid/raster.hpp"

namespace dfsim::grid {

// Plain-text grid files:
//
//   ncols <int>
//   nrows <int>
//   xllcorner <float>
//   yllcorner <float>
//   cellsize <float>
//   NODATA_value <float>
//   <nrows lines of ncols whitespace-separated values, northernmost row first>
//
// Values are written in shortest round-trip form (std::to_chars), so a
// write/read cycle reproduces every double bit for bit. Readers accept the
// keys case-insensitively and also take xllcenter/yllcenter.

Raster read_ascii_grid(const std::filesystem::path& path);
Raster read_ascii_grid(std::istream& in, const std::string& source_name = "<stream>");

void write_ascii_grid(const Raster& raster, const std::filesystem::path& path);
void write_ascii_grid(const Raster& raster, std::ostream& out);

BinaryRaster read_binary_grid(const std::filesystem::path& path);
void write_binary_grid(const BinaryRaster& raster, const std::filesystem::path& path);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

}  // namespace dfsim::grid
