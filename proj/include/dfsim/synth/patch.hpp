#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "dfsim/grid/raster.hpp"
#include "dfsim/synth/corrupt.hpp"

namespace dfsim::synth {

inline constexpr std::size_t kInputChannels = 2;

/// One training sample: channel 0 the binary change map, channel 1 slope / (pi/2);
/// target the regression variable. All planes are row-major size x size.
struct PatchSample {
    std::uint64_t case_id = 0;
    std::uint32_t row = 0;  // offset of the patch in the case grid
    std::uint32_t col = 0;
    std::uint32_t size = 0;
    std::vector<float> input;   // kInputChannels * size * size
    std::vector<float> target;  // size * size

    float& change(std::size_t r, std::size_t c) { return input[r * size + c]; }
    float& slope(std::size_t r, std::size_t c) { return input[size * size + r * size + c]; }
};

/// Row-major tiles of side `patch` every `stride` cells; partial tiles at the
/// right and bottom edges are dropped. Nodata slope or target becomes 0.
/// Throws ConfigError if the grid is smaller than one patch.
std::vector<PatchSample> patchify(const grid::BinaryRaster& change, const grid::Raster& slope,
                                  const grid::Raster& target, std::size_t patch, std::size_t stride,
                                  std::uint64_t case_id);

/// Number of tiles patchify emits for a rows x cols grid.
std::size_t patch_count(std::size_t rows, std::size_t cols, std::size_t patch, std::size_t stride);

/// Zero cutout_count random rectangles in the change channel and the target;
/// the slope channel is untouched. Side lengths are uniform in
/// [cutout_min, cutout_max] (capped at the patch size), positions uniform
/// over the placements that fit. Draws come from CounterRng(seed, Cutout).
void cutout(PatchSample& sample, const CorruptionParams& params, std::uint64_t seed);

// Patch files ("TSP1"), little-endian:
//   header: char[4] "TSP1", u32 patch size, u32 input channel count
//   record: u64 case_id, u32 row, u32 col, f32 input[channels * P * P], f32 target[P * P]

class PatchWriter {
public:
    PatchWriter(const std::filesystem::path& path, std::uint32_t patch_size,
                std::uint32_t channels = kInputChannels);
    void write(const PatchSample& sample);
    std::size_t records() const noexcept { return records_; }
    void close();

private:
    std::ofstream out_;
    std::filesystem::path path_;
    std::uint32_t patch_size_;
    std::uint32_t channels_;
    std::size_t records_ = 0;
};

struct PatchFile {
    std::uint32_t patch_size = 0;
    std::uint32_t channels = 0;
    std::vector<PatchSample> samples;
};

/// Throws FormatError on a bad magic, a truncated record or trailing bytes.
PatchFile read_patch_file(const std::filesystem::path& path);

}  // namespace dfsim::synth
