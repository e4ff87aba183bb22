#include "dfsim/synth/patch.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <numbers>
#include <string>

#include "dfsim/common/error.hpp"
#include "dfsim/common/random.hpp"

namespace dfsim::synth {

std::size_t patch_count(std::size_t rows, std::size_t cols, std::size_t patch, std::size_t stride) {
    if (patch == 0 || stride == 0 || rows < patch || cols < patch) return 0;
    return ((rows - patch) / stride + 1) * ((cols - patch) / stride + 1);
}

std::vector<PatchSample> patchify(const grid::BinaryRaster& change, const grid::Raster& slope,
                                  const grid::Raster& target, std::size_t patch, std::size_t stride,
                                  std::uint64_t case_id) {
    grid::require_same_geometry(change.header(), slope.header(), "slope");
    grid::require_same_geometry(change.header(), target.header(), "target");
    if (patch == 0 || stride == 0) throw ConfigError("patchify: patch and stride must be >= 1");
    const std::size_t rows = change.rows(), cols = change.cols();
    if (rows < patch || cols < patch) {
        throw ConfigError("patchify: grid " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " is smaller than the patch size " + std::to_string(patch));
    }
    const double to_unit = 2.0 / std::numbers::pi;
    std::vector<PatchSample> out;
    out.reserve(patch_count(rows, cols, patch, stride));
    for (std::size_t r0 = 0; r0 + patch <= rows; r0 += stride) {
        for (std::size_t c0 = 0; c0 + patch <= cols; c0 += stride) {
            PatchSample s;
            s.case_id = case_id;
            s.row = static_cast<std::uint32_t>(r0);
            s.col = static_cast<std::uint32_t>(c0);
            s.size = static_cast<std::uint32_t>(patch);
            s.input.assign(kInputChannels * patch * patch, 0.0f);
            s.target.assign(patch * patch, 0.0f);
            for (std::size_t r = 0; r < patch; ++r) {
                for (std::size_t c = 0; c < patch; ++c) {
                    const std::size_t g = (r0 + r) * cols + (c0 + c);
                    const std::size_t k = r * patch + c;
                    s.input[k] = change[g] ? 1.0f : 0.0f;
                    if (!slope.is_nodata(g)) {
                        s.input[patch * patch + k] = static_cast<float>(std::clamp(slope[g] * to_unit, 0.0, 1.0));
                    }
                    if (!target.is_nodata(g)) s.target[k] = static_cast<float>(target[g]);
                }
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

void cutout(PatchSample& sample, const CorruptionParams& params, std::uint64_t seed) {
    if (params.cutout_count == 0) return;
    const std::size_t p = sample.size;
    const auto lo = static_cast<std::int64_t>(std::min(params.cutout_min, p));
    const auto hi = static_cast<std::int64_t>(std::min(params.cutout_max, p));
    const CounterRng rng(seed, RandomStream::Cutout);
    for (std::size_t k = 0; k < params.cutout_count; ++k) {
        const std::uint64_t base = 4 * k;
        const auto h = static_cast<std::size_t>(rng.uniform_int(base, lo, hi));
        const auto w = static_cast<std::size_t>(rng.uniform_int(base + 1, lo, hi));
        const auto r0 = static_cast<std::size_t>(rng.uniform_int(base + 2, 0, static_cast<std::int64_t>(p - h)));
        const auto c0 = static_cast<std::size_t>(rng.uniform_int(base + 3, 0, static_cast<std::int64_t>(p - w)));
        for (std::size_t r = r0; r < r0 + h; ++r) {
            for (std::size_t c = c0; c < c0 + w; ++c) {
                sample.input[r * p + c] = 0.0f;
                sample.target[r * p + c] = 0.0f;
            }
        }
    }
}

namespace {

constexpr std::array<char, 4> kMagic = {'T', 'S', 'P', '1'};

template <typename T>
void put_le(std::string& buf, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t b = 0; b < sizeof(U); ++b) buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

template <typename T>
T get_le(const unsigned char* p) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    U bits = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) bits |= static_cast<U>(p[b]) << (8 * b);
    return std::bit_cast<T>(bits);
}

}  // namespace

PatchWriter::PatchWriter(const std::filesystem::path& path, std::uint32_t patch_size, std::uint32_t channels)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path), patch_size_(patch_size), channels_(channels) {
    if (!out_) throw FormatError("cannot open patch file " + path.string() + " for writing");
    std::string head(kMagic.begin(), kMagic.end());
    put_le(head, patch_size_);
    put_le(head, channels_);
    out_.write(head.data(), static_cast<std::streamsize>(head.size()));
}

void PatchWriter::write(const PatchSample& s) {
    const std::size_t plane = static_cast<std::size_t>(patch_size_) * patch_size_;
    if (s.size != patch_size_ || s.input.size() != channels_ * plane || s.target.size() != plane) {
        throw FormatError("patch record does not match the file layout of " + path_.string());
    }
    std::string buf;
    buf.reserve(16 + 4 * (s.input.size() + s.target.size()));
    put_le(buf, s.case_id);
    put_le(buf, s.row);
    put_le(buf, s.col);
    for (float v : s.input) put_le(buf, v);
    for (float v : s.target) put_le(buf, v);
    out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out_) throw FormatError("write failed on " + path_.string());
    ++records_;
}

void PatchWriter::close() {
    out_.close();
    if (!out_) throw FormatError("closing " + path_.string() + " failed");
}

PatchFile read_patch_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open patch file " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic.data(), 4) != 0) {
        throw FormatError(path.string() + ": not a TSP1 patch file");
    }
    PatchFile f;
    f.patch_size = get_le<std::uint32_t>(&bytes[4]);
    f.channels = get_le<std::uint32_t>(&bytes[8]);
    const std::size_t plane = static_cast<std::size_t>(f.patch_size) * f.patch_size;
    const std::size_t record = 16 + 4 * (f.channels + 1) * plane;
    const std::size_t payload = bytes.size() - 12;
    if (plane == 0 || payload % record != 0) {
        throw FormatError(path.string() + ": payload of " + std::to_string(payload) +
                          " bytes is not a whole number of records");
    }
    for (std::size_t off = 12; off < bytes.size(); off += record) {
        PatchSample s;
        s.case_id = get_le<std::uint64_t>(&bytes[off]);
        s.row = get_le<std::uint32_t>(&bytes[off + 8]);
        s.col = get_le<std::uint32_t>(&bytes[off + 12]);
        s.size = f.patch_size;
        s.input.resize(f.channels * plane);
        s.target.resize(plane);
        const unsigned char* p = &bytes[off + 16];
        for (float& v : s.input) {
            v = get_le<float>(p);
            p += 4;
        }
        for (float& v : s.target) {
            v = get_le<float>(p);
            p += 4;
        }
        f.samples.push_back(std::move(s));
    }
    return f;
}

}  // namespace dfsim::synth
