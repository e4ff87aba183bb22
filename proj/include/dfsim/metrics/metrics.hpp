#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dfsim/grid/raster.hpp"

namespace dfsim::metrics {

// A cell is evaluated when the optional mask is 1 there and no real-valued
// input is nodata.

/// sqrt(mean (pred - ref)^2) over evaluated cells. Throws ConfigError if none.
double rmse(const grid::Raster& pred, const grid::Raster& ref, const grid::BinaryRaster* mask = nullptr);

/// |pred AND ref| / |pred OR ref|; 1 when both are empty.
double iou(const grid::BinaryRaster& pred, const grid::BinaryRaster& ref, const grid::BinaryRaster* mask = nullptr);

struct ThresholdIou {
    double iou = 0.0;
    double threshold = 0.0;
};

/// Binarize pred as |pred| >= t and |pred| > 0 (a zero prediction is never
/// change) and maximise IoU over t in the distinct values of |pred|, plus 0
/// when no value is positive. Ties return the smallest t.
ThresholdIou best_threshold_iou(const grid::Raster& pred, const grid::BinaryRaster& ref,
                                const grid::BinaryRaster* mask = nullptr);

/// Log-scaled histogram intersection. Magnitudes |v| >= v0 are binned by
/// floor((log10|v| - lo) * bins / (hi - lo)), clamped to [0, bins - 1];
/// each histogram is normalised to sum 1 and the score is sum_k min(P_k, Q_k).
/// Both histograms empty gives 1, exactly one empty gives 0.
struct LshiParams {
    double v0 = 0.01;
    double lo = -2.0;
    double hi = 2.0;
    std::size_t bins = 40;  // width 0.1 over [-2, 2]

    void validate() const;
};

double lshi(const grid::Raster& pred, const grid::Raster& ref, const grid::BinaryRaster* mask = nullptr,
            const LshiParams& params = {});

/// Per-cell mean; nodata where any case is nodata. Throws ConfigError on an
/// empty list or a header mismatch.
grid::Raster ensemble_average(std::span<const grid::Raster> cases);

/// Streaming form of ensemble_average for cases loaded one at a time.
class RasterAverager {
public:
    void add(const grid::Raster& r);
    std::size_t count() const noexcept { return count_; }
    grid::Raster result() const;

private:
    grid::Raster sum_;
    std::vector<std::uint8_t> nodata_;
    std::size_t count_ = 0;
};

struct MetricsReport {
    double rmse = 0.0;
    double iou = 0.0;
    double iou_best_threshold = 0.0;
    double lshi = 0.0;
    std::size_t n_valid = 0;
};

/// All metrics for one prediction. The IoU reference is `ref_binary` when
/// given, otherwise |ref| >= ref_threshold.
MetricsReport evaluate(const grid::Raster& pred, const grid::Raster& ref, const grid::BinaryRaster* ref_binary,
                       const grid::BinaryRaster* mask, const LshiParams& lshi_params = {},
                       double ref_threshold = 0.1);

}  // namespace dfsim::metrics
