#include "dfsim/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dfsim/common/error.hpp"

namespace dfsim::metrics {

namespace {

bool usable(const grid::BinaryRaster* mask, std::size_t i) { return !mask || (*mask)[i]; }

void check_mask(const grid::GridHeader& h, const grid::BinaryRaster* mask) {
    if (mask) grid::require_same_geometry(h, mask->header(), "mask");
}

std::vector<std::uint64_t> histogram(const grid::Raster& r, const grid::Raster& other,
                                     const grid::BinaryRaster* mask, const LshiParams& p, std::uint64_t& count) {
    std::vector<std::uint64_t> h(p.bins, 0);
    count = 0;
    const double scale = static_cast<double>(p.bins) / (p.hi - p.lo);
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!usable(mask, i) || r.is_nodata(i) || other.is_nodata(i)) continue;
        const double a = std::abs(r[i]);
        if (!(a >= p.v0)) continue;
        const double pos = std::floor((std::log10(a) - p.lo) * scale);
        const double k = std::clamp(pos, 0.0, static_cast<double>(p.bins - 1));
        ++h[static_cast<std::size_t>(k)];
        ++count;
    }
    return h;
}

}  // namespace

double rmse(const grid::Raster& pred, const grid::Raster& ref, const grid::BinaryRaster* mask) {
    grid::require_same_geometry(pred.header(), ref.header(), "reference");
    check_mask(pred.header(), mask);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!usable(mask, i) || pred.is_nodata(i) || ref.is_nodata(i)) continue;
        const double d = pred[i] - ref[i];
        sum += d * d;
        ++n;
    }
    if (n == 0) throw ConfigError("rmse: no valid cells to evaluate");
    return std::sqrt(sum / static_cast<double>(n));
}

double iou(const grid::BinaryRaster& pred, const grid::BinaryRaster& ref, const grid::BinaryRaster* mask) {
    grid::require_same_geometry(pred.header(), ref.header(), "reference");
    check_mask(pred.header(), mask);
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!usable(mask, i)) continue;
        inter += pred[i] && ref[i];
        uni += pred[i] || ref[i];
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

ThresholdIou best_threshold_iou(const grid::Raster& pred, const grid::BinaryRaster& ref,
                                const grid::BinaryRaster* mask) {
    grid::require_same_geometry(pred.header(), ref.header(), "reference");
    check_mask(pred.header(), mask);
    std::vector<std::pair<double, std::uint8_t>> cells;  // (|pred|, ref) with |pred| > 0
    std::size_t ref_total = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!usable(mask, i) || pred.is_nodata(i)) continue;
        ref_total += ref[i];
        const double a = std::abs(pred[i]);
        if (a > 0.0) cells.emplace_back(a, ref[i]);
    }
    auto score = [ref_total](std::size_t predicted, std::size_t inter) {
        const std::size_t uni = predicted + ref_total - inter;
        return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    };
    ThresholdIou best{score(0, 0), 0.0};
    if (cells.empty()) return best;

    // Lower the threshold through the distinct magnitudes, largest first.
    std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    best.iou = -1.0;
    std::size_t predicted = 0, inter = 0;
    for (std::size_t k = 0; k < cells.size();) {
        const double t = cells[k].first;
        while (k < cells.size() && cells[k].first == t) {
            ++predicted;
            inter += cells[k].second;
            ++k;
        }
        const double s = score(predicted, inter);
        if (s >= best.iou) best = {s, t};
    }
    return best;
}

void LshiParams::validate() const {
    if (!(v0 > 0.0) || !(hi > lo) || bins == 0) throw ConfigError("lshi: need v0 > 0, hi > lo and bins >= 1");
}

double lshi(const grid::Raster& pred, const grid::Raster& ref, const grid::BinaryRaster* mask,
            const LshiParams& params) {
    params.validate();
    grid::require_same_geometry(pred.header(), ref.header(), "reference");
    check_mask(pred.header(), mask);
    std::uint64_t np = 0, nq = 0;
    const std::vector<std::uint64_t> p = histogram(pred, ref, mask, params, np);
    const std::vector<std::uint64_t> q = histogram(ref, pred, mask, params, nq);
    if (np == 0 && nq == 0) return 1.0;
    if (np == 0 || nq == 0) return 0.0;
    // sum_k min(p_k / np, q_k / nq) on a common denominator, exact in integers
    std::uint64_t s = 0;
    for (std::size_t k = 0; k < params.bins; ++k) s += std::min(p[k] * nq, q[k] * np);
    return static_cast<double>(s) / (static_cast<double>(np) * static_cast<double>(nq));
}

void RasterAverager::add(const grid::Raster& r) {
    if (count_ == 0) {
        sum_ = grid::Raster(r.header(), 0.0);
        nodata_.assign(r.size(), 0);
    } else {
        grid::require_same_geometry(sum_.header(), r.header(), "ensemble case");
    }
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r.is_nodata(i)) {
            nodata_[i] = 1;
        } else {
            sum_[i] += r[i];
        }
    }
    ++count_;
}

grid::Raster RasterAverager::result() const {
    if (count_ == 0) throw ConfigError("ensemble_average: no cases");
    grid::Raster out = sum_;
    const double n = static_cast<double>(count_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = nodata_[i] ? out.nodata() : sum_[i] / n;
    return out;
}

grid::Raster ensemble_average(std::span<const grid::Raster> cases) {
    RasterAverager avg;
    for (const auto& c : cases) avg.add(c);
    return avg.result();
}

MetricsReport evaluate(const grid::Raster& pred, const grid::Raster& ref, const grid::BinaryRaster* ref_binary,
                       const grid::BinaryRaster* mask, const LshiParams& lshi_params, double ref_threshold) {
    grid::require_same_geometry(pred.header(), ref.header(), "reference");
    check_mask(pred.header(), mask);
    grid::BinaryRaster derived;
    if (!ref_binary) {
        derived = grid::make_binary_like(ref.header());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            derived[i] = !ref.is_nodata(i) && std::abs(ref[i]) >= ref_threshold ? 1 : 0;
        }
        ref_binary = &derived;
    }
    grid::require_same_geometry(pred.header(), ref_binary->header(), "binary reference");

    // IoU and LSHI use the same evaluated cells as RMSE.
    grid::BinaryRaster valid = grid::make_binary_like(pred.header());
    MetricsReport rep;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        valid[i] = usable(mask, i) && !pred.is_nodata(i) && !ref.is_nodata(i) ? 1 : 0;
        rep.n_valid += valid[i];
    }
    rep.rmse = rmse(pred, ref, &valid);
    const ThresholdIou t = best_threshold_iou(pred, *ref_binary, &valid);
    rep.iou = t.iou;
    rep.iou_best_threshold = t.threshold;
    rep.lshi = lshi(pred, ref, &valid, lshi_params);
    return rep;
}

}  // namespace dfsim::metrics
