#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"

#include "dfsim/common/random.hpp"
#include "dfsim/grid/synthetic.hpp"
#include "dfsim/grid/terrain.hpp"
#include "dfsim/scenario/logistic.hpp"
#include "dfsim/scenario/scenario.hpp"
#include "test_util.hpp"

using namespace dfsim;
using namespace dfsim::scenario;
using dfsim::test::header;

namespace {

double oracle_loss(const std::vector<double>& x, const std::vector<std::uint8_t>& y, double w1, double w2,
                   double b) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double z = w1 * x[2 * i] + w2 * x[2 * i + 1] + b;
        const double p = 1.0 / (1.0 + std::exp(-z));
        s -= y[i] ? std::log(p) : std::log(1.0 - p);
    }
    return s / static_cast<double>(y.size());
}

}  // namespace

TEST_CASE("counter generator matches the reference SplitMix64 sequence") {
    // first output of SplitMix64 seeded with 0
    CHECK(splitmix64_mix(kGoldenGamma) == 0xE220A8397B1DCDAFULL);
    const std::uint64_t seed = 12345;
    const CounterRng rng(seed, RandomStream::InitiationPoints);
    std::uint64_t state = splitmix64_mix(seed ^ (1ULL * kGoldenGamma));
    for (std::uint64_t i = 0; i < 100; ++i) {
        state += kGoldenGamma;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        z ^= z >> 31;
        CHECK(rng.bits(i) == z);
        CHECK(rng.uniform(i) == static_cast<double>(z >> 11) / 9007199254740992.0);
    }
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const auto k = rng.uniform_int(i, 3, 9);
        CHECK(k >= 3);
        CHECK(k <= 9);
    }
}

TEST_CASE("fit_logistic: separable one-feature data") {
    std::vector<double> x;
    std::vector<std::uint8_t> y;
    for (int i = -10; i <= 10; ++i) {
        if (i == 0) continue;
        x.push_back(i * 0.5 + (i > 0 ? 1.0 : -1.0));
        y.push_back(i > 0 ? 1 : 0);
    }
    FitOptions opt;
    opt.max_iterations = 2000;
    const FitResult r = fit_logistic(x, y, 1, opt);
    CHECK(r.model.weights[0] > 0.0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < y.size(); ++i) correct += (r.model.probability(&x[i]) >= 0.5) == (y[i] == 1);
    CHECK(correct == y.size());
}

TEST_CASE("fit_logistic: uninformative symmetric feature") {
    // every feature value carries one positive and one negative label
    std::vector<double> x;
    std::vector<std::uint8_t> y;
    for (int i = 0; i < 10; ++i) {
        x.insert(x.end(), {double(i), double(i)});
        y.insert(y.end(), {0, 1});
    }
    const FitResult r = fit_logistic(x, y, 1);
    CHECK(std::abs(r.model.weights[0]) < 1e-9);
    CHECK(std::abs(r.model.bias) < 1e-9);
    const double v = 3.0;
    CHECK(r.model.probability(&v) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("fit_logistic: matches a parameter grid search on two features") {
    const std::vector<double> x = {0.1, 1.2, 0.8, 0.3, 1.5, 2.0, 0.4, 0.9, 1.1, 1.7,
                                   0.2, 0.1, 1.9, 0.6, 0.7, 1.4, 1.3, 0.5, 0.6, 1.0};
    const std::vector<std::uint8_t> y = {0, 0, 1, 0, 1, 1, 0, 1, 0, 1};
    FitOptions opt;
    opt.record_loss = true;
    const FitResult r = fit_logistic(x, y, 2, opt);
    CHECK(r.grad_norm < 1e-6);
    CHECK(mean_cross_entropy(r.model, x, y) == doctest::Approx(r.loss).epsilon(1e-12));

    // coarse-to-fine search in raw coordinates
    double cw1 = 0, cw2 = 0, cb = 0, span = 16.0, best = 1e300;
    for (int level = 0; level < 7; ++level) {
        double bw1 = cw1, bw2 = cw2, bb = cb;
        const int n = 20;
        for (int i = -n; i <= n; ++i)
            for (int j = -n; j <= n; ++j)
                for (int k = -n; k <= n; ++k) {
                    const double w1 = cw1 + span * i / n, w2 = cw2 + span * j / n, b = cb + span * k / n;
                    const double l = oracle_loss(x, y, w1, w2, b);
                    if (l < best) {
                        best = l;
                        bw1 = w1;
                        bw2 = w2;
                        bb = b;
                    }
                }
        cw1 = bw1;
        cw2 = bw2;
        cb = bb;
        span /= 4.0;
    }
    CHECK(std::abs(r.loss - best) < 1e-4);
    CHECK(r.loss <= best + 1e-12);

    SUBCASE("loss is non-increasing") {
        for (std::size_t i = 1; i < r.loss_history.size(); ++i) {
            REQUIRE(r.loss_history[i] <= r.loss_history[i - 1] + 1e-15);
        }
    }
}

TEST_CASE("fit_logistic: degenerate labels") {
    const std::vector<double> x = {1, 2, 3};
    CHECK_THROWS_AS(fit_logistic(x, {1, 1, 1}, 1), ConfigError);
    CHECK_THROWS_AS(fit_logistic(x, {0, 0, 0}, 1), ConfigError);
    CHECK_THROWS_AS(fit_logistic(x, {0, 1}, 1), ConfigError);
}

TEST_CASE("predict_probability") {
    const grid::Raster dem = grid::synthetic_catchment(24, 20, 5.0, 3);
    const grid::TerrainFeatures f = grid::terrain_features(dem);
    LogisticModel null{{0, 0, 0, 0}, 0.0, {0, 0, 0, 0}, {1, 1, 1, 1}};
    for (double p : test::values_of(predict_probability(null, f))) CHECK(p == 0.5);

    LogisticModel sat = null;
    sat.bias = 50.0;
    for (double p : test::values_of(predict_probability(sat, f))) CHECK(std::abs(p - 1.0) < 1e-10);

    LogisticModel m{{1.3, -0.4, 20.0, -7.0}, -0.6, {0.3, 2.0, 0.0, 0.01}, {0.2, 1.5, 0.05, 0.03}};
    const grid::Raster p = predict_probability(m, f);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double z = m.bias + 1.3 * (f.slope[i] - 0.3) / 0.2 - 0.4 * (std::log(1.0 + f.flow_accumulation[i]) - 2.0) / 1.5 +
                         20.0 * f.plan_curvature[i] / 0.05 - 7.0 * (f.tangential_curvature[i] - 0.01) / 0.03;
        CHECK(p[i] == doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-12));
    }

    grid::Raster holed = dem;
    holed(5, 5) = holed.nodata();
    const grid::Raster ph = predict_probability(m, grid::terrain_features(holed));
    CHECK(ph.is_nodata(5, 5));
    CHECK(ph.is_nodata(4, 4));
    CHECK(!ph.is_nodata(10, 10));

    LogisticModel bad = m;
    bad.stddev[2] = 0.0;
    CHECK_THROWS_AS(predict_probability(bad, f), ConfigError);
}

TEST_CASE("fit_logistic on terrain recovers the sign of a planted model") {
    const grid::Raster dem = grid::synthetic_catchment(40, 40, 5.0, 11);
    const grid::TerrainFeatures f = grid::terrain_features(dem);
    const LogisticModel truth{{2.0, 0.0, 0.0, 0.0}, -1.0, {0.5, 0, 0, 0}, {0.2, 1, 1, 1}};
    const grid::Raster p = predict_probability(truth, f);
    const CounterRng rng(99, RandomStream::DemoTerrain);
    grid::BinaryRaster labels = grid::make_binary_like(dem.header());
    for (std::size_t i = 0; i < p.size(); ++i) labels[i] = rng.uniform(i) < p[i];
    FitOptions opt;
    opt.max_iterations = 5000;
    const FitResult r = fit_logistic(f, labels, opt);
    CHECK(r.model.weights[0] > 0.5);
    CHECK(r.model.weights[0] > std::abs(r.model.weights[1]));
}

TEST_CASE("sample_initiation_points") {
    const grid::GridHeader h = header(100, 100, 5.0);
    CHECK(sample_initiation_points(grid::Raster(h, 0.0), 1).empty());
    CHECK(sample_initiation_points(grid::Raster(h, 1.0), 1).size() == h.size());

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto pts = sample_initiation_points(grid::Raster(h, 0.5), seed);
        CHECK(pts.size() >= 4850);
        CHECK(pts.size() <= 5150);
        CHECK(std::is_sorted(pts.begin(), pts.end()));
        CHECK(pts == sample_initiation_points(grid::Raster(h, 0.5), seed));
    }

    SUBCASE("monotone coupling") {
        const grid::Raster lo = test::random_raster(50, 40, 7, 0.0, 0.5);
        grid::Raster hi = lo;
        for (std::size_t i = 0; i < hi.size(); i += 3) hi[i] = std::min(1.0, hi[i] + 0.3);
        const auto a = sample_initiation_points(lo, 77);
        const auto b = sample_initiation_points(hi, 77);
        CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
    }
    SUBCASE("nodata and eligibility") {
        grid::Raster p(header(4, 4), 1.0);
        p(1, 1) = p.nodata();
        grid::BinaryRaster eligible = grid::make_binary_like(p.header(), 1);
        eligible(2, 3) = 0;
        const auto pts = sample_initiation_points(p, 5, &eligible);
        CHECK(pts.size() == 14);
        CHECK(std::find(pts.begin(), pts.end(), grid::CellIndex{1, 1}) == pts.end());
        CHECK(std::find(pts.begin(), pts.end(), grid::CellIndex{2, 3}) == pts.end());
    }
    SUBCASE("selection is the documented uniform comparison") {
        const grid::Raster p = test::random_raster(30, 30, 8);
        const CounterRng rng(4242, RandomStream::InitiationPoints);
        std::vector<grid::CellIndex> expect;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (rng.uniform(i) < p[i]) expect.push_back({i / 30, i % 30});
        }
        CHECK(sample_initiation_points(p, 4242) == expect);
    }
}

TEST_CASE("seeds 1..60 give pairwise distinct point sets") {
    const grid::Raster dem = grid::synthetic_catchment(64, 64, 5.0, 1);
    const grid::TerrainFeatures f = grid::terrain_features(dem);
    const LogisticModel m{{1.5, 0.5, 0.0, 0.0}, -5.0, {0.4, 2.0, 0, 0}, {0.2, 1.0, 1, 1}};
    const grid::Raster p = predict_probability(m, f);
    std::set<std::vector<grid::CellIndex>> seen;
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        auto pts = sample_initiation_points(p, seed);
        CHECK(!pts.empty());
        seen.insert(std::move(pts));
    }
    CHECK(seen.size() == 60);
}

TEST_CASE("slope_mask") {
    grid::Raster slope(header(1, 4), 0.0);
    slope[0] = 0.2;
    slope[1] = 15.0 * std::acos(-1.0) / 180.0;
    slope[2] = 0.5;
    slope[3] = slope.nodata();
    const grid::BinaryRaster m = slope_mask(slope, 15.0);
    CHECK(m.data() == std::vector<std::uint8_t>{0, 1, 1, 0});
}

TEST_CASE("build_scenario") {
    SupplyTemplate t;
    t.peak_discharge = 5.0;
    t.rise_time = 100.0;
    t.duration = 600.0;
    const Scenario empty = build_scenario({}, 0.1, t, 3);
    CHECK(empty.supplies.empty());
    CHECK(empty.gamma == 0.1);
    CHECK(empty.seed == 3);

    const Scenario one = build_scenario({{2, 3}}, 0.2, t, 4);
    REQUIRE(one.supplies.size() == 1);
    CHECK(one.supplies[0].cell == grid::CellIndex{2, 3});
    CHECK(one.supplies[0].total_volume() == doctest::Approx(1500.0).epsilon(1e-15));
    CHECK(one.supplies[0].discharge_at(100.0) == 5.0);
    CHECK(one.supplies[0].discharge_at(600.0) == 0.0);

    t.rise_time = 700.0;
    CHECK_THROWS_AS(build_scenario({{0, 0}}, 0.0, t), ConfigError);
}
