// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: acceptance [--allow name]... [name-substring ...]
// --allow keeps the exit status at 0 when that criterion fails; its FAIL line is still printed.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dfsim/cli/app.hpp"
#include "dfsim/cli/json_io.hpp"
#include "dfsim/common/random.hpp"
#include "dfsim/grid/ascii_grid.hpp"
#include "dfsim/grid/synthetic.hpp"
#include "dfsim/metrics/metrics.hpp"
#include "dfsim/scenario/scenario.hpp"
#include "dfsim/sim/physics.hpp"
#include "dfsim/sim/solver.hpp"
#include "dfsim/synth/corrupt.hpp"
#include "dfsim/synth/dataset.hpp"
#include "dfsim/synth/patch.hpp"

using namespace dfsim;
namespace fs = std::filesystem;

namespace {

struct Result {
    bool pass;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

grid::GridHeader header(std::size_t rows, std::size_t cols, double cellsize = 1.0) {
    grid::GridHeader h;
    h.rows = rows;
    h.cols = cols;
    h.cellsize = cellsize;
    return h;
}

double uniform01(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

grid::Raster random_raster(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 gen(seed);
    grid::Raster r(header(rows, cols), 0.0);
    for (double& v : r.data()) v = lo + (hi - lo) * uniform01(gen);
    return r;
}

grid::BinaryRaster random_binary(std::size_t rows, std::size_t cols, std::uint64_t seed, double p) {
    std::mt19937_64 gen(seed);
    grid::BinaryRaster b(header(rows, cols), 0);
    for (auto& v : b.data()) v = uniform01(gen) < p;
    return b;
}

bool within_3_sigma(std::size_t count, std::size_t n, double p, double* z = nullptr) {
    const double mean = static_cast<double>(n) * p, sd = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
    const double dev = std::abs(static_cast<double>(count) - mean);
    if (z) *z = sd > 0 ? dev / sd : 0.0;
    return dev <= 3.0 * sd;
}

// ---------------------------------------------------------------------------

Result conservation() {
    const auto t0 = Clock::now();
    const auto dem = grid::valley_dem(64, 64, 5.0);
    sim::SupplySpec supply{{4, 32}, {{0.0, 0.0, 0.1}, {100.0, 2.0, 0.1}, {300.0, 0.0, 0.1}}};
    sim::SimParams p;
    sim::Simulation s(dem, {supply}, p);
    s.run_steps(2000);
    const auto l = s.ledger();
    const auto out = s.outputs();
    double eroded = 0.0, deposited = 0.0;
    for (double d : out.deformation.data()) (d < 0 ? eroded : deposited) += std::abs(d);
    const double secs = seconds_since(t0);
    const bool ok = l.water_closure() < 1e-6 && l.sediment_closure() < 1e-6 && secs < 30.0 && s.steps() == 2000;
    return {ok, fmt("water closure %.2e, sediment closure %.2e (< 1e-6), t = %.0f s simulated, outflow %.1f m3, "
                    "bed change -%.2f/+%.2f m summed, %.1f s wall (< 30 s)",
                    l.water_closure(), l.sediment_closure(), s.time(), l.water_outflow + l.sediment_outflow, eroded,
                    deposited, secs)};
}

Result lake_at_rest() {
    const auto bowl = grid::bowl_dem(64, 64, 5.0, 4.0);
    auto state = sim::FlowState::dry(bowl);
    const double level = 2.5;
    for (std::size_t i = 0; i < bowl.size(); ++i) state.h[i] = std::max(level - bowl[i], 0.0);
    const auto h0 = state.h;
    sim::Simulation s(state, {}, sim::SimParams{});
    s.run_steps(1000);
    double vmax = 0.0, dmax = 0.0;
    const auto out = s.outputs();
    for (std::size_t i = 0; i < bowl.size(); ++i) {
        vmax = std::max({vmax, std::abs(s.state().u[i]), std::abs(s.state().v[i])});
        dmax = std::max(dmax, std::abs(out.max_water_level[i] - h0[i]));
    }
    return {vmax < 1e-8 && dmax < 1e-10,
            fmt("1000 steps (t = %.0f s): max |u|,|v| = %.2e (< 1e-8), max |maxwl - h0| = %.2e (< 1e-10)", s.time(),
                vmax, dmax)};
}

Result dam_break() {
    const auto t0 = Clock::now();
    const std::size_t n = 400;
    const double dx = 1.0, h0 = 1.0;
    sim::SimParams p;
    p.friction = false;
    p.erosion = false;
    p.eps_diff = 0.0;
    auto state = sim::FlowState::dry(grid::Raster(header(1, n, dx), 0.0));
    for (std::size_t i = 0; i < n / 2; ++i) state.h[i] = h0;
    sim::Simulation s(state, {}, p);
    const double c0 = std::sqrt(p.g * h0);
    // the wet front (speed 2 c0) reaches the downstream end first
    const double t_boundary = 0.5 * n * dx / (2.0 * c0);
    s.run_until(0.6 * t_boundary);
    double err = 0.0, norm = 0.0;
    const double t = s.time();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = (static_cast<double>(i) + 0.5) * dx - 0.5 * n * dx;
        double exact = 0.0;
        if (x <= -c0 * t) {
            exact = h0;
        } else if (x < 2.0 * c0 * t) {
            exact = std::pow(2.0 * c0 - x / t, 2) / (9.0 * p.g);
        }
        err += std::pow(s.state().h[i] - exact, 2);
        norm += exact * exact;
    }
    const double rel = std::sqrt(err / norm), secs = seconds_since(t0);
    return {rel < 0.05 && secs < 10.0,
            fmt("relative L2 depth error %.4f (< 0.05) at t = %.3f s, %.2f s wall (< 10 s)", rel, t, secs)};
}

Result fluidization() {
    sim::SimParams p;
    p.sigma = 2.65;
    p.rho0 = 1.0;
    p.cstar0 = 0.6;
    p.gamma = 0.0;
    const auto m0 = sim::effective_medium(p);
    const bool identity = m0.rho == p.rho0 && m0.cstar == p.cstar0;
    p.gamma = 0.5;
    const auto m5 = sim::effective_medium(p);
    const bool worked = std::abs(m5.rho - 1.70714) < 1e-5 && std::abs(m5.cstar - 0.30) < 1e-12;
    bool monotone = true;
    sim::Medium prev{};
    const double gammas[] = {0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    for (std::size_t k = 0; k < std::size(gammas); ++k) {
        p.gamma = gammas[k];
        const auto m = sim::effective_medium(p);
        if (k > 0 && !(m.rho > prev.rho && m.cstar < prev.cstar)) monotone = false;
        prev = m;
    }
    return {identity && worked && monotone,
            fmt("gamma 0 identity %s; gamma 0.5: rho = %.6f, C* = %.4f; monotone over ten gammas %s",
                identity ? "exact" : "BROKEN", m5.rho, m5.cstar, monotone ? "yes" : "no")};
}

metrics::ThresholdIou sweep_oracle(const grid::Raster& pred, const grid::BinaryRaster& ref) {
    std::set<double> candidates;
    for (double v : pred.data()) {
        if (std::abs(v) > 0.0) candidates.insert(std::abs(v));
    }
    if (candidates.empty()) candidates.insert(0.0);
    metrics::ThresholdIou best{-1.0, 0.0};
    for (double t : candidates) {
        std::size_t inter = 0, uni = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const bool p = std::abs(pred[i]) >= t && std::abs(pred[i]) > 0.0;
            inter += p && ref[i];
            uni += p || ref[i];
        }
        const double s = uni == 0 ? 1.0 : double(inter) / double(uni);
        if (s > best.iou) best = {s, t};
    }
    return best;
}

Result metric_identities() {
    const auto x = random_raster(20, 20, 1, -3.0, 3.0);
    const bool rmse0 = metrics::rmse(x, x) == 0.0;
    const auto a = random_binary(20, 20, 2, 0.4);
    grid::BinaryRaster left(header(8, 8), 0), right = left;
    for (std::size_t i = 0; i < 64; ++i) ((i % 8) < 4 ? left : right)[i] = 1;
    const bool iou_ok = metrics::iou(a, a) == 1.0 && metrics::iou(left, right) == 0.0;
    const bool lshi_self = metrics::lshi(x, x) == 1.0;
    // 100 values at 1 against 50 at 1 and 50 at 10: overlap is one of two bins.
    grid::Raster ones(header(10, 10), 1.0), mixed = ones;
    for (std::size_t i = 50; i < 100; ++i) mixed[i] = 10.0;
    const double two_bin = metrics::lshi(ones, mixed);
    std::size_t agree = 0;
    for (std::uint64_t k = 0; k < 50; ++k) {
        const auto pred = random_raster(12, 12, 100 + k, -1.0, 1.0);
        const auto ref = random_binary(12, 12, 200 + k, 0.3);
        const auto got = metrics::best_threshold_iou(pred, ref);
        const auto want = sweep_oracle(pred, ref);
        agree += got.iou == want.iou && got.threshold == want.threshold;
    }
    return {rmse0 && iou_ok && lshi_self && two_bin == 0.5 && agree == 50,
            fmt("rmse(x,x)=0 %s, iou same=1/disjoint=0 %s, lshi(x,x)=1 %s, two-bin lshi = %.17g, "
                "best-threshold IoU matches sweep on %zu/50",
                rmse0 ? "ok" : "no", iou_ok ? "ok" : "no", lshi_self ? "ok" : "no", two_bin, agree)};
}

Result sampling() {
    grid::Raster prob(header(100, 100), 0.0);
    std::size_t inside = 0, stable = 0, total = 0;
    double worst = 0.0;
    for (double p : {0.1, 0.5, 0.9}) {
        std::fill(prob.data().begin(), prob.data().end(), p);
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            ++total;
            const auto pts = scenario::sample_initiation_points(prob, seed);
            double z = 0.0;
            inside += within_3_sigma(pts.size(), prob.size(), p, &z);
            worst = std::max(worst, z);
            // Same seed twice, and the documented rule u_i < p_i cell by cell.
            std::vector<grid::CellIndex> direct;
            const CounterRng rng(seed, RandomStream::InitiationPoints);
            for (std::size_t i = 0; i < prob.size(); ++i) {
                if (rng.uniform(i) < p) direct.push_back({i / 100, i % 100});
            }
            stable += scenario::sample_initiation_points(prob, seed) == pts && pts == direct;
        }
    }
    // Calibration: how often the same generator leaves 3 sigma over many seeds.
    std::size_t tail = 0, trials = 0;
    for (double p : {0.1, 0.5, 0.9}) {
        for (std::uint64_t seed = 1; seed <= 2000; ++seed, ++trials) {
            const CounterRng rng(seed, RandomStream::InitiationPoints);
            std::size_t k = 0;
            for (std::size_t i = 0; i < 10000; ++i) k += rng.uniform(i) < p;
            tail += !within_3_sigma(k, 10000, p);
        }
    }
    const double family = 1.0 - std::pow(1.0 - 0.0027, static_cast<double>(total));
    return {inside == total && stable == total,
            fmt("%zu/%zu counts within 3 sigma (worst %.2f sigma), %zu/%zu bit-stable and matching u_i < p_i; "
                "outside-3-sigma rate over %zu seed/p pairs %.4f (binomial 0.0027), chance of at least one of %zu "
                "outside %.2f",
                inside, total, worst, stable, total, trials, static_cast<double>(tail) / static_cast<double>(trials),
                total, family)};
}

grid::BinaryRaster erode_oracle(const grid::BinaryRaster& m, long radius) {
    grid::BinaryRaster out = m;
    const long rows = static_cast<long>(m.rows()), cols = static_cast<long>(m.cols());
    for (long r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) {
            std::uint8_t v = 1;
            for (long dr = -radius; dr <= radius; ++dr) {
                for (long dc = -radius; dc <= radius; ++dc) {
                    const long rr = r + dr, cc = c + dc;
                    if (rr < 0 || cc < 0 || rr >= rows || cc >= cols || !m(rr, cc)) v = 0;
                }
            }
            out(r, c) = v;
        }
    }
    return out;
}

Result binarization() {
    std::size_t identity = 0;
    for (std::uint64_t k = 0; k < 20; ++k) {
        auto target = random_raster(40, 40, 300 + k, -1.0, 1.0);
        target[k] = target.nodata();
        const auto want = synth::threshold_truth(target, 0.1);
        const auto got = synth::corrupted_change_map(target, nullptr, synth::CorruptionParams::none(0.1), k);
        synth::DatasetOptions opt;
        opt.corruption = synth::CorruptionParams::none(0.1);
        opt.patch = 8;
        opt.stride = 8;
        const auto slope = random_raster(40, 40, 400 + k, 0.0, 1.0);
        const auto patches = synth::synth_case(k, target, slope, nullptr, opt);
        const auto plain = synth::patchify(want, slope, target, 8, 8, k);
        bool same = patches.size() == plain.size();
        for (std::size_t i = 0; same && i < patches.size(); ++i) {
            same = patches[i].input == plain[i].input && patches[i].target == plain[i].target;
        }
        identity += got == want && same;
    }

    std::size_t eroded = 0;
    for (std::uint64_t k = 0; k < 100; ++k) {
        const auto m = random_binary(32, 32, 500 + k, 0.2 + 0.006 * static_cast<double>(k));
        const std::size_t radius = 1 + k % 3;
        eroded += synth::erode(m, radius, 1) == erode_oracle(m, static_cast<long>(radius));
    }

    std::size_t fp_ok = 0, fp_total = 0;
    double worst = 0.0;
    for (double rate : {0.01, 0.05, 0.2}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto base = random_binary(100, 100, 700 + seed, 0.3);
            const auto noisy = synth::add_false_positives(base, rate, seed);
            std::size_t zeros = 0, flipped = 0;
            bool kept = true;
            for (std::size_t i = 0; i < base.size(); ++i) {
                if (base[i]) {
                    kept = kept && noisy[i];
                } else {
                    ++zeros;
                    flipped += noisy[i];
                }
            }
            double z = 0.0;
            fp_ok += kept && within_3_sigma(flipped, zeros, rate, &z);
            worst = std::max(worst, z);
            ++fp_total;
        }
    }
    return {identity == 20 && eroded == 100 && fp_ok == fp_total,
            fmt("zero corruption reproduces threshold_truth (and plain patches) %zu/20; erosion matches per-cell min "
                "%zu/100; false positives within 3 sigma %zu/%zu (worst %.2f sigma)",
                identity, eroded, fp_ok, fp_total, worst)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

bool same_tree(const fs::path& a, const fs::path& b, std::size_t& files) {
    std::vector<fs::path> fa, fb;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
    }
    for (const auto& e : fs::recursive_directory_iterator(b)) {
        if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
    }
    std::sort(fa.begin(), fa.end());
    std::sort(fb.begin(), fb.end());
    files = fa.size();
    if (fa != fb) return false;
    for (const auto& f : fa) {
        if (slurp(a / f) != slurp(b / f)) return false;
    }
    return true;
}

int dfsim(std::vector<std::string> args) {
    args.insert(args.begin(), "dfsim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code != 0) std::cerr << err.str();
    return code;
}

Result end_to_end() {
    const auto t0 = Clock::now();
    const fs::path config = fs::path(DFSIM_SOURCE_DIR) / "data" / "demo" / "config.json";
    const fs::path root = fs::temp_directory_path() / "dfsim_acceptance_e2e";
    fs::remove_all(root);
    const fs::path w1 = root / "w1", w8 = root / "w8";
    for (const auto& [dir, workers] : {std::pair{w1, "1"}, std::pair{w8, "8"}}) {
        if (dfsim({"ensemble", "--config", config.string(), "--workers", workers, "--out", dir.string()}) != 0 ||
            dfsim({"synth-dataset", "--config", config.string(), "--workers", workers, "--out", dir.string()}) != 0) {
            return {false, "a command failed"};
        }
    }
    std::size_t case_dirs = 0;
    for (const auto& e : fs::directory_iterator(w1 / "cases")) case_dirs += e.is_directory();
    const auto avg = grid::read_ascii_grid(w1 / "average" / "gamma_0_maxwl.asc");
    const bool average_ok = avg.rows() == 256 && avg.cols() == 256;

    const auto m = io::read_json_file(w1 / "dataset" / "manifest.json");
    const std::size_t per_case = synth::patch_count(256, 256, m["patch"], m["stride"]);
    bool counts_ok = true;
    std::size_t records = 0;
    for (const auto& [var, splits] : m["files"].items()) {
        for (const char* split : {"train", "test"}) {
            const auto file = synth::read_patch_file(w1 / "dataset" / splits[split]["file"].get<std::string>());
            const std::size_t ncases = m["cases"][split].size();
            counts_ok = counts_ok && file.samples.size() == splits[split]["patches"].get<std::size_t>() &&
                        file.samples.size() == ncases * per_case;
            records += file.samples.size();
        }
    }
    counts_ok = counts_ok && m["split"]["train"].get<std::size_t>() + m["split"]["test"].get<std::size_t>() == 10;
    std::size_t files = 0;
    const bool identical = same_tree(w1, w8, files);
    const double secs = seconds_since(t0);
    fs::remove_all(root);
    return {case_dirs == 10 && average_ok && counts_ok && identical && secs < 300.0,
            fmt("%zu case dirs, average grid %s, %zu patch records consistent with manifest %s, workers 1 vs 8 "
                "identical over %zu files %s, %.0f s wall for both runs (< 300 s)",
                case_dirs, average_ok ? "ok" : "missing", records, counts_ok ? "yes" : "no", files,
                identical ? "yes" : "no", secs)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Result()>>> checks = {
        {"conservation", conservation},
        {"lake_at_rest", lake_at_rest},
        {"dam_break", dam_break},
        {"fluidization", fluidization},
        {"metric_identities", metric_identities},
        {"sampling_statistics", sampling},
        {"binarization_pipeline", binarization},
        {"end_to_end", end_to_end},
    };
    std::vector<std::string> filters;
    std::set<std::string> allowed;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--allow" && i + 1 < argc) {
            allowed.insert(argv[++i]);
        } else {
            filters.push_back(a);
        }
    }
    int failed = 0;
    for (const auto& [name, fn] : checks) {
        if (!filters.empty() &&
            std::none_of(filters.begin(), filters.end(), [&](const auto& f) { return name.find(f) != std::string::npos; })) {
            continue;
        }
        Result r;
        try {
            r = fn();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        const bool allow = !r.pass && allowed.count(name);
        std::cout << (r.pass ? "PASS " : "FAIL ") << name << ": " << r.detail << (allow ? " [allowed failure]" : "")
                  << std::endl;
        failed += !r.pass && !allow;
    }
    return failed == 0 ? 0 : 1;
}
