#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "dfsim/changedet/changedet.hpp"
#include "dfsim/cli/app.hpp"
#include "dfsim/cli/config.hpp"
#include "dfsim/cli/json_io.hpp"
#include "dfsim/cli/pipeline.hpp"
#include "dfsim/common/random.hpp"
#include "dfsim/grid/ascii_grid.hpp"
#include "dfsim/grid/synthetic.hpp"
#include "dfsim/metrics/metrics.hpp"
#include "dfsim/synth/corrupt.hpp"
#include "dfsim/synth/patch.hpp"
#include "test_util.hpp"

using namespace dfsim;
namespace fs = std::filesystem;
using io::json;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "dfsim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Every regular file under `a` exists under `b` with the same bytes, and vice versa.
bool same_tree(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> fa, fb;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
    }
    for (const auto& e : fs::recursive_directory_iterator(b)) {
        if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
    }
    std::sort(fa.begin(), fa.end());
    std::sort(fb.begin(), fb.end());
    if (fa != fb || fa.empty()) return false;
    for (const auto& f : fa) {
        if (slurp(a / f) != slurp(b / f)) return false;
    }
    return true;
}

constexpr std::size_t kRows = 24, kCols = 16;

// Small valley with a uniform initiation probability and a short hydrograph.
json base_config() {
    return {{"dem", "dem.asc"},
            {"probability", "prob.asc"},
            {"seeds", {1, 2}},
            {"gammas", {0.0}},
            {"duration", 40.0},
            {"slope_mask_deg", 0.0},
            {"supply_template", {{"peak_discharge", 0.5}, {"rise_time", 10.0}, {"duration", 30.0}}},
            {"corruption", {{"mask_vegetation", false}, {"cutout_min", 2}, {"cutout_max", 4}}},
            {"dataset", {{"patch", 8}, {"stride", 8}}}};
}

fs::path fixture(const std::string& name, const json& cfg, double p = 0.02) {
    const auto dir = test::scratch_dir(name);
    const auto dem = grid::valley_dem(kRows, kCols, 5.0);
    grid::write_ascii_grid(dem, dir / "dem.asc");
    grid::write_ascii_grid(grid::Raster(dem.header(), p), dir / "prob.asc");
    io::write_json_file(cfg, dir / "config.json");
    return dir;
}

}  // namespace

TEST_CASE("simulate writes the case files with the config hash") {
    const auto dir = fixture("simulate", base_config());
    const auto r = invoke({"simulate", "--config", (dir / "config.json").string(), "--out", (dir / "run").string()});
    REQUIRE(r.code == 0);
    for (const char* f : {"maxwl.asc", "deform.asc", "ledger.json", "scenario.json"}) CHECK(fs::exists(dir / "run" / f));

    // simulate narrows the seed and gamma lists to the case it ran.
    auto effective = cli::load_config(dir / "config.json");
    effective.seeds = {1};
    effective.gammas = {0.0};
    const auto hash = cli::config_hash(effective);
    const auto ledger = io::read_json_file(dir / "run" / "ledger.json");
    CHECK(ledger["config_hash"] == hash);
    CHECK(io::read_json_file(dir / "run" / "scenario.json")["config_hash"] == hash);
    CHECK(ledger["water"]["closure"].get<double>() < 1e-9);
    CHECK(ledger["sediment"]["closure"].get<double>() < 1e-9);
    CHECK(ledger["water"]["injected"].get<double>() > 0.0);
}

TEST_CASE("simulate --duration 0 gives zero grids") {
    const auto dir = fixture("simulate_zero", base_config());
    const auto r = invoke({"simulate", "--config", (dir / "config.json").string(), "--duration", "0", "--out",
                           (dir / "run").string()});
    REQUIRE(r.code == 0);
    for (const char* f : {"maxwl.asc", "deform.asc"}) {
        const auto g = grid::read_ascii_grid(dir / "run" / f);
        CHECK(std::all_of(g.data().begin(), g.data().end(), [](double v) { return v == 0.0; }));
    }
}

TEST_CASE("simulate is byte-identical across runs and replays its scenario") {
    const auto dir = fixture("simulate_twice", base_config());
    const auto cfg = (dir / "config.json").string();
    REQUIRE(invoke({"simulate", "--config", cfg, "--out", (dir / "a").string()}).code == 0);
    REQUIRE(invoke({"simulate", "--config", cfg, "--out", (dir / "b").string()}).code == 0);
    CHECK(same_tree(dir / "a", dir / "b"));

    REQUIRE(invoke({"simulate", "--config", cfg, "--scenario", (dir / "a" / "scenario.json").string(), "--out",
                    (dir / "c").string()})
                .code == 0);
    CHECK(slurp(dir / "a" / "maxwl.asc") == slurp(dir / "c" / "maxwl.asc"));
    CHECK(slurp(dir / "a" / "deform.asc") == slurp(dir / "c" / "deform.asc"));
}

TEST_CASE("simulate --max-level surface records surface elevation") {
    const auto dir = fixture("simulate_surface", base_config(), 0.05);
    const auto cfg = (dir / "config.json").string();
    REQUIRE(invoke({"simulate", "--config", cfg, "--out", (dir / "d").string()}).code == 0);
    REQUIRE(invoke({"simulate", "--config", cfg, "--max-level", "surface", "--out", (dir / "s").string()}).code == 0);
    const auto depth = grid::read_ascii_grid(dir / "d" / "maxwl.asc");
    const auto surf = grid::read_ascii_grid(dir / "s" / "maxwl.asc");
    const auto dem = grid::read_ascii_grid(dir / "dem.asc");
    std::size_t wet = 0;
    for (std::size_t i = 0; i < depth.size(); ++i) {
        if (surf.is_nodata(i)) {
            CHECK(depth[i] < 1e-4);  // never above the dry threshold
            continue;
        }
        ++wet;
        CHECK(surf[i] >= dem[i]);
        CHECK(surf[i] <= dem[i] + depth[i] + 1.0);
    }
    CHECK(wet > 0);
    CHECK(invoke({"simulate", "--config", cfg, "--max-level", "peak", "--out", (dir / "x").string()}).code == 2);
}

TEST_CASE("ensemble: 2 seeds x 2 gammas, independent of worker count") {
    json cfg = base_config();
    cfg["gammas"] = {0.0, 0.5};
    const auto dir = fixture("ensemble", cfg);
    const auto c = (dir / "config.json").string();
    const auto r1 = invoke({"ensemble", "--config", c, "--workers", "1", "--out", (dir / "w1").string()});
    REQUIRE(r1.code == 0);
    const auto r4 = invoke({"ensemble", "--config", c, "--workers", "4", "--out", (dir / "w4").string()});
    REQUIRE(r4.code == 0);

    std::size_t case_dirs = 0;
    for (const auto& e : fs::directory_iterator(dir / "w1" / "cases")) case_dirs += e.is_directory();
    CHECK(case_dirs == 4);
    for (const char* name : {"case_1_0", "case_1_0.5", "case_2_0", "case_2_0.5"}) {
        CHECK(fs::exists(dir / "w1" / "cases" / name / "maxwl.asc"));
    }
    CHECK(fs::exists(dir / "w1" / "average" / "gamma_0_maxwl.asc"));
    CHECK(fs::exists(dir / "w1" / "average" / "gamma_0.5_deform.asc"));
    CHECK(same_tree(dir / "w1", dir / "w4"));

    const auto summary = io::read_json_file(dir / "w1" / "summary.json");
    CHECK(summary["failures"] == 0);
    CHECK(summary["cases"].size() == 4);

    // The per-gamma average is the library average of the case grids.
    std::vector<grid::Raster> cases{grid::read_ascii_grid(dir / "w1" / "cases" / "case_1_0.5" / "maxwl.asc"),
                                    grid::read_ascii_grid(dir / "w1" / "cases" / "case_2_0.5" / "maxwl.asc")};
    CHECK(grid::read_ascii_grid(dir / "w1" / "average" / "gamma_0.5_maxwl.asc") == metrics::ensemble_average(cases));
}

TEST_CASE("ensemble isolates failing cases and exits 3") {
    // One probability-0.5 cell on a nodata DEM cell: seeds that pick it fail.
    json cfg = base_config();
    cfg["seeds"] = {1, 2, 3, 4, 5, 6, 7, 8};
    const auto dir = fixture("ensemble_fail", cfg);
    auto dem = grid::read_ascii_grid(dir / "dem.asc");
    const std::size_t bad = 5 * kCols + 8;
    dem[bad] = dem.nodata();
    grid::write_ascii_grid(dem, dir / "dem.asc");
    grid::Raster prob(dem.header(), 0.0);
    prob[bad] = 0.5;
    grid::write_ascii_grid(prob, dir / "prob.asc");

    const auto r = invoke({"ensemble", "--config", (dir / "config.json").string(), "--out", (dir / "o").string()});
    CHECK(r.code == 3);
    const auto summary = io::read_json_file(dir / "o" / "summary.json");
    std::size_t failed = 0;
    json seeds_ok = json::array();
    for (std::uint64_t s = 1; s <= 8; ++s) {
        const bool picks = CounterRng(s, RandomStream::InitiationPoints).uniform(bad) < 0.5;
        const auto& c = summary["cases"][s - 1];
        CHECK(c["ok"] == !picks);
        CHECK(fs::exists(dir / "o" / "cases" / cli::case_dir_name(s, 0.0)) == !picks);
        failed += picks;
        if (!picks) seeds_ok.push_back(s);
    }
    REQUIRE(failed > 0);
    REQUIRE(failed < 8);
    CHECK(summary["failures"] == failed);
    CHECK(io::read_json_file(dir / "o" / "average" / "manifest.json")["averages"][0]["seeds"] == seeds_ok);
    CHECK(r.err.find("FAILED") != std::string::npos);
}

TEST_CASE("split_cases") {
    cli::DatasetConfig d;
    d.train_cases = 40;
    CHECK(cli::split_cases(60, d).train == 40);
    CHECK(cli::split_cases(60, d).test == 20);
    d.train_cases = 70;
    CHECK(cli::split_cases(100, d).test == 30);
    CHECK_THROWS_AS(cli::split_cases(60, d), ConfigError);
    d = {};
    CHECK(cli::split_cases(60, d).train == 40);
    d.train_all = true;
    CHECK(cli::split_cases(60, d).test == 0);
}

TEST_CASE("synth-dataset splits cases in seed order") {
    json cfg = base_config();
    cfg["seeds"] = {3, 1, 2};
    cfg["gammas"] = {0.0, 0.5};
    const auto dir = fixture("dataset", cfg, 0.05);
    const auto c = (dir / "config.json").string();
    const auto out = (dir / "o").string();

    CHECK(invoke({"synth-dataset", "--config", c, "--out", out}).code == 2);  // no cases yet

    REQUIRE(invoke({"ensemble", "--config", c, "--out", out}).code == 0);
    const auto r = invoke({"synth-dataset", "--config", c, "--train", "4", "--out", out});
    REQUIRE(r.code == 0);
    const auto m = io::read_json_file(dir / "o" / "dataset" / "manifest.json");
    CHECK(m["split"]["train"] == 4);
    CHECK(m["split"]["test"] == 2);
    auto effective = cli::load_config(c);
    effective.dataset.train_cases = 4;
    CHECK(m["config_hash"] == cli::config_hash(effective));
    const std::vector<std::string> order{"case_3_0", "case_3_0.5", "case_1_0", "case_1_0.5"};
    for (std::size_t i = 0; i < order.size(); ++i) CHECK(m["cases"]["train"][i]["case"] == order[i]);
    CHECK(m["cases"]["test"][0]["case"] == "case_2_0");

    const std::size_t per_case = synth::patch_count(kRows, kCols, 8, 8);
    const auto train = synth::read_patch_file(dir / "o" / "dataset" / "train_maxwl.tsp1");
    const auto test = synth::read_patch_file(dir / "o" / "dataset" / "test_deform.tsp1");
    CHECK(train.samples.size() == 4 * per_case);
    CHECK(test.samples.size() == 2 * per_case);
    CHECK(m["files"]["maxwl"]["train"]["patches"] == 4 * per_case);
    CHECK(test.samples.front().case_id == 4);

    const auto all = invoke({"synth-dataset", "--config", c, "--train", "all", "--out", out});
    REQUIRE(all.code == 0);
    CHECK(all.err.find("warning") != std::string::npos);
    CHECK(synth::read_patch_file(dir / "o" / "dataset" / "test_maxwl.tsp1").samples.empty());
}

TEST_CASE("configuration errors exit 2") {
    auto bad = [](const std::string& name, json cfg) {
        const auto dir = fixture(name, cfg);
        return invoke({"simulate", "--config", (dir / "config.json").string(), "--out", (dir / "o").string()}).code;
    };
    json cfg = base_config();
    cfg["typo"] = 1;
    CHECK(bad("cfg_unknown", cfg) == 2);
    cfg = base_config();
    cfg["sim"] = {{"manning", 0.03}};
    CHECK(bad("cfg_unknown_sim", cfg) == 2);
    cfg = base_config();
    cfg["sim"] = {{"cfl", "fast"}};
    CHECK(bad("cfg_type", cfg) == 2);
    cfg = base_config();
    cfg["seed_range"] = {{"first", 1}, {"count", 2}};
    CHECK(bad("cfg_seeds_twice", cfg) == 2);
    cfg = base_config();
    cfg["dem"] = "missing.asc";
    CHECK(bad("cfg_missing_dem", cfg) == 2);
    cfg = base_config();
    cfg["weights"] = "w.json";
    CHECK(bad("cfg_two_sources", cfg) == 2);
    cfg = base_config();
    cfg["gammas"] = {1.5};
    CHECK(bad("cfg_gamma", cfg) == 2);

    const auto dir = test::scratch_dir("cfg_syntax");
    std::ofstream(dir / "config.json") << "{ \"dem\": ";
    CHECK(invoke({"simulate", "--config", (dir / "config.json").string()}).code == 2);
    CHECK(invoke({"simulate", "--config", (dir / "none.json").string()}).code == 2);
    CHECK(invoke({"simulate"}).code == 2);
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"simulate", "--bogus"}).code == 2);
    CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("config hash tracks result-relevant fields") {
    const auto dir = fixture("hash", base_config());
    auto a = cli::load_config(dir / "config.json");
    auto b = a;
    b.workers = 7;
    b.out = "elsewhere";
    CHECK(cli::config_hash(a) == cli::config_hash(b));
    b.sim.manning_n = 0.04;
    CHECK(cli::config_hash(a) != cli::config_hash(b));
    CHECK(cli::config_hash(a).size() == 16);

    // Round trip through JSON keeps the hash.
    io::write_json_file(cli::to_json(a), dir / "again.json");
    CHECK(cli::config_hash(cli::load_config(dir / "again.json")) == cli::config_hash(a));
}

TEST_CASE("weights config drives sampling through the logistic model") {
    json cfg = base_config();
    cfg.erase("probability");
    cfg["weights"] = "w.json";
    const auto dir = fixture("weights", cfg);
    // Zero weights: p = sigmoid(bias) everywhere.
    io::write_json_file({{"weights", {0, 0, 0, 0}}, {"bias", -3.0}}, dir / "w.json");
    const auto c = cli::load_config(dir / "config.json");
    const auto in = cli::prepare_inputs(c);
    const double p = 1.0 / (1.0 + std::exp(3.0));
    for (std::size_t i = 0; i < in.probability.size(); ++i) CHECK(in.probability[i] == doctest::Approx(p));
    CHECK(invoke({"simulate", "--config", (dir / "config.json").string(), "--out", (dir / "o").string()}).code == 0);
}

TEST_CASE("render") {
    const auto dir = test::scratch_dir("render");
    grid::Raster zero(test::header(5, 7), 0.0);
    grid::write_ascii_grid(zero, dir / "zero.asc");
    REQUIRE(invoke({"render", "--in", (dir / "zero.asc").string(), "--out", (dir / "zero.ppm").string()}).code == 0);
    const std::string ppm = slurp(dir / "zero.ppm");
    const std::string head = "P6\n7 5\n255\n";
    REQUIRE(ppm.substr(0, head.size()) == head);
    const std::string px = ppm.substr(head.size());
    REQUIRE(px.size() == 5 * 7 * 3);
    for (std::size_t i = 3; i < px.size(); ++i) CHECK(px[i] == px[i % 3]);

    auto g = test::random_raster(6, 9, 3, -2.0, 5.0);
    g[4] = g.nodata();
    grid::write_ascii_grid(g, dir / "g.asc");
    for (const char* cmap : {"linear", "diverging"}) {
        const auto a = (dir / (std::string(cmap) + "_a.ppm")).string();
        const auto b = (dir / (std::string(cmap) + "_b.ppm")).string();
        REQUIRE(invoke({"render", "--in", (dir / "g.asc").string(), "--colormap", cmap, "--out", a}).code == 0);
        REQUIRE(invoke({"render", "--in", (dir / "g.asc").string(), "--colormap", cmap, "--out", b}).code == 0);
        CHECK(slurp(a) == slurp(b));
        const auto side = io::read_json_file(a + ".json");
        double lo = 1e300, hi = -1e300;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g.is_nodata(i)) continue;
            lo = std::min(lo, g[i]);
            hi = std::max(hi, g[i]);
        }
        CHECK(side["min"].get<double>() == lo);
        CHECK(side["max"].get<double>() == hi);
        CHECK(side["nodata_cells"] == 1);
        const std::string pix = slurp(a).substr(std::string("P6\n9 6\n255\n").size());
        CHECK(static_cast<unsigned char>(pix[12]) == 128);
    }
    CHECK(invoke({"render", "--in", (dir / "g.asc").string(), "--colormap", "jet", "--out",
                  (dir / "x.ppm").string()})
              .code == 2);
}

TEST_CASE("metrics command matches the library and accepts external predictions") {
    const auto dir = test::scratch_dir("metrics_cli");
    const auto ref = test::random_raster(12, 12, 1, 0.0, 2.0);
    const auto pred = test::random_raster(12, 12, 2, 0.0, 2.0);
    const auto mask = test::random_binary(12, 12, 3, 0.8);
    grid::write_ascii_grid(ref, dir / "ref.asc");
    grid::write_ascii_grid(pred, dir / "pred.asc");
    grid::write_binary_grid(mask, dir / "mask.asc");
    const auto r = invoke({"metrics", "--pred", (dir / "pred.asc").string(), "--ref", (dir / "ref.asc").string(),
                           "--mask", (dir / "mask.asc").string(), "--json", (dir / "m.json").string()});
    REQUIRE(r.code == 0);
    const auto j = io::read_json_file(dir / "m.json");
    const auto lib = metrics::evaluate(pred, ref, nullptr, &mask);
    CHECK(j["rmse"].get<double>() == lib.rmse);
    CHECK(j["iou"].get<double>() == lib.iou);
    CHECK(j["iou_best_threshold"].get<double>() == lib.iou_best_threshold);
    CHECK(j["lshi"].get<double>() == lib.lshi);
    CHECK(j["n_valid"] == lib.n_valid);
    CHECK(j["lshi_params"]["bins"] == 40);
    CHECK(j["lshi_params"]["v0"].get<double>() == 0.01);
    CHECK(j.contains("config_hash"));

    grid::Raster other(test::header(5, 5), 0.0);
    grid::write_ascii_grid(other, dir / "small.asc");
    CHECK(invoke({"metrics", "--pred", (dir / "small.asc").string(), "--ref", (dir / "ref.asc").string()}).code == 2);
}

TEST_CASE("detect-change reads band directories") {
    const auto dir = test::scratch_dir("detect");
    changedet::BandSet pre{test::random_raster(6, 6, 1, 0.0, 0.2), test::random_raster(6, 6, 2, 0.1, 0.3),
                           test::random_raster(6, 6, 3, 0.0, 0.2), test::random_raster(6, 6, 4, 0.5, 1.0)};
    changedet::BandSet post = pre;
    for (std::size_t i = 0; i < 18; ++i) (*post.nir)[i] = pre.red[i];
    for (auto [name, b] : {std::pair{"pre", &pre}, std::pair{"post", &post}}) {
        fs::create_directories(dir / name);
        grid::write_ascii_grid(b->red, dir / name / "red.asc");
        grid::write_ascii_grid(b->green, dir / name / "green.asc");
        grid::write_ascii_grid(b->blue, dir / name / "blue.asc");
        grid::write_ascii_grid(*b->nir, dir / name / "nir.asc");
    }
    const auto out = dir / "change.asc";
    const auto r = invoke({"detect-change", "--pre", (dir / "pre").string(), "--post", (dir / "post").string(),
                           "--index", "ndvi", "--threshold", "0.5", "--out", out.string()});
    REQUIRE(r.code == 0);
    const auto expect = changedet::vegetation_loss(changedet::ndvi(pre), changedet::ndvi(post), 0.5);
    CHECK(grid::read_binary_grid(out) == expect.changed);
    CHECK(grid::read_binary_grid(dir / "change.valid.asc") == expect.valid);
    CHECK(expect.changed.count_ones() > 0);
    CHECK(io::read_json_file(out.string() + ".json")["changed_cells"] == expect.changed.count_ones());

    fs::remove(dir / "post" / "nir.asc");
    CHECK(invoke({"detect-change", "--pre", (dir / "pre").string(), "--post", (dir / "post").string(), "--out",
                  out.string()})
              .code == 2);
    CHECK(invoke({"detect-change", "--pre", (dir / "pre").string(), "--post", (dir / "post").string(), "--index",
                  "vari", "--out", out.string()})
              .code == 0);
}

TEST_CASE("binarize, patchify and average") {
    const auto dir = test::scratch_dir("small_cmds");
    const auto target = test::random_raster(16, 16, 5, -0.3, 0.3);
    const auto slope = test::random_raster(16, 16, 6, 0.0, 1.0);
    grid::write_ascii_grid(target, dir / "t.asc");
    grid::write_ascii_grid(slope, dir / "s.asc");

    REQUIRE(invoke({"binarize", "--in", (dir / "t.asc").string(), "--threshold", "0.1", "--out",
                    (dir / "b.asc").string()})
                .code == 0);
    CHECK(grid::read_binary_grid(dir / "b.asc") == synth::threshold_truth(target, 0.1));

    for (const char* f : {"c1.asc", "c2.asc"}) {
        REQUIRE(invoke({"binarize", "--in", (dir / "t.asc").string(), "--corrupt", "--seed", "9", "--out",
                        (dir / f).string()})
                    .code == 0);
    }
    CHECK(slurp(dir / "c1.asc") == slurp(dir / "c2.asc"));
    auto p = synth::CorruptionParams{};
    CHECK(grid::read_binary_grid(dir / "c1.asc") == synth::corrupted_change_map(target, nullptr, p, 9));

    REQUIRE(invoke({"patchify", "--change", (dir / "b.asc").string(), "--slope", (dir / "s.asc").string(),
                    "--target", (dir / "t.asc").string(), "--patch", "8", "--stride", "4", "--out",
                    (dir / "p.tsp1").string()})
                .code == 0);
    CHECK(synth::read_patch_file(dir / "p.tsp1").samples.size() == synth::patch_count(16, 16, 8, 4));
    CHECK(invoke({"patchify", "--change", (dir / "b.asc").string(), "--target", (dir / "t.asc").string(), "--out",
                  (dir / "p.tsp1").string()})
              .code == 2);

    REQUIRE(invoke({"average", "--in", (dir / "t.asc").string(), (dir / "s.asc").string(), "--out",
                    (dir / "avg.asc").string()})
                .code == 0);
    std::vector<grid::Raster> both{target, slope};
    CHECK(grid::read_ascii_grid(dir / "avg.asc") == metrics::ensemble_average(both));
}
