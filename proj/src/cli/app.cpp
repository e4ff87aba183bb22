#include "dfsim/cli/app.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dfsim/changedet/changedet.hpp"
#include "dfsim/cli/config.hpp"
#include "dfsim/cli/json_io.hpp"
#include "dfsim/cli/pipeline.hpp"
#include "dfsim/cli/render.hpp"
#include "dfsim/common/error.hpp"
#include "dfsim/grid/ascii_grid.hpp"
#include "dfsim/grid/terrain.hpp"
#include "dfsim/metrics/metrics.hpp"
#include "dfsim/synth/dataset.hpp"
#include "dfsim/synth/patch.hpp"

namespace dfsim::cli {

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> out;
};

EnsembleConfig config_with_overrides(const Globals& g) {
    if (g.config.empty()) throw ConfigError("--config is required for this command");
    EnsembleConfig c = load_config(g.config);
    if (g.workers) c.workers = *g.workers;
    return c;
}

fs::path output_dir(const Globals& g, const EnsembleConfig& c) { return g.out ? fs::path(*g.out) : c.resolve(c.out); }

fs::path required_out(const Globals& g) {
    if (!g.out) throw ConfigError("--out is required for this command");
    return *g.out;
}

grid::Raster load_grid(const std::string& path, const char* what) {
    require_file(path, what);
    return grid::read_ascii_grid(path);
}

grid::BinaryRaster load_binary(const std::string& path, const char* what) {
    require_file(path, what);
    return grid::read_binary_grid(path);
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

// Single-file outputs get "<file>.json" recording the parameters and their hash.
void write_sidecar(const fs::path& file, const std::string& command, io::json params, io::json extra = {}) {
    io::json j = {{"command", command}, {"params", params}, {"config_hash", io::config_hash(params)}};
    if (extra.is_object()) {
        for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    }
    io::write_json_file(j, fs::path(file.string() + ".json"));
}

struct SimulateArgs {
    std::optional<double> gamma, duration;
    std::optional<std::string> max_level, scenario;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a, std::ostream& out) {
    EnsembleConfig c = config_with_overrides(g);
    if (a.duration) c.duration = *a.duration;
    if (a.max_level) c.sim.max_level = sim::max_level_mode_from_string(*a.max_level);
    const std::uint64_t seed = g.seed.value_or(c.seeds.empty() ? 0 : c.seeds.front());
    const double gamma = a.gamma.value_or(c.gammas.empty() ? 0.0 : c.gammas.front());
    c.seeds = {seed};
    c.gammas = {gamma};
    c.validate();

    const PreparedInputs inputs = prepare_inputs(c);
    scenario::Scenario sc;
    if (a.scenario) {
        require_file(*a.scenario, "scenario");
        sc = io::scenario_from_json(io::read_json_file(*a.scenario));
        sc = scenario::build_scenario(sc.points, gamma, sc.supply_template, sc.seed);
    } else {
        sc = make_scenario(c, inputs, seed, gamma);
    }
    sim::SimParams params = c.sim;
    params.gamma = gamma;
    const auto result = sim::run_simulation(inputs.dem, sc.supplies, params, c.duration);
    const fs::path dir = output_dir(g, c);
    write_case(dir, result, sc, config_hash(c));
    out << "seed " << seed << ", gamma " << grid::format_double(gamma) << ": " << sc.points.size() << " points, "
        << result.steps << " steps, water closure " << result.ledger.water_closure() << ", sediment closure "
        << result.ledger.sediment_closure() << "\n";
    out << "wrote " << dir.string() << "\n";
    return kOk;
}

int cmd_ensemble(const Globals& g, std::ostream& out, std::ostream& err) {
    EnsembleConfig c = config_with_overrides(g);
    if (g.seed) c.seeds = {*g.seed};
    c.validate();
    const fs::path dir = output_dir(g, c);
    const auto summary = run_ensemble(c, dir, c.workers, err);
    out << summary.cases.size() - summary.failures << "/" << summary.cases.size() << " cases succeeded; wrote "
        << (dir / "summary.json").string() << "\n";
    return summary.failures == 0 ? kOk : kRuntimeError;
}

int cmd_synth_dataset(const Globals& g, const std::optional<std::string>& train, std::ostream& out,
                      std::ostream& err) {
    EnsembleConfig c = config_with_overrides(g);
    if (g.seed) c.dataset.seed = *g.seed;
    if (train) {
        c.dataset.train_all = *train == "all";
        if (!c.dataset.train_all) {
            try {
                c.dataset.train_cases = std::stoull(*train);
            } catch (const std::exception&) {
                throw ConfigError("--train must be a count or 'all'");
            }
        }
    }
    c.validate();
    const fs::path dir = output_dir(g, c);
    const auto manifest = run_synth_dataset(c, dir, c.workers, err);
    out << "train " << manifest["split"]["train"] << " cases, test " << manifest["split"]["test"]
        << " cases; wrote " << (dir / "dataset" / "manifest.json").string() << "\n";
    return kOk;
}

struct DetectArgs {
    std::string pre, post, index = "ndvi", mask;
    std::optional<double> threshold;
};

changedet::BandSet load_bands(const fs::path& dir, bool need_nir) {
    if (!fs::is_directory(dir)) throw ConfigError("band directory not found: " + dir.string());
    changedet::BandSet b;
    b.red = load_grid((dir / "red.asc").string(), "red band");
    b.green = load_grid((dir / "green.asc").string(), "green band");
    b.blue = load_grid((dir / "blue.asc").string(), "blue band");
    if (fs::exists(dir / "nir.asc")) {
        b.nir = grid::read_ascii_grid(dir / "nir.asc");
    } else if (need_nir) {
        throw ConfigError("ndvi needs " + (dir / "nir.asc").string());
    }
    b.validate();
    return b;
}

int cmd_detect_change(const Globals& g, const DetectArgs& a, std::ostream& out) {
    const fs::path dst = required_out(g);
    changedet::VegetationIndex index;
    if (a.index == "ndvi") {
        index = changedet::VegetationIndex::Ndvi;
    } else if (a.index == "vari") {
        index = changedet::VegetationIndex::Vari;
    } else {
        throw ConfigError("--index must be ndvi or vari");
    }
    const double t = a.threshold.value_or(changedet::default_threshold(index));
    const bool need_nir = index == changedet::VegetationIndex::Ndvi;
    const auto pre = changedet::vegetation_index(load_bands(a.pre, need_nir), index);
    const auto post = changedet::vegetation_index(load_bands(a.post, need_nir), index);
    std::optional<grid::BinaryRaster> mask;
    if (!a.mask.empty()) mask = load_binary(a.mask, "mask");
    const auto change = changedet::vegetation_loss(pre, post, t, mask ? &*mask : nullptr);

    ensure_parent(dst);
    grid::write_binary_grid(change.changed, dst);
    fs::path valid = dst;
    valid.replace_extension(".valid.asc");
    grid::write_binary_grid(change.valid, valid);
    write_sidecar(dst, "detect-change",
                  {{"pre", a.pre}, {"post", a.post}, {"index", a.index}, {"threshold", t}, {"mask", a.mask}},
                  {{"changed_cells", change.changed.count_ones()},
                   {"valid_cells", change.valid.count_ones()},
                   {"validity", valid.filename().string()}});
    out << change.changed.count_ones() << " changed of " << change.valid.count_ones() << " valid cells\n";
    return kOk;
}

struct BinarizeArgs {
    std::string in, pre_index;
    double threshold = 0.1;
    bool corrupt = false;
};

int cmd_binarize(const Globals& g, const BinarizeArgs& a, std::ostream& out) {
    const fs::path dst = required_out(g);
    const auto target = load_grid(a.in, "input grid");
    synth::CorruptionParams p = synth::CorruptionParams::none(a.threshold);
    if (a.corrupt) {
        p = g.config.empty() ? synth::CorruptionParams{} : load_config(g.config).corruption;
        p.truth_threshold = a.threshold;
    }
    p.validate();
    std::optional<grid::Raster> pre;
    if (!a.pre_index.empty()) pre = load_grid(a.pre_index, "pre-index grid");
    const std::uint64_t seed = g.seed.value_or(0);
    const auto map = synth::corrupted_change_map(target, pre ? &*pre : nullptr, p, seed);
    ensure_parent(dst);
    grid::write_binary_grid(map, dst);
    write_sidecar(dst, "binarize",
                  {{"in", a.in}, {"corruption", io::to_json(p)}, {"pre_index", a.pre_index}, {"seed", seed}},
                  {{"ones", map.count_ones()}});
    out << map.count_ones() << " of " << map.size() << " cells set\n";
    return kOk;
}

struct PatchifyArgs {
    std::string change, slope, dem, target;
    std::size_t patch = 256, stride = 256;
    std::uint64_t case_id = 0;
};

int cmd_patchify(const Globals& g, const PatchifyArgs& a, std::ostream& out) {
    const fs::path dst = required_out(g);
    if (a.slope.empty() == a.dem.empty()) throw ConfigError("give exactly one of --slope and --dem");
    const auto change = load_binary(a.change, "change map");
    const auto slope = a.slope.empty() ? grid::slope_grid(load_grid(a.dem, "dem")) : load_grid(a.slope, "slope");
    const auto target = load_grid(a.target, "target");
    const auto samples = synth::patchify(change, slope, target, a.patch, a.stride, a.case_id);
    ensure_parent(dst);
    synth::PatchWriter writer(dst, static_cast<std::uint32_t>(a.patch));
    for (const auto& s : samples) writer.write(s);
    writer.close();
    write_sidecar(dst, "patchify",
                  {{"change", a.change}, {"slope", a.slope}, {"dem", a.dem}, {"target", a.target},
                   {"patch", a.patch}, {"stride", a.stride}, {"case_id", a.case_id}},
                  {{"patches", samples.size()}});
    out << samples.size() << " patches\n";
    return kOk;
}

struct MetricsArgs {
    std::string pred, ref, ref_binary, mask, json;
    double ref_threshold = 0.1;
};

int cmd_metrics(const Globals& g, const MetricsArgs& a, std::ostream& out) {
    const auto pred = load_grid(a.pred, "prediction");
    const auto ref = load_grid(a.ref, "reference");
    if (!pred.header().same_geometry(ref.header())) throw ConfigError("prediction and reference grids differ");
    std::optional<grid::BinaryRaster> ref_bin, mask;
    if (!a.ref_binary.empty()) ref_bin = load_binary(a.ref_binary, "binary reference");
    if (!a.mask.empty()) mask = load_binary(a.mask, "mask");
    const metrics::LshiParams lp = g.config.empty() ? metrics::LshiParams{} : load_config(g.config).lshi;
    const auto report =
        metrics::evaluate(pred, ref, ref_bin ? &*ref_bin : nullptr, mask ? &*mask : nullptr, lp, a.ref_threshold);
    io::json params = {{"pred", a.pred}, {"ref", a.ref}, {"ref_binary", a.ref_binary}, {"mask", a.mask},
                       {"ref_threshold", a.ref_binary.empty() ? io::json(a.ref_threshold) : io::json(nullptr)},
                       {"lshi", io::to_json(lp)}};
    io::json j = io::to_json(report);
    j["lshi_params"] = io::to_json(lp);
    j["inputs"] = params;
    j["config_hash"] = io::config_hash(params);
    if (!a.json.empty()) {
        ensure_parent(a.json);
        io::write_json_file(j, a.json);
    }
    out << j.dump(2) << "\n";
    return kOk;
}

int cmd_average(const Globals& g, const std::vector<std::string>& inputs, std::ostream& out) {
    const fs::path dst = required_out(g);
    metrics::RasterAverager avg;
    for (const auto& p : inputs) avg.add(load_grid(p, "input grid"));
    ensure_parent(dst);
    grid::write_ascii_grid(avg.result(), dst);
    write_sidecar(dst, "average", {{"inputs", inputs}});
    out << "averaged " << avg.count() << " grids\n";
    return kOk;
}

int cmd_render(const Globals& g, const std::string& in, const std::string& cmap_name, std::ostream& out) {
    const fs::path dst = required_out(g);
    const Colormap cmap = colormap_from_string(cmap_name);
    const auto raster = load_grid(in, "input grid");
    RenderStats stats;
    const auto rgb = render_rgb(raster, cmap, stats);
    ensure_parent(dst);
    write_ppm(dst, raster.cols(), raster.rows(), rgb);
    auto opt = [](const std::optional<double>& v) { return v ? io::json(*v) : io::json(nullptr); };
    write_sidecar(dst, "render", {{"in", in}, {"colormap", to_string(cmap)}},
                  {{"min", opt(stats.min)},
                   {"max", opt(stats.max)},
                   {"nodata_cells", stats.nodata_cells},
                   {"width", raster.cols()},
                   {"height", raster.rows()}});
    out << "wrote " << dst.string() << "\n";
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Debris-flow ensemble simulation and change-detection dataset tool", "dfsim"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "JSON configuration");
    app.add_option("--seed", g.seed, "Scenario seed (simulate, ensemble) or corruption seed");
    app.add_option("--workers", g.workers, "Worker threads, 0 for all cores");
    app.add_option("--out", g.out, "Output directory or file");

    std::function<int()> action;

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "Run one scenario");
    simulate->add_option("--gamma", sa.gamma, "Fluidization rate (default: first configured)");
    simulate->add_option("--duration", sa.duration, "Simulated time, s");
    simulate->add_option("--max-level", sa.max_level, "depth or surface");
    simulate->add_option("--scenario", sa.scenario, "Scenario JSON to replay instead of sampling");
    simulate->callback([&] { action = [&] { return cmd_simulate(g, sa, out); }; });

    auto* ensemble = app.add_subcommand("ensemble", "Run every seed x gamma case and average per gamma");
    ensemble->callback([&] { action = [&] { return cmd_ensemble(g, out, err); }; });

    std::optional<std::string> train;
    auto* dataset = app.add_subcommand("synth-dataset", "Build train/test patch files from ensemble outputs");
    dataset->add_option("--train", train, "Training cases, a count or 'all'");
    dataset->callback([&] { action = [&] { return cmd_synth_dataset(g, train, out, err); }; });

    DetectArgs da;
    auto* detect = app.add_subcommand("detect-change", "Vegetation-loss map from pre/post band directories");
    detect->add_option("--pre", da.pre, "Directory with red.asc, green.asc, blue.asc[, nir.asc]")->required();
    detect->add_option("--post", da.post, "Same layout as --pre")->required();
    detect->add_option("--index", da.index, "ndvi or vari");
    detect->add_option("--threshold", da.threshold, "Vegetation threshold (default 0.7 ndvi, 0 vari)");
    detect->add_option("--mask", da.mask, "Validity mask grid");
    detect->callback([&] { action = [&] { return cmd_detect_change(g, da, out); }; });

    BinarizeArgs ba;
    auto* binarize = app.add_subcommand("binarize", "Threshold a grid, optionally with synthetic corruption");
    binarize->add_option("--in", ba.in, "Input grid")->required();
    binarize->add_option("--threshold", ba.threshold, "|value| >= threshold is change");
    binarize->add_flag("--corrupt", ba.corrupt, "Apply masking, erosion and false positives");
    binarize->add_option("--pre-index", ba.pre_index, "Pre-event vegetation index for masking");
    binarize->callback([&] { action = [&] { return cmd_binarize(g, ba, out); }; });

    PatchifyArgs pa;
    auto* patchify = app.add_subcommand("patchify", "Cut a case into TSP1 patches");
    patchify->add_option("--change", pa.change, "Binary change map")->required();
    patchify->add_option("--slope", pa.slope, "Slope grid, radians");
    patchify->add_option("--dem", pa.dem, "DEM to derive the slope from");
    patchify->add_option("--target", pa.target, "Target grid")->required();
    patchify->add_option("--patch", pa.patch, "Patch side, cells");
    patchify->add_option("--stride", pa.stride, "Stride, cells");
    patchify->add_option("--case-id", pa.case_id, "Case id stored in each record");
    patchify->callback([&] { action = [&] { return cmd_patchify(g, pa, out); }; });

    MetricsArgs ma;
    auto* metrics = app.add_subcommand("metrics", "RMSE, IoU, best-threshold IoU and LSHI of a prediction");
    metrics->add_option("--pred", ma.pred, "Predicted grid")->required();
    metrics->add_option("--ref", ma.ref, "Reference grid")->required();
    metrics->add_option("--ref-binary", ma.ref_binary, "Binary reference for IoU");
    metrics->add_option("--mask", ma.mask, "Evaluation mask");
    metrics->add_option("--json", ma.json, "Write the report here");
    metrics->add_option("--ref-threshold", ma.ref_threshold, "Binarize --ref at this |value| when no --ref-binary");
    metrics->callback([&] { action = [&] { return cmd_metrics(g, ma, out); }; });

    std::vector<std::string> avg_in;
    auto* average = app.add_subcommand("average", "Cell-wise mean of grids");
    average->add_option("--in", avg_in, "Input grids")->required();
    average->callback([&] { action = [&] { return cmd_average(g, avg_in, out); }; });

    std::string render_in, cmap = "linear";
    auto* render = app.add_subcommand("render", "Grid to PPM image");
    render->add_option("--in", render_in, "Input grid")->required();
    render->add_option("--colormap", cmap, "linear or diverging");
    render->callback([&] { action = [&] { return cmd_render(g, render_in, cmap, out); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        return action();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const FormatError& e) {
        err << "input error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
}

}  // namespace dfsim::cli
