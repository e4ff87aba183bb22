#include "dfsim/cli/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include "dfsim/common/error.hpp"
#include "dfsim/grid/ascii_grid.hpp"
#include "dfsim/grid/terrain.hpp"
#include "dfsim/metrics/metrics.hpp"
#include "dfsim/scenario/logistic.hpp"
#include "dfsim/synth/dataset.hpp"
#include "dfsim/synth/patch.hpp"

namespace dfsim::cli {

namespace {

struct CaseKey {
    std::uint64_t seed;
    double gamma;
};

std::vector<CaseKey> case_keys(const EnsembleConfig& config) {
    std::vector<CaseKey> keys;
    for (auto s : config.seeds) {
        for (double g : config.gammas) keys.push_back({s, g});
    }
    return keys;
}

// Calls fn(i) for i in [0, n) on a pool of threads pulling indices in order.
template <typename F>
void parallel_for(std::size_t n, std::size_t workers, F&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

io::json ledger_summary(const sim::MassLedger& l) {
    return {{"water_closure", l.water_closure()}, {"sediment_closure", l.sediment_closure()}};
}

}  // namespace

std::size_t resolve_workers(std::size_t requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

PreparedInputs prepare_inputs(const EnsembleConfig& config) {
    PreparedInputs in;
    in.dem = grid::read_ascii_grid(config.resolve(config.dem));
    in.slope = grid::slope_grid(in.dem);
    if (config.weights) {
        const auto model = io::logistic_model_from_json(io::read_json_file(config.resolve(*config.weights)));
        in.probability = scenario::predict_probability(model, grid::terrain_features(in.dem));
    } else {
        in.probability = grid::read_ascii_grid(config.resolve(*config.probability));
        if (!in.probability.header().same_geometry(in.dem.header())) {
            throw ConfigError("probability grid does not match the DEM geometry");
        }
    }
    for (std::size_t i = 0; i < in.probability.size(); ++i) {
        if (in.probability.is_nodata(i)) continue;
        const double p = in.probability[i];
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("probability outside [0, 1] at cell " + std::to_string(i));
        in.probability[i] = std::min(1.0, p * config.probability_scale);
    }
    in.eligible = config.slope_mask_deg > 0.0 ? scenario::slope_mask(in.slope, config.slope_mask_deg)
                                              : grid::make_binary_like(in.dem.header(), 1);
    return in;
}

std::string case_dir_name(std::uint64_t seed, double gamma) {
    return "case_" + std::to_string(seed) + "_" + grid::format_double(gamma);
}

scenario::Scenario make_scenario(const EnsembleConfig& config, const PreparedInputs& inputs, std::uint64_t seed,
                                 double gamma) {
    const auto points = scenario::sample_initiation_points(inputs.probability, seed, &inputs.eligible);
    return scenario::build_scenario(points, gamma, config.supply_template, seed);
}

void write_case(const fs::path& dir, const sim::SimResult& result, const scenario::Scenario& scenario,
                const std::string& hash) {
    fs::create_directories(dir);
    grid::write_ascii_grid(result.outputs.max_water_level, dir / "maxwl.asc");
    grid::write_ascii_grid(result.outputs.deformation, dir / "deform.asc");
    io::json ledger = io::to_json(result.ledger);
    ledger["steps"] = result.steps;
    ledger["time"] = result.time;
    ledger["config_hash"] = hash;
    io::write_json_file(ledger, dir / "ledger.json");
    io::json sc = io::to_json(scenario);
    sc["config_hash"] = hash;
    io::write_json_file(sc, dir / "scenario.json");
}

EnsembleSummary run_ensemble(const EnsembleConfig& config, const fs::path& out, std::size_t workers,
                             std::ostream& log) {
    const std::string hash = config_hash(config);
    const PreparedInputs inputs = prepare_inputs(config);
    const auto keys = case_keys(config);

    EnsembleSummary summary;
    summary.cases.resize(keys.size());
    std::vector<std::optional<sim::SimOutputs>> outputs(keys.size());
    std::mutex log_mutex;
    std::size_t done = 0;

    parallel_for(keys.size(), resolve_workers(workers), [&](std::size_t i) {
        const auto [seed, gamma] = keys[i];
        CaseOutcome& oc = summary.cases[i];
        oc.seed = seed;
        oc.gamma = gamma;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const auto sc = make_scenario(config, inputs, seed, gamma);
            oc.points = sc.points.size();
            sim::SimParams params = config.sim;
            params.gamma = gamma;
            auto result = sim::run_simulation(inputs.dem, sc.supplies, params, config.duration);
            write_case(out / "cases" / case_dir_name(seed, gamma), result, sc, hash);
            oc.steps = result.steps;
            oc.ledger = result.ledger;
            outputs[i] = std::move(result.outputs);
            oc.ok = true;
        } catch (const std::exception& e) {
            oc.error = e.what();
        }
        oc.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::lock_guard lock(log_mutex);
        ++done;
        log << "[" << done << "/" << keys.size() << "] " << case_dir_name(seed, gamma) << ": ";
        if (oc.ok) {
            log << oc.points << " points, " << oc.steps << " steps, " << std::fixed << std::setprecision(1) << oc.seconds
                << std::defaultfloat << " s\n";
        } else {
            log << "FAILED: " << oc.error << '\n';
        }
    });

    // Averages are accumulated in seed order after the join, so they do not
    // depend on which worker finished first.
    io::json averages = io::json::array();
    fs::create_directories(out / "average");
    for (double g : config.gammas) {
        metrics::RasterAverager maxwl, deform;
        io::json used = io::json::array();
        for (std::size_t i = 0; i < keys.size(); ++i) {
            if (keys[i].gamma != g || !outputs[i]) continue;
            maxwl.add(outputs[i]->max_water_level);
            deform.add(outputs[i]->deformation);
            used.push_back(keys[i].seed);
        }
        if (maxwl.count() == 0) continue;
        const std::string tag = "gamma_" + grid::format_double(g);
        grid::write_ascii_grid(maxwl.result(), out / "average" / (tag + "_maxwl.asc"));
        grid::write_ascii_grid(deform.result(), out / "average" / (tag + "_deform.asc"));
        averages.push_back({{"gamma", g},
                            {"seeds", used},
                            {"maxwl", tag + "_maxwl.asc"},
                            {"deform", tag + "_deform.asc"}});
    }
    io::write_json_file({{"config_hash", hash}, {"averages", averages}}, out / "average" / "manifest.json");

    io::json cases = io::json::array();
    for (const auto& oc : summary.cases) {
        io::json c = {{"case", case_dir_name(oc.seed, oc.gamma)},
                      {"seed", oc.seed},
                      {"gamma", oc.gamma},
                      {"ok", oc.ok}};
        if (oc.ok) {
            c["points"] = oc.points;
            c["steps"] = oc.steps;
            c["ledger"] = ledger_summary(oc.ledger);
        } else {
            c["error"] = oc.error;
            ++summary.failures;
        }
        cases.push_back(c);
    }
    io::write_json_file({{"config_hash", hash},
                         {"cases", cases},
                         {"total", keys.size()},
                         {"failures", summary.failures}},
                        out / "summary.json");
    return summary;
}

SplitCounts split_cases(std::size_t total, const DatasetConfig& dataset) {
    std::size_t k = total * 2 / 3;
    if (dataset.train_all) {
        k = total;
    } else if (dataset.train_cases) {
        k = *dataset.train_cases;
        if (k > total) {
            throw ConfigError("dataset: train_cases = " + std::to_string(k) + " but only " + std::to_string(total) +
                              " cases");
        }
    }
    return {k, total - k};
}

io::json run_synth_dataset(const EnsembleConfig& config, const fs::path& out, std::size_t workers,
                           std::ostream& log) {
    const std::string hash = config_hash(config);
    const auto keys = case_keys(config);
    for (const auto& k : keys) {
        const fs::path dir = out / "cases" / case_dir_name(k.seed, k.gamma);
        for (const char* f : {"maxwl.asc", "deform.asc"}) require_file(dir / f, "case output");
    }
    const auto split = split_cases(keys.size(), config.dataset);
    if (split.test == 0) log << "warning: every case is in the training split; the test split is empty\n";

    const grid::Raster dem = grid::read_ascii_grid(config.resolve(config.dem));
    const grid::Raster slope = grid::slope_grid(dem);
    std::optional<grid::Raster> pre_index;
    if (config.pre_index) pre_index = grid::read_ascii_grid(config.resolve(*config.pre_index));
    if (!pre_index && config.corruption.mask_vegetation) {
        log << "warning: no pre_index configured; vegetation masking is skipped\n";
    }

    const fs::path dir = out / "dataset";
    fs::create_directories(dir);
    io::json files = io::json::object();
    io::json splits = {{"train", io::json::array()}, {"test", io::json::array()}};

    for (auto variable : config.dataset.variables) {
        const std::string var = synth::to_string(variable);
        synth::DatasetOptions opt;
        opt.variable = variable;
        opt.corruption = config.corruption;
        opt.patch = config.dataset.patch;
        opt.stride = config.dataset.stride;
        opt.seed = config.dataset.seed;
        opt.workers = resolve_workers(workers);

        io::json per_split = io::json::object();
        for (const bool train : {true, false}) {
            const std::size_t lo = train ? 0 : split.train;
            const std::size_t hi = train ? split.train : keys.size();
            std::vector<synth::SynthCase> cases;
            for (std::size_t i = lo; i < hi; ++i) {
                const fs::path grid_path = out / "cases" / case_dir_name(keys[i].seed, keys[i].gamma) / (var + ".asc");
                cases.push_back({i, case_dir_name(keys[i].seed, keys[i].gamma),
                                 [grid_path] { return grid::read_ascii_grid(grid_path); }});
            }
            const std::string name = std::string(train ? "train_" : "test_") + var + ".tsp1";
            synth::PatchWriter writer(dir / name, static_cast<std::uint32_t>(opt.patch));
            const auto summary = synth::synth_dataset(cases, slope, pre_index ? &*pre_index : nullptr, opt, writer);
            writer.close();
            per_split[train ? "train" : "test"] = {{"file", name}, {"patches", summary.total_patches}};
            log << name << ": " << cases.size() << " cases, " << summary.total_patches << " patches\n";

            // The case lists are the same for every variable; record them once.
            auto& list = splits[train ? "train" : "test"];
            if (list.empty()) {
                for (std::size_t n = 0; n < summary.cases.size(); ++n) {
                    const auto& k = keys[lo + n];
                    list.push_back({{"case_id", summary.cases[n].case_id},
                                    {"case", summary.cases[n].name},
                                    {"seed", k.seed},
                                    {"gamma", k.gamma},
                                    {"patches", summary.cases[n].patches}});
                }
            }
        }
        files[var] = per_split;
    }

    io::json manifest = {{"config_hash", hash},
                         {"format", "TSP1"},
                         {"patch", config.dataset.patch},
                         {"stride", config.dataset.stride},
                         {"channels", synth::kInputChannels},
                         {"seed", config.dataset.seed},
                         {"corruption", io::to_json(config.corruption)},
                         {"vegetation_mask_applied", pre_index.has_value() && config.corruption.mask_vegetation},
                         {"split", {{"rule", "first k cases in (seed, gamma) order train"},
                                    {"train", split.train},
                                    {"test", split.test}}},
                         {"cases", splits},
                         {"files", files}};
    io::write_json_file(manifest, dir / "manifest.json");
    return manifest;
}

}  // namespace dfsim::cli
