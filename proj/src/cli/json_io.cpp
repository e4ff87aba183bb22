#include "dfsim/cli/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "dfsim/common/error.hpp"

namespace dfsim::io {

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& what) {
    if (!j.is_object()) throw ConfigError(what + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) throw ConfigError(what + ": unknown key '" + it.key() + "'");
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& what) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(what + ": key '" + key + "' has the wrong type");
    }
}

}  // namespace

json to_json(const sim::SimParams& p) {
    return {{"g", p.g},
            {"eps_diff", p.eps_diff},
            {"sigma", p.sigma},
            {"rho0", p.rho0},
            {"cstar0", p.cstar0},
            {"gamma", p.gamma},
            {"d_m", p.d_m},
            {"manning_n", p.manning_n},
            {"tan_phi", p.tan_phi},
            {"delta_e", p.delta_e},
            {"delta_d", p.delta_d},
            {"h_min", p.h_min},
            {"cfl", p.cfl},
            {"visc_kappa", p.visc_kappa},
            {"c_water", p.c_water},
            {"c_stony_frac", p.c_stony_frac},
            {"dt_max", p.dt_max},
            {"bedrock_depth", p.bedrock_depth},
            {"boundary", sim::to_string(p.boundary)},
            {"friction", p.friction},
            {"erosion", p.erosion},
            {"alternate_sweeps", p.alternate_sweeps},
            {"max_level", sim::to_string(p.max_level)}};
}

sim::SimParams sim_params_from_json(const json& j, sim::SimParams p) {
    const std::string what = "sim";
    reject_unknown(j, {"g", "eps_diff", "sigma", "rho0", "cstar0", "gamma", "d_m", "manning_n", "tan_phi", "delta_e",
                       "delta_d", "h_min", "cfl", "visc_kappa", "c_water", "c_stony_frac", "dt_max", "bedrock_depth",
                       "boundary", "friction", "erosion", "alternate_sweeps", "max_level"},
                   what);
    read(j, "g", p.g, what);
    read(j, "eps_diff", p.eps_diff, what);
    read(j, "sigma", p.sigma, what);
    read(j, "rho0", p.rho0, what);
    read(j, "cstar0", p.cstar0, what);
    read(j, "gamma", p.gamma, what);
    read(j, "d_m", p.d_m, what);
    read(j, "manning_n", p.manning_n, what);
    read(j, "tan_phi", p.tan_phi, what);
    read(j, "delta_e", p.delta_e, what);
    read(j, "delta_d", p.delta_d, what);
    read(j, "h_min", p.h_min, what);
    read(j, "cfl", p.cfl, what);
    read(j, "visc_kappa", p.visc_kappa, what);
    read(j, "c_water", p.c_water, what);
    read(j, "c_stony_frac", p.c_stony_frac, what);
    read(j, "dt_max", p.dt_max, what);
    read(j, "bedrock_depth", p.bedrock_depth, what);
    read(j, "friction", p.friction, what);
    read(j, "erosion", p.erosion, what);
    read(j, "alternate_sweeps", p.alternate_sweeps, what);
    std::string text;
    if (j.contains("boundary")) {
        read(j, "boundary", text, what);
        p.boundary = sim::boundary_mode_from_string(text);
    }
    if (j.contains("max_level")) {
        read(j, "max_level", text, what);
        p.max_level = sim::max_level_mode_from_string(text);
    }
    p.validate();
    return p;
}

json to_json(const synth::CorruptionParams& p) {
    return {{"truth_threshold", p.truth_threshold}, {"mask_vegetation", p.mask_vegetation},
            {"veg_threshold", p.veg_threshold},     {"erosion_radius", p.erosion_radius},
            {"erosion_iterations", p.erosion_iterations}, {"fp_rate", p.fp_rate},
            {"cutout_count", p.cutout_count},       {"cutout_min", p.cutout_min},
            {"cutout_max", p.cutout_max}};
}

synth::CorruptionParams corruption_from_json(const json& j, synth::CorruptionParams p) {
    const std::string what = "corruption";
    reject_unknown(j, {"truth_threshold", "mask_vegetation", "veg_threshold", "erosion_radius", "erosion_iterations",
                       "fp_rate", "cutout_count", "cutout_min", "cutout_max"},
                   what);
    read(j, "truth_threshold", p.truth_threshold, what);
    read(j, "mask_vegetation", p.mask_vegetation, what);
    read(j, "veg_threshold", p.veg_threshold, what);
    read(j, "erosion_radius", p.erosion_radius, what);
    read(j, "erosion_iterations", p.erosion_iterations, what);
    read(j, "fp_rate", p.fp_rate, what);
    read(j, "cutout_count", p.cutout_count, what);
    read(j, "cutout_min", p.cutout_min, what);
    read(j, "cutout_max", p.cutout_max, what);
    p.validate();
    return p;
}

json to_json(const scenario::SupplyTemplate& t) {
    return {{"peak_discharge", t.peak_discharge},
            {"rise_time", t.rise_time},
            {"duration", t.duration},
            {"concentration", t.concentration}};
}

scenario::SupplyTemplate supply_template_from_json(const json& j, scenario::SupplyTemplate t) {
    const std::string what = "supply_template";
    reject_unknown(j, {"peak_discharge", "rise_time", "duration", "concentration"}, what);
    read(j, "peak_discharge", t.peak_discharge, what);
    read(j, "rise_time", t.rise_time, what);
    read(j, "duration", t.duration, what);
    read(j, "concentration", t.concentration, what);
    t.validate();
    return t;
}

json to_json(const scenario::LogisticModel& m) {
    json features = json::array();
    for (const char* name : scenario::kTerrainFeatureNames) features.push_back(name);
    json j = {{"weights", m.weights}, {"bias", m.bias}, {"mean", m.mean}, {"stddev", m.stddev}};
    if (m.num_features() == 4) j["features"] = features;
    return j;
}

scenario::LogisticModel logistic_model_from_json(const json& j) {
    const std::string what = "logistic model";
    reject_unknown(j, {"weights", "bias", "mean", "stddev", "features", "config_hash", "fit"}, what);
    scenario::LogisticModel m;
    read(j, "weights", m.weights, what);
    read(j, "bias", m.bias, what);
    read(j, "mean", m.mean, what);
    read(j, "stddev", m.stddev, what);
    if (!j.contains("mean")) m.mean.assign(m.weights.size(), 0.0);
    if (!j.contains("stddev")) m.stddev.assign(m.weights.size(), 1.0);
    m.validate();
    return m;
}

json to_json(const sim::SupplySpec& s) {
    json h = json::array();
    for (const auto& p : s.hydrograph) h.push_back({p.time, p.discharge, p.concentration});
    return {{"row", s.cell.row}, {"col", s.cell.col}, {"hydrograph", h}};
}

sim::SupplySpec supply_from_json(const json& j) {
    const std::string what = "supply";
    reject_unknown(j, {"row", "col", "hydrograph"}, what);
    sim::SupplySpec s;
    read(j, "row", s.cell.row, what);
    read(j, "col", s.cell.col, what);
    if (!j.contains("hydrograph") || !j["hydrograph"].is_array()) {
        throw ConfigError("supply: 'hydrograph' must be a list of [time, discharge, concentration]");
    }
    for (const auto& p : j["hydrograph"]) {
        if (!p.is_array() || p.size() != 3) {
            throw ConfigError("supply: hydrograph points are [time, discharge, concentration]");
        }
        s.hydrograph.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    }
    return s;
}

json to_json(const scenario::Scenario& s) {
    json pts = json::array();
    for (const auto& p : s.points) pts.push_back({p.row, p.col});
    return {{"seed", s.seed}, {"gamma", s.gamma}, {"points", pts}, {"supply_template", to_json(s.supply_template)}};
}

scenario::Scenario scenario_from_json(const json& j) {
    const std::string what = "scenario";
    reject_unknown(j, {"seed", "gamma", "points", "supply_template", "config_hash"}, what);
    std::uint64_t seed = 0;
    double gamma = 0.0;
    read(j, "seed", seed, what);
    read(j, "gamma", gamma, what);
    std::vector<grid::CellIndex> points;
    if (j.contains("points")) {
        for (const auto& p : j["points"]) {
            if (!p.is_array() || p.size() != 2) throw ConfigError("scenario: points are [row, col]");
            points.push_back({p[0].get<std::size_t>(), p[1].get<std::size_t>()});
        }
    }
    const scenario::SupplyTemplate t =
        j.contains("supply_template") ? supply_template_from_json(j["supply_template"]) : scenario::SupplyTemplate{};
    return scenario::build_scenario(points, gamma, t, seed);
}

json to_json(const sim::MassLedger& l) {
    return {{"water", {{"injected", l.water_injected},
                       {"initial", l.water_initial},
                       {"stored", l.water_stored},
                       {"outflow", l.water_outflow},
                       {"closure", l.water_closure()}}},
            {"sediment", {{"injected", l.sediment_injected},
                          {"initial", l.sediment_initial},
                          {"stored", l.sediment_stored},
                          {"outflow", l.sediment_outflow},
                          {"closure", l.sediment_closure()}}}};
}

json to_json(const metrics::MetricsReport& r) {
    return {{"rmse", r.rmse},
            {"iou", r.iou},
            {"iou_best_threshold", r.iou_best_threshold},
            {"lshi", r.lshi},
            {"n_valid", r.n_valid}};
}

json to_json(const metrics::LshiParams& p) {
    return {{"v0", p.v0}, {"lo", p.lo}, {"hi", p.hi}, {"bins", p.bins}, {"bin_width", (p.hi - p.lo) / p.bins}};
}

metrics::LshiParams lshi_params_from_json(const json& j, metrics::LshiParams p) {
    const std::string what = "lshi";
    reject_unknown(j, {"v0", "lo", "hi", "bins"}, what);
    read(j, "v0", p.v0, what);
    read(j, "lo", p.lo, what);
    read(j, "hi", p.hi, what);
    read(j, "bins", p.bins, what);
    p.validate();
    return p;
}

std::string config_hash(const json& j) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw FormatError("write failed on " + path.string());
}

}  // namespace dfsim::io
