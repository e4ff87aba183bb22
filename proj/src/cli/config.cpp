#include "dfsim/cli/config.hpp"

#include <set>

#include "dfsim/common/error.hpp"

namespace dfsim::cli {

namespace {

void reject_unknown(const io::json& j, const std::set<std::string>& known, const std::string& what) {
    if (!j.is_object()) throw ConfigError(what + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) throw ConfigError(what + ": unknown key '" + it.key() + "'");
    }
}

template <typename T>
T get(const io::json& j, const char* key, const std::string& what) {
    try {
        return j.at(key).get<T>();
    } catch (const io::json::exception&) {
        throw ConfigError(what + ": key '" + key + "' is missing or has the wrong type");
    }
}

DatasetConfig dataset_from_json(const io::json& j) {
    const std::string what = "dataset";
    reject_unknown(j, {"variables", "patch", "stride", "train_cases", "seed"}, what);
    DatasetConfig d;
    if (j.contains("variables")) {
        d.variables.clear();
        for (const auto& v : get<std::vector<std::string>>(j, "variables", what)) {
            d.variables.push_back(synth::target_variable_from_string(v));
        }
        if (d.variables.empty()) throw ConfigError("dataset: 'variables' is empty");
    }
    if (j.contains("patch")) d.patch = get<std::size_t>(j, "patch", what);
    if (j.contains("stride")) d.stride = get<std::size_t>(j, "stride", what);
    if (j.contains("seed")) d.seed = get<std::uint64_t>(j, "seed", what);
    if (j.contains("train_cases")) {
        const auto& k = j["train_cases"];
        if (k.is_string() && k.get<std::string>() == "all") {
            d.train_all = true;
        } else if (k.is_number_unsigned()) {
            d.train_cases = k.get<std::size_t>();
        } else {
            throw ConfigError("dataset: 'train_cases' must be a non-negative integer or \"all\"");
        }
    }
    if (d.patch == 0 || d.stride == 0) throw ConfigError("dataset: patch and stride must be positive");
    return d;
}

}  // namespace

void require_file(const fs::path& path, const std::string& what) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw ConfigError(what + " not found: " + path.string());
}

void EnsembleConfig::validate() const {
    if (seeds.empty()) throw ConfigError("config: empty seed list");
    if (gammas.empty()) throw ConfigError("config: empty gamma list");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
        throw ConfigError("config: duplicate seeds");
    }
    if (std::set<double>(gammas.begin(), gammas.end()).size() != gammas.size()) {
        throw ConfigError("config: duplicate gammas");
    }
    for (double g : gammas) {
        sim::SimParams p = sim;
        p.gamma = g;
        p.validate();
    }
    if (weights.has_value() == probability.has_value()) {
        throw ConfigError("config: give exactly one of 'weights' and 'probability'");
    }
    if (!(probability_scale >= 0.0)) throw ConfigError("config: probability_scale must be >= 0");
    if (!(duration >= 0.0)) throw ConfigError("config: duration must be >= 0");
    require_file(resolve(dem), "dem");
    if (weights) require_file(resolve(*weights), "weights");
    if (probability) require_file(resolve(*probability), "probability grid");
    if (pre_index) require_file(resolve(*pre_index), "pre_index grid");
    supply_template.validate();
    corruption.validate();
}

EnsembleConfig config_from_json(const io::json& j, const fs::path& base_dir) {
    const std::string what = "config";
    reject_unknown(j,
                   {"dem", "weights", "probability", "probability_scale", "seeds", "seed_range", "gammas", "duration",
                    "sim", "supply_template", "slope_mask_deg", "corruption", "dataset", "pre_index", "lshi", "out",
                    "workers"},
                   what);
    EnsembleConfig c;
    c.base_dir = base_dir;
    c.dem = get<std::string>(j, "dem", what);
    if (j.contains("weights")) c.weights = get<std::string>(j, "weights", what);
    if (j.contains("probability")) c.probability = get<std::string>(j, "probability", what);
    if (j.contains("probability_scale")) c.probability_scale = get<double>(j, "probability_scale", what);
    if (j.contains("seeds") && j.contains("seed_range")) {
        throw ConfigError("config: give 'seeds' or 'seed_range', not both");
    }
    if (j.contains("seeds")) c.seeds = get<std::vector<std::uint64_t>>(j, "seeds", what);
    if (j.contains("seed_range")) {
        const auto& r = j["seed_range"];
        reject_unknown(r, {"first", "count"}, "seed_range");
        const auto first = get<std::uint64_t>(r, "first", "seed_range");
        const auto count = get<std::uint64_t>(r, "count", "seed_range");
        for (std::uint64_t k = 0; k < count; ++k) c.seeds.push_back(first + k);
    }
    if (j.contains("gammas")) c.gammas = get<std::vector<double>>(j, "gammas", what);
    if (j.contains("duration")) c.duration = get<double>(j, "duration", what);
    if (j.contains("sim")) c.sim = io::sim_params_from_json(j["sim"]);
    if (j.contains("supply_template")) c.supply_template = io::supply_template_from_json(j["supply_template"]);
    if (j.contains("slope_mask_deg")) c.slope_mask_deg = get<double>(j, "slope_mask_deg", what);
    if (j.contains("corruption")) c.corruption = io::corruption_from_json(j["corruption"]);
    if (j.contains("dataset")) c.dataset = dataset_from_json(j["dataset"]);
    if (j.contains("pre_index")) c.pre_index = get<std::string>(j, "pre_index", what);
    if (j.contains("lshi")) c.lshi = io::lshi_params_from_json(j["lshi"]);
    if (j.contains("out")) c.out = get<std::string>(j, "out", what);
    if (j.contains("workers")) c.workers = get<std::size_t>(j, "workers", what);
    return c;
}

io::json to_json(const EnsembleConfig& c) {
    io::json j = {{"dem", c.dem.generic_string()},
                  {"probability_scale", c.probability_scale},
                  {"seeds", c.seeds},
                  {"gammas", c.gammas},
                  {"duration", c.duration},
                  {"sim", io::to_json(c.sim)},
                  {"supply_template", io::to_json(c.supply_template)},
                  {"slope_mask_deg", c.slope_mask_deg},
                  {"corruption", io::to_json(c.corruption)},
                  {"lshi", io::to_json(c.lshi)}};
    j["lshi"].erase("bin_width");
    if (c.weights) j["weights"] = c.weights->generic_string();
    if (c.probability) j["probability"] = c.probability->generic_string();
    if (c.pre_index) j["pre_index"] = c.pre_index->generic_string();
    io::json vars = io::json::array();
    for (auto v : c.dataset.variables) vars.push_back(synth::to_string(v));
    io::json d = {{"variables", vars}, {"patch", c.dataset.patch}, {"stride", c.dataset.stride},
                  {"seed", c.dataset.seed}};
    if (c.dataset.train_all) {
        d["train_cases"] = "all";
    } else if (c.dataset.train_cases) {
        d["train_cases"] = *c.dataset.train_cases;
    }
    j["dataset"] = d;
    // out and workers do not change any result, so they stay out of the hash.
    return j;
}

EnsembleConfig load_config(const fs::path& path) {
    require_file(path, "config");
    const io::json j = io::read_json_file(path);
    return config_from_json(j, fs::absolute(path).parent_path());
}

}  // namespace dfsim::cli
