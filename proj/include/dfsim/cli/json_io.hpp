#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "dfsim/metrics/metrics.hpp"
#include "dfsim/scenario/logistic.hpp"
#include "dfsim/scenario/scenario.hpp"
#include "dfsim/sim/params.hpp"
#include "dfsim/sim/solver.hpp"
#include "dfsim/synth/corrupt.hpp"
#include "dfsim/synth/dataset.hpp"

namespace dfsim::io {

using nlohmann::json;

// Readers fill a default-constructed value from the keys present and throw
// ConfigError on unknown keys or wrong types, so typos do not pass silently.

json to_json(const sim::SimParams& p);
sim::SimParams sim_params_from_json(const json& j, sim::SimParams base = {});

json to_json(const synth::CorruptionParams& p);
synth::CorruptionParams corruption_from_json(const json& j, synth::CorruptionParams base = {});

json to_json(const scenario::SupplyTemplate& t);
scenario::SupplyTemplate supply_template_from_json(const json& j, scenario::SupplyTemplate base = {});

json to_json(const scenario::LogisticModel& m);
scenario::LogisticModel logistic_model_from_json(const json& j);

json to_json(const sim::SupplySpec& s);
sim::SupplySpec supply_from_json(const json& j);

json to_json(const scenario::Scenario& s);
scenario::Scenario scenario_from_json(const json& j);

json to_json(const sim::MassLedger& l);
json to_json(const metrics::MetricsReport& r);
json to_json(const metrics::LshiParams& p);
metrics::LshiParams lshi_params_from_json(const json& j, metrics::LshiParams base = {});

/// FNV-1a 64 of the compact dump (object keys are sorted), as 16 hex digits.
std::string config_hash(const json& j);

json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const json& j, const std::filesystem::path& path);

}  // namespace dfsim::io
