#pragma once

#include <string>
#include <vector>

#include "bellsim/config.hpp"
#include "bellsim/shadows.hpp"

namespace bellsim::scenario {

enum class Verb { shadow, timeseries, analytic, sweep };

struct RunResult {
    std::vector<std::string> data_files;  // deterministic for fixed config + seed
    std::string manifest_file;
};

// Resolves workers = 0 to the hardware concurrency.
int resolve_workers(int requested);

// Builds the per-module parameter block from a validated config.
shadows::ScenarioParams scenario_params(const config::ScenarioConfig& cfg);

// Orbits of the (equally spaced) constellation described by the config.
std::vector<geodyn::OrbitSpec> constellation_orbits(const config::ScenarioConfig& cfg);

// Computes one shadow map for the configured scenario at the given epoch.
// Valid for every scenario type except analytic_tables.
shadows::ShadowMap compute_shadow(const config::ScenarioConfig& cfg, double epoch_s);

// Executes the scenario end to end: computes results, writes data files in
// the configured format(s) plus a JSON manifest. Partial outputs are removed
// on error. Identical config + seed produce byte-identical data files for
// any worker count.
RunResult run_scenario(const config::ScenarioConfig& cfg, Verb verb);

}  // namespace bellsim::scenario
