#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bellsim/belltest.hpp"
#include "bellsim/channel.hpp"
#include "bellsim/geodyn.hpp"
#include "bellsim/photonsim.hpp"

namespace bellsim::config {

enum class ScenarioType {
    single_downlink,
    single_uplink,
    double_downlink,
    swap_double,
    constellation_double,
    constellation_repeater,
    qkd,
    qcs_precision,
    qcs_secure,
    analytic_tables,
};

const char* to_string(ScenarioType type);
std::optional<ScenarioType> scenario_from_string(const std::string& name);

struct StationSpec {
    double lat_deg = 0.0;
    double lon_deg = 0.0;
    std::string name;
};

// Flat, file-backed description of one simulator invocation. Section and
// key names match the config file format documented in the README.
struct ScenarioConfig {
    // [scenario]
    ScenarioType scenario = ScenarioType::single_downlink;
    std::vector<double> epochs_s{0.0};
    std::uint64_t seed = 1;

    // [earth] — stored in file units so serialization round-trips exactly
    double radius_km = 6371.0;
    double rotation_rate_rad_s = 7.2921159e-5;
    double mu_m3_s2 = 3.986004418e14;

    // [orbit]
    double altitude_km = 500.0;
    double inclination_deg = 90.0;
    double raan_deg = 0.0;
    double phase_deg = 0.0;
    int satellite_count = 1;  // equally spaced along the orbit

    // [channel]
    double wavelength_nm = 810.0;
    double sat_radius_m = 0.10;
    double gs_radius_m = 0.60;
    double det_eff_sat = 0.5;
    double det_eff_gs = 0.5;
    double atm_zenith_transmittance = 0.5;

    // [source]
    double pair_rate_hz = 1e7;

    // [noise] — side A is the local/fixed arm, side B the travelling/roaming arm
    photonsim::NoiseParams noise;

    // [belltest]
    int n_runs = 30;
    double t_acq_ms = 1.0;
    double confidence_n = 1.0;
    int min_valid_runs = 2;
    double slot_duration_ns = 0.0;  // 0: one source period

    // [grid]
    double lat_step_deg = 0.25;
    double lon_step_deg = 0.25;

    // [stations]
    std::optional<StationSpec> fixed;
    std::optional<StationSpec> second;

    // [swap]
    double p_sw = 0.9;

    // [qkd]
    double qber_threshold = 0.11;
    double key_fraction = 0.5;

    // [qcs]
    double n_min = 30.0;
    double target_precision_ns = 1.0;
    double sat_bkg_rate_hz = 0.0;

    // [timeseries]
    double t_start_s = 0.0;
    double t_end_s = 0.0;
    double t_step_s = 30.0;

    // [analytic]
    std::vector<double> p1_values{0.5, 0.75, 0.8535533905932737};
    std::vector<double> nbar_values{4.0, 10.0, 40.0};

    // [sweep]
    std::string sweep_parameter;
    std::vector<double> sweep_values;

    // [output]
    std::string out_path = "out/run";
    std::string format = "geojson";  // geojson | csv | both
    int workers = 0;                 // 0: hardware concurrency
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Parses the documented key-value/section format. Unknown sections or keys,
// malformed values, and range violations are reported with line numbers and
// field names; all diagnostics are collected before throwing.
ScenarioConfig parse_config(const std::string& text);

ScenarioConfig load_config_file(const std::string& path);

// Canonical text form; parse(serialize(cfg)) reproduces cfg exactly.
std::string serialize_config(const ScenarioConfig& cfg);

// Range/consistency checks shared by parse_config and programmatic callers.
// Returns human-readable violations, empty when valid.
std::vector<std::string> validate(const ScenarioConfig& cfg);

}  // namespace bellsim::config
