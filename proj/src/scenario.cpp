#include "bellsim/scenario.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "bellsim/analytic.hpp"
#include "bellsim/apps.hpp"
#include "bellsim/io.hpp"
#include "bellsim/version.hpp"

namespace bellsim::scenario {

namespace {

namespace fs = std::filesystem;

std::string fmt_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

geodyn::GroundStation station(const config::StationSpec& spec) {
    return {mathutil::deg2rad(spec.lat_deg), mathutil::deg2rad(spec.lon_deg), spec.name};
}

shadows::GeoGrid grid_of(const config::ScenarioConfig& cfg) {
    return {cfg.lat_step_deg, cfg.lon_step_deg};
}

apps::QkdConfig qkd_of(const config::ScenarioConfig& cfg) {
    apps::QkdConfig qkd;
    qkd.qber_threshold = cfg.qber_threshold;
    qkd.key_fraction = cfg.key_fraction;
    return qkd;
}

apps::QcsConfig qcs_of(const config::ScenarioConfig& cfg) {
    apps::QcsConfig qcs;
    qcs.n_min = cfg.n_min;
    qcs.target_precision_s = cfg.target_precision_ns * 1e-9;
    qcs.sat_bkg_rate_hz = cfg.sat_bkg_rate_hz;
    return qcs;
}

// Collects written files so a failed run leaves no partial outputs behind.
class OutputSet {
public:
    void write(const std::string& path, const std::string& content) {
        const fs::path p(path);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        io::write_file(path, content);
        files_.push_back(path);
    }
    const std::vector<std::string>& files() const { return files_; }
    void discard_all() {
        for (const auto& f : files_) {
            std::error_code ec;
            fs::remove(f, ec);
        }
        files_.clear();
    }

private:
    std::vector<std::string> files_;
};

void write_map_outputs(OutputSet& out, const config::ScenarioConfig& cfg,
                       const shadows::ShadowMap& map, const std::string& suffix) {
    if (cfg.format == "geojson" || cfg.format == "both") {
        out.write(cfg.out_path + suffix + ".geojson", io::shadow_map_to_geojson(map));
    }
    if (cfg.format == "csv" || cfg.format == "both") {
        out.write(cfg.out_path + suffix + ".csv", io::shadow_map_to_csv(map));
    }
}

std::string analytic_tables_csv(const config::ScenarioConfig& cfg) {
    std::string out = "p1,nbar,s,probability\n";
    for (double p1 : cfg.p1_values) {
        for (double nbar : cfg.nbar_values) {
            // The lattice union over all n is huge; tabulate the conditional
            // distribution at the rounded mean count.
            const int n = std::max(1, static_cast<int>(std::lround(nbar)));
            for (const auto& point : analytic::s_distribution(p1, n)) {
                out += fmt_double(p1);
                out += ',';
                out += fmt_double(nbar);
                out += ',';
                out += fmt_double(point.s);
                out += ',';
                out += fmt_double(point.prob);
                out += '\n';
            }
        }
    }
    return out;
}

std::string analytic_summary_csv(const config::ScenarioConfig& cfg) {
    std::string out = "p1,nbar,mean_s,var_s,p_success\n";
    for (double p1 : cfg.p1_values) {
        for (double nbar : cfg.nbar_values) {
            const auto moments = analytic::s_moments(p1, nbar);
            out += fmt_double(p1);
            out += ',';
            out += fmt_double(nbar);
            out += ',';
            out += fmt_double(moments.mean);
            out += ',';
            out += fmt_double(moments.variance);
            out += ',';
            out += fmt_double(analytic::p_success(p1, nbar));
            out += '\n';
        }
    }
    return out;
}

config::ScenarioConfig apply_sweep_value(const config::ScenarioConfig& base,
                                         const std::string& parameter, double value) {
    config::ScenarioConfig cfg = base;
    if (parameter == "p_sw") {
        cfg.p_sw = value;
    } else if (parameter == "t_acq_ms") {
        cfg.t_acq_ms = value;
    } else if (parameter == "confidence_n") {
        cfg.confidence_n = value;
    } else if (parameter == "bkg_rate_b_hz") {
        cfg.noise.bkg_rate_b_hz = value;
    } else if (parameter == "bkg_rate_both_hz") {
        cfg.noise.bkg_rate_a_hz = value;
        cfg.noise.bkg_rate_b_hz = value;
    } else if (parameter == "n_min") {
        cfg.n_min = value;
    } else {
        throw config::ConfigError("sweep.parameter: unsupported parameter '" +
                                  parameter + "'");
    }
    const auto errors = config::validate(cfg);
    if (!errors.empty()) {
        throw config::ConfigError("sweep value " + fmt_double(value) +
                                  " violates: " + errors.front());
    }
    return cfg;
}

}  // namespace

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

shadows::ScenarioParams scenario_params(const config::ScenarioConfig& cfg) {
    shadows::ScenarioParams params;
    params.earth.radius_m = cfg.radius_km * 1e3;
    params.earth.rotation_rate_rad_s = cfg.rotation_rate_rad_s;
    params.earth.mu_m3_s2 = cfg.mu_m3_s2;
    params.channel.wavelength_m = cfg.wavelength_nm * 1e-9;
    params.channel.sat_radius_m = cfg.sat_radius_m;
    params.channel.gs_radius_m = cfg.gs_radius_m;
    params.channel.det_eff_sat = cfg.det_eff_sat;
    params.channel.det_eff_gs = cfg.det_eff_gs;
    params.channel.atm_zenith_transmittance = cfg.atm_zenith_transmittance;
    params.source.pair_rate_hz = cfg.pair_rate_hz;
    params.noise = cfg.noise;
    params.bell.n_runs = cfg.n_runs;
    params.bell.t_acq_s = cfg.t_acq_ms * 1e-3;
    params.bell.confidence_n = cfg.confidence_n;
    params.bell.min_valid_runs = cfg.min_valid_runs;
    params.slot_duration_s = cfg.slot_duration_ns * 1e-9;
    params.seed = cfg.seed;
    params.workers = resolve_workers(cfg.workers);
    return params;
}

std::vector<geodyn::OrbitSpec> constellation_orbits(const config::ScenarioConfig& cfg) {
    std::vector<geodyn::OrbitSpec> orbits;
    orbits.reserve(cfg.satellite_count);
    for (int k = 0; k < cfg.satellite_count; ++k) {
        geodyn::OrbitSpec orbit;
        orbit.altitude_m = cfg.altitude_km * 1e3;
        orbit.inclination_rad = mathutil::deg2rad(cfg.inclination_deg);
        orbit.raan_rad = mathutil::deg2rad(cfg.raan_deg);
        orbit.phase_at_epoch_rad =
            mathutil::deg2rad(cfg.phase_deg + 360.0 * k / cfg.satellite_count);
        orbits.push_back(orbit);
    }
    return orbits;
}

shadows::ShadowMap compute_shadow(const config::ScenarioConfig& cfg, double epoch_s) {
    const auto params = scenario_params(cfg);
    const auto grid = grid_of(cfg);
    const auto orbits = constellation_orbits(cfg);
    const auto& orbit = orbits.front();

    switch (cfg.scenario) {
        case config::ScenarioType::single_downlink:
            return shadows::bell_shadow_single_link(orbit, params, grid, epoch_s,
                                                    channel::Direction::downlink);
        case config::ScenarioType::single_uplink:
            return shadows::bell_shadow_single_link(orbit, params, grid, epoch_s,
                                                    channel::Direction::uplink);
        case config::ScenarioType::double_downlink:
            return shadows::bell_shadow_double_downlink(orbit, station(*cfg.fixed),
                                                        params, grid, epoch_s);
        case config::ScenarioType::swap_double:
            return shadows::bell_shadow_swapped(orbit, station(*cfg.fixed), params,
                                                grid, cfg.p_sw, epoch_s);
        case config::ScenarioType::constellation_double:
            return shadows::constellation_shadow(
                orbits, shadows::ConstellationMode::double_downlink, params, grid, epoch_s);
        case config::ScenarioType::constellation_repeater:
            return shadows::constellation_shadow(
                orbits, shadows::ConstellationMode::repeater, params, grid, epoch_s);
        case config::ScenarioType::qkd:
            return apps::qber_shadow(orbit, station(*cfg.fixed), params, qkd_of(cfg),
                                     grid, epoch_s);
        case config::ScenarioType::qcs_precision:
            return apps::precision_shadow(orbit, params, qcs_of(cfg), grid, epoch_s,
                                          false);
        case config::ScenarioType::qcs_secure:
            return apps::precision_shadow(orbit, params, qcs_of(cfg), grid, epoch_s,
                                          true);
        case config::ScenarioType::analytic_tables:
            break;
    }
    throw std::invalid_argument("scenario has no shadow-map form: analytic_tables");
}

RunResult run_scenario(const config::ScenarioConfig& cfg, Verb verb) {
    const auto t0 = std::chrono::steady_clock::now();
    OutputSet out;
    std::string verb_name;
    try {
        switch (verb) {
            case Verb::shadow: {
                verb_name = "shadow";
                if (cfg.scenario == config::ScenarioType::analytic_tables) {
                    throw std::invalid_argument(
                        "verb 'shadow' is incompatible with scenario analytic_tables");
                }
                const bool multi = cfg.epochs_s.size() > 1;
                for (std::size_t i = 0; i < cfg.epochs_s.size(); ++i) {
                    const auto map = compute_shadow(cfg, cfg.epochs_s[i]);
                    const std::string suffix = multi ? "_t" + std::to_string(i) : "";
                    write_map_outputs(out, cfg, map, suffix);
                }
                break;
            }
            case Verb::timeseries: {
                verb_name = "timeseries";
                if (!cfg.fixed || !cfg.second) {
                    throw std::invalid_argument(
                        "timeseries requires stations.fixed and stations.second");
                }
                if (cfg.t_end_s <= cfg.t_start_s) {
                    throw std::invalid_argument("timeseries.t_end_s must exceed t_start_s");
                }
                const auto series = apps::station_pair_timeseries(
                    constellation_orbits(cfg).front(), station(*cfg.fixed),
                    station(*cfg.second), scenario_params(cfg), qkd_of(cfg),
                    cfg.t_start_s, cfg.t_end_s, cfg.t_step_s);
                out.write(cfg.out_path + "_timeseries.csv", io::timeseries_to_csv(series));
                break;
            }
            case Verb::analytic: {
                verb_name = "analytic";
                out.write(cfg.out_path + "_ps.csv", analytic_tables_csv(cfg));
                out.write(cfg.out_path + "_summary.csv", analytic_summary_csv(cfg));
                break;
            }
            case Verb::sweep: {
                verb_name = "sweep";
                if (cfg.sweep_parameter.empty() || cfg.sweep_values.empty()) {
                    throw std::invalid_argument(
                        "sweep requires sweep.parameter and sweep.values");
                }
                std::string csv =
                    "parameter,value,violation_cells,violation_area_km2,visible_cells,"
                    "visible_area_km2\n";
                for (double value : cfg.sweep_values) {
                    const auto swept = apply_sweep_value(cfg, cfg.sweep_parameter, value);
                    const auto map = compute_shadow(swept, cfg.epochs_s.front());
                    csv += cfg.sweep_parameter;
                    csv += ',';
                    csv += fmt_double(value);
                    csv += ',';
                    csv += std::to_string(
                        shadows::shadow_cell_count(map, shadows::CellStatus::violation));
                    csv += ',';
                    csv += fmt_double(
                        shadows::shadow_area_km2(map, shadows::CellStatus::violation));
                    csv += ',';
                    csv += std::to_string(shadows::shadow_cell_count(
                        map, shadows::CellStatus::visible_no_violation));
                    csv += ',';
                    csv += fmt_double(shadows::shadow_area_km2(
                        map, shadows::CellStatus::visible_no_violation));
                    csv += '\n';
                }
                out.write(cfg.out_path + "_sweep.csv", csv);
                break;
            }
        }
    } catch (...) {
        out.discard_all();
        throw;
    }

    RunResult result;
    result.data_files = out.files();

    const double wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::json manifest;
    manifest["tool"] = std::string("bellsim ") + kVersion;
    manifest["verb"] = verb_name;
    manifest["seed"] = cfg.seed;
    manifest["config"] = config::serialize_config(cfg);
    manifest["outputs"] = result.data_files;
    manifest["wall_time_s"] = wall_s;
    const std::string manifest_path = cfg.out_path + ".manifest.json";
    const fs::path mp(manifest_path);
    if (mp.has_parent_path()) fs::create_directories(mp.parent_path());
    io::write_file(manifest_path, manifest.dump(1, '\t') + "\n");
    result.manifest_file = manifest_path;
    return result;
}

}  // namespace bellsim::scenario
