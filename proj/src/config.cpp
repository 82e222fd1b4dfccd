#include "bellsim/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace bellsim::config {

namespace {

constexpr std::array<const char*, 10> kScenarioNames = {
    "single_downlink",     "single_uplink",
    "double_downlink",     "swap_double",
    "constellation_double", "constellation_repeater",
    "qkd",                 "qcs_precision",
    "qcs_secure",          "analytic_tables",
};

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::string fmt_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_doubles(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += fmt_double(values[i]);
    }
    return out;
}

struct Diagnostics {
    std::vector<std::string> errors;
    void add(int line, const std::string& field, const std::string& message) {
        std::ostringstream os;
        if (line > 0) os << "line " << line << ": ";
        if (!field.empty()) os << field << ": ";
        os << message;
        errors.push_back(os.str());
    }
};

bool parse_double(const std::string& text, double& out) {
    const std::string t = trim(text);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

bool parse_int(const std::string& text, long long& out) {
    const std::string t = trim(text);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtoll(t.c_str(), &end, 10);
    return end == t.c_str() + t.size();
}

bool parse_double_list(const std::string& text, std::vector<double>& out) {
    out.clear();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double v;
        if (!parse_double(item, v)) return false;
        out.push_back(v);
    }
    return !out.empty();
}

bool parse_station(const std::string& text, StationSpec& out) {
    std::stringstream ss(text);
    std::string lat, lon;
    if (!std::getline(ss, lat, ',') || !std::getline(ss, lon, ',')) return false;
    if (!parse_double(lat, out.lat_deg) || !parse_double(lon, out.lon_deg)) return false;
    std::string name;
    std::getline(ss, name);
    out.name = trim(name);
    return true;
}

// One settable key: how to parse it into the config and how to print it back.
struct KeyHandler {
    std::function<bool(ScenarioConfig&, const std::string&)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

using KeyTable = std::map<std::string, std::map<std::string, KeyHandler>>;

KeyHandler double_key(double ScenarioConfig::* member) {
    return {
        [member](ScenarioConfig& cfg, const std::string& v) {
            return parse_double(v, cfg.*member);
        },
        [member](const ScenarioConfig& cfg) { return fmt_double(cfg.*member); },
    };
}

KeyHandler int_key(int ScenarioConfig::* member) {
    return {
        [member](ScenarioConfig& cfg, const std::string& v) {
            long long value;
            if (!parse_int(v, value)) return false;
            cfg.*member = static_cast<int>(value);
            return true;
        },
        [member](const ScenarioConfig& cfg) { return std::to_string(cfg.*member); },
    };
}

KeyHandler list_key(std::vector<double> ScenarioConfig::* member) {
    return {
        [member](ScenarioConfig& cfg, const std::string& v) {
            return parse_double_list(v, cfg.*member);
        },
        [member](const ScenarioConfig& cfg) { return join_doubles(cfg.*member); },
    };
}

KeyHandler station_key(std::optional<StationSpec> ScenarioConfig::* member) {
    return {
        [member](ScenarioConfig& cfg, const std::string& v) {
            StationSpec s;
            if (!parse_station(v, s)) return false;
            cfg.*member = s;
            return true;
        },
        [member](const ScenarioConfig& cfg) -> std::string {
            if (!(cfg.*member)) return "";
            const StationSpec& s = *(cfg.*member);
            std::string out = fmt_double(s.lat_deg) + ", " + fmt_double(s.lon_deg);
            if (!s.name.empty()) out += ", " + s.name;
            return out;
        },
    };
}

template <typename T>
KeyHandler nested_double_key(T ScenarioConfig::* outer, double T::* inner) {
    return {
        [outer, inner](ScenarioConfig& cfg, const std::string& v) {
            return parse_double(v, cfg.*outer.*inner);
        },
        [outer, inner](const ScenarioConfig& cfg) {
            return fmt_double(cfg.*outer.*inner);
        },
    };
}

const KeyTable& key_table() {
    static const KeyTable table = [] {
        KeyTable t;
        t["scenario"]["type"] = {
            [](ScenarioConfig& cfg, const std::string& v) {
                const auto type = scenario_from_string(trim(v));
                if (!type) return false;
                cfg.scenario = *type;
                return true;
            },
            [](const ScenarioConfig& cfg) { return std::string(to_string(cfg.scenario)); },
        };
        t["scenario"]["epochs_s"] = list_key(&ScenarioConfig::epochs_s);
        t["scenario"]["seed"] = {
            [](ScenarioConfig& cfg, const std::string& v) {
                long long value;
                if (!parse_int(v, value) || value < 0) return false;
                cfg.seed = static_cast<std::uint64_t>(value);
                return true;
            },
            [](const ScenarioConfig& cfg) { return std::to_string(cfg.seed); },
        };

        t["earth"]["radius_km"] = double_key(&ScenarioConfig::radius_km);
        t["earth"]["rotation_rate_rad_s"] = double_key(&ScenarioConfig::rotation_rate_rad_s);
        t["earth"]["mu_m3_s2"] = double_key(&ScenarioConfig::mu_m3_s2);

        t["orbit"]["altitude_km"] = double_key(&ScenarioConfig::altitude_km);
        t["orbit"]["inclination_deg"] = double_key(&ScenarioConfig::inclination_deg);
        t["orbit"]["raan_deg"] = double_key(&ScenarioConfig::raan_deg);
        t["orbit"]["phase_deg"] = double_key(&ScenarioConfig::phase_deg);
        t["orbit"]["satellite_count"] = int_key(&ScenarioConfig::satellite_count);

        t["channel"]["wavelength_nm"] = double_key(&ScenarioConfig::wavelength_nm);
        t["channel"]["sat_radius_m"] = double_key(&ScenarioConfig::sat_radius_m);
        t["channel"]["gs_radius_m"] = double_key(&ScenarioConfig::gs_radius_m);
        t["channel"]["det_eff_sat"] = double_key(&ScenarioConfig::det_eff_sat);
        t["channel"]["det_eff_gs"] = double_key(&ScenarioConfig::det_eff_gs);
        t["channel"]["atm_zenith_transmittance"] =
            double_key(&ScenarioConfig::atm_zenith_transmittance);

        t["source"]["pair_rate_hz"] = double_key(&ScenarioConfig::pair_rate_hz);

        t["noise"]["bkg_rate_a_hz"] =
            nested_double_key(&ScenarioConfig::noise, &photonsim::NoiseParams::bkg_rate_a_hz);
        t["noise"]["bkg_rate_b_hz"] =
            nested_double_key(&ScenarioConfig::noise, &photonsim::NoiseParams::bkg_rate_b_hz);
        t["noise"]["dark_rate_a_hz"] =
            nested_double_key(&ScenarioConfig::noise, &photonsim::NoiseParams::dark_rate_a_hz);
        t["noise"]["dark_rate_b_hz"] =
            nested_double_key(&ScenarioConfig::noise, &photonsim::NoiseParams::dark_rate_b_hz);

        t["belltest"]["n_runs"] = int_key(&ScenarioConfig::n_runs);
        t["belltest"]["t_acq_ms"] = double_key(&ScenarioConfig::t_acq_ms);
        t["belltest"]["confidence_n"] = double_key(&ScenarioConfig::confidence_n);
        t["belltest"]["min_valid_runs"] = int_key(&ScenarioConfig::min_valid_runs);
        t["belltest"]["slot_duration_ns"] = double_key(&ScenarioConfig::slot_duration_ns);

        t["grid"]["lat_step_deg"] = double_key(&ScenarioConfig::lat_step_deg);
        t["grid"]["lon_step_deg"] = double_key(&ScenarioConfig::lon_step_deg);

        t["stations"]["fixed"] = station_key(&ScenarioConfig::fixed);
        t["stations"]["second"] = station_key(&ScenarioConfig::second);

        t["swap"]["p_sw"] = double_key(&ScenarioConfig::p_sw);

        t["qkd"]["qber_threshold"] = double_key(&ScenarioConfig::qber_threshold);
        t["qkd"]["key_fraction"] = double_key(&ScenarioConfig::key_fraction);

        t["qcs"]["n_min"] = double_key(&ScenarioConfig::n_min);
        t["qcs"]["target_precision_ns"] = double_key(&ScenarioConfig::target_precision_ns);
        t["qcs"]["sat_bkg_rate_hz"] = double_key(&ScenarioConfig::sat_bkg_rate_hz);

        t["timeseries"]["t_start_s"] = double_key(&ScenarioConfig::t_start_s);
        t["timeseries"]["t_end_s"] = double_key(&ScenarioConfig::t_end_s);
        t["timeseries"]["t_step_s"] = double_key(&ScenarioConfig::t_step_s);

        t["analytic"]["p1_values"] = list_key(&ScenarioConfig::p1_values);
        t["analytic"]["nbar_values"] = list_key(&ScenarioConfig::nbar_values);

        t["sweep"]["parameter"] = {
            [](ScenarioConfig& cfg, const std::string& v) {
                cfg.sweep_parameter = trim(v);
                return true;
            },
            [](const ScenarioConfig& cfg) { return cfg.sweep_parameter; },
        };
        t["sweep"]["values"] = list_key(&ScenarioConfig::sweep_values);

        t["output"]["path"] = {
            [](ScenarioConfig& cfg, const std::string& v) {
                cfg.out_path = trim(v);
                return !cfg.out_path.empty();
            },
            [](const ScenarioConfig& cfg) { return cfg.out_path; },
        };
        t["output"]["format"] = {
            [](ScenarioConfig& cfg, const std::string& v) {
                cfg.format = trim(v);
                return cfg.format == "geojson" || cfg.format == "csv" ||
                       cfg.format == "both";
            },
            [](const ScenarioConfig& cfg) { return cfg.format; },
        };
        t["output"]["workers"] = int_key(&ScenarioConfig::workers);
        return t;
    }();
    return table;
}

bool needs_fixed_station(ScenarioType type) {
    switch (type) {
        case ScenarioType::double_downlink:
        case ScenarioType::swap_double:
        case ScenarioType::qkd:
            return true;
        default:
            return false;
    }
}

}  // namespace

const char* to_string(ScenarioType type) {
    return kScenarioNames[static_cast<int>(type)];
}

std::optional<ScenarioType> scenario_from_string(const std::string& name) {
    for (std::size_t i = 0; i < kScenarioNames.size(); ++i) {
        if (name == kScenarioNames[i]) return static_cast<ScenarioType>(i);
    }
    return std::nullopt;
}

std::vector<std::string> validate(const ScenarioConfig& cfg) {
    std::vector<std::string> errors;
    auto require = [&](bool ok, const std::string& field, const std::string& message) {
        if (!ok) errors.push_back(field + ": " + message);
    };

    require(cfg.radius_km > 0, "earth.radius_km", "must be > 0");
    require(cfg.rotation_rate_rad_s >= 0, "earth.rotation_rate_rad_s", "must be >= 0");
    require(cfg.mu_m3_s2 > 0, "earth.mu_m3_s2", "must be > 0");
    require(cfg.altitude_km > 0, "orbit.altitude_km", "must be > 0");
    require(cfg.inclination_deg >= 0 && cfg.inclination_deg <= 180,
            "orbit.inclination_deg", "must lie in [0, 180]");
    require(cfg.satellite_count >= 1, "orbit.satellite_count", "must be >= 1");
    require(cfg.wavelength_nm > 0, "channel.wavelength_nm", "must be > 0");
    require(cfg.sat_radius_m > 0, "channel.sat_radius_m", "must be > 0");
    require(cfg.gs_radius_m > 0, "channel.gs_radius_m", "must be > 0");
    for (const auto& [field, value] :
         {std::pair<const char*, double>{"channel.det_eff_sat", cfg.det_eff_sat},
          {"channel.det_eff_gs", cfg.det_eff_gs},
          {"channel.atm_zenith_transmittance", cfg.atm_zenith_transmittance},
          {"qkd.key_fraction", cfg.key_fraction},
          {"swap.p_sw", cfg.p_sw}}) {
        require(value >= 0.0 && value <= 1.0, field, "must lie in [0, 1]");
    }
    require(cfg.pair_rate_hz > 0, "source.pair_rate_hz", "must be > 0");
    for (const auto& [field, value] :
         {std::pair<const char*, double>{"noise.bkg_rate_a_hz", cfg.noise.bkg_rate_a_hz},
          {"noise.bkg_rate_b_hz", cfg.noise.bkg_rate_b_hz},
          {"noise.dark_rate_a_hz", cfg.noise.dark_rate_a_hz},
          {"noise.dark_rate_b_hz", cfg.noise.dark_rate_b_hz},
          {"qcs.sat_bkg_rate_hz", cfg.sat_bkg_rate_hz}}) {
        require(value >= 0.0, field, "must be >= 0");
    }
    require(cfg.n_runs >= 2, "belltest.n_runs", "must be >= 2");
    require(cfg.t_acq_ms > 0, "belltest.t_acq_ms", "must be > 0");
    require(cfg.confidence_n > 0, "belltest.confidence_n", "must be > 0");
    require(cfg.min_valid_runs >= 1, "belltest.min_valid_runs", "must be >= 1");
    require(cfg.slot_duration_ns >= 0, "belltest.slot_duration_ns", "must be >= 0");
    require(cfg.lat_step_deg > 0, "grid.lat_step_deg", "must be > 0");
    require(cfg.lon_step_deg > 0, "grid.lon_step_deg", "must be > 0");
    require(cfg.qber_threshold > 0 && cfg.qber_threshold < 0.5, "qkd.qber_threshold",
            "must lie in (0, 0.5)");
    require(cfg.n_min >= 1, "qcs.n_min", "must be >= 1");
    require(cfg.target_precision_ns > 0, "qcs.target_precision_ns", "must be > 0");
    require(cfg.t_step_s > 0, "timeseries.t_step_s", "must be > 0");
    require(!cfg.epochs_s.empty(), "scenario.epochs_s", "must list at least one epoch");
    require(cfg.workers >= 0, "output.workers", "must be >= 0");
    for (const auto& spec : {cfg.fixed, cfg.second}) {
        if (!spec) continue;
        require(spec->lat_deg >= -90 && spec->lat_deg <= 90, "stations",
                "latitude must lie in [-90, 90]");
        require(spec->lon_deg >= -180 && spec->lon_deg < 360, "stations",
                "longitude must lie in [-180, 360)");
    }
    if (needs_fixed_station(cfg.scenario) && !cfg.fixed) {
        errors.push_back("stations.fixed: required for scenario " +
                         std::string(to_string(cfg.scenario)));
    }
    for (double p1 : cfg.p1_values) {
        require(p1 >= 0.0 && p1 <= 1.0, "analytic.p1_values", "entries must lie in [0, 1]");
    }
    for (double nbar : cfg.nbar_values) {
        require(nbar > 0.0, "analytic.nbar_values", "entries must be > 0");
    }
    return errors;
}

ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig cfg;
    Diagnostics diag;
    const KeyTable& table = key_table();

    std::istringstream stream(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    bool scenario_seen = false;
    while (std::getline(stream, raw)) {
        ++line_no;
        std::string line = raw;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                diag.add(line_no, "", "malformed section header");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            if (table.find(section) == table.end()) {
                diag.add(line_no, section, "unknown section");
                section.clear();
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            diag.add(line_no, "", "expected key = value");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) {
            diag.add(line_no, key, "key outside any known section");
            continue;
        }
        const auto& section_table = table.at(section);
        const auto handler = section_table.find(key);
        if (handler == section_table.end()) {
            diag.add(line_no, section + "." + key, "unknown key");
            continue;
        }
        if (!handler->second.set(cfg, value)) {
            diag.add(line_no, section + "." + key, "invalid value '" + value + "'");
            continue;
        }
        if (section == "scenario" && key == "type") scenario_seen = true;
    }

    if (!scenario_seen) diag.add(0, "scenario.type", "missing (fatal)");
    for (const auto& error : validate(cfg)) diag.add(0, "", error);

    if (!diag.errors.empty()) {
        std::string message = "config errors:";
        for (const auto& error : diag.errors) message += "\n  " + error;
        throw ConfigError(message);
    }
    return cfg;
}

ScenarioConfig load_config_file(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return parse_config(buffer.str());
}

std::string serialize_config(const ScenarioConfig& cfg) {
    const KeyTable& table = key_table();
    std::string out;
    for (const auto& [section, keys] : table) {
        std::string body;
        for (const auto& [key, handler] : keys) {
            const std::string value = handler.get(cfg);
            if (value.empty()) continue;  // unset optional entries
            body += key + " = " + value + "\n";
        }
        if (body.empty()) continue;
        out += "[" + section + "]\n" + body + "\n";
    }
    return out;
}

}  // namespace bellsim::config
