#include "bellsim/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace bellsim::io {

namespace {

using nlohmann::json;

// Fixed decimal formatting keeps CSV output byte-stable across runs.
std::string fmt(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

json cell_properties(const shadows::ShadowCell& cell, bool constellation) {
    json props;
    props["cell_id"] = cell.cell_id;
    props["status"] = shadows::to_string(cell.status);
    props["area_km2"] = cell.area_km2;
    if (cell.valid_runs > 0) {
        props["s_mean"] = cell.s_mean;
        props["s_std"] = cell.s_std;
    } else {
        props["s_mean"] = nullptr;
        props["s_std"] = nullptr;
    }
    props["valid_runs"] = cell.valid_runs;
    if (constellation) {
        props["satellite"] = cell.satellite;
        props["component"] = cell.component;
    }
    for (const auto& [key, value] : cell.aux) {
        if (std::isfinite(value)) {
            props[key] = value;
        } else {
            props[key] = nullptr;
        }
    }
    return props;
}

std::set<std::string> aux_columns(const shadows::ShadowMap& map) {
    std::set<std::string> keys;
    for (const auto& cell : map.cells) {
        for (const auto& [key, value] : cell.aux) keys.insert(key);
    }
    return keys;
}

}  // namespace

std::string shadow_map_to_geojson(const shadows::ShadowMap& map) {
    const bool constellation = map.scenario.rfind("constellation", 0) == 0;
    json root;
    root["type"] = "FeatureCollection";
    root["properties"] = {
        {"schema_version", kSchemaVersion},
        {"scenario", map.scenario},
        {"epoch_s", map.epoch_s},
        {"seed", map.seed},
        {"lat_step_deg", map.grid.lat_step_deg},
        {"lon_step_deg", map.grid.lon_step_deg},
        {"n_components", map.n_components},
    };
    json features = json::array();
    for (const auto& cell : map.cells) {
        json feature;
        feature["type"] = "Feature";
        feature["geometry"] = {{"type", "Point"},
                               {"coordinates", {cell.lon_deg, cell.lat_deg}}};
        feature["properties"] = cell_properties(cell, constellation);
        features.push_back(std::move(feature));
    }
    root["features"] = std::move(features);
    return root.dump(1, '\t') + "\n";
}

std::string shadow_map_to_csv(const shadows::ShadowMap& map) {
    const bool constellation = map.scenario.rfind("constellation", 0) == 0;
    const auto aux = aux_columns(map);
    std::string out = "lat,lon,status,s_mean,s_std,valid_runs,area_km2";
    if (constellation) out += ",satellite,component";
    for (const auto& key : aux) out += "," + key;
    out += "\n";
    for (const auto& cell : map.cells) {
        out += fmt(cell.lat_deg);
        out += ',';
        out += fmt(cell.lon_deg);
        out += ',';
        out += shadows::to_string(cell.status);
        out += ',';
        out += cell.valid_runs > 0 ? fmt(cell.s_mean) : "";
        out += ',';
        out += cell.valid_runs > 0 ? fmt(cell.s_std) : "";
        out += ',';
        out += std::to_string(cell.valid_runs);
        out += ',';
        out += fmt(cell.area_km2);
        if (constellation) {
            out += ',';
            out += std::to_string(cell.satellite);
            out += ',';
            out += std::to_string(cell.component);
        }
        for (const auto& key : aux) {
            out += ',';
            const auto it = cell.aux.find(key);
            if (it != cell.aux.end()) out += fmt(it->second);
        }
        out += '\n';
    }
    return out;
}

std::string timeseries_to_csv(const std::vector<apps::TimeSeriesPoint>& series) {
    std::string out = "t_s,visible,s_mean,s_std,qber_mean,qber_std\n";
    for (const auto& pt : series) {
        out += fmt(pt.t_s);
        out += ',';
        out += pt.visible ? "1" : "0";
        out += ',';
        if (pt.visible) {
            out += fmt(pt.s_mean);
            out += ',';
            out += fmt(pt.s_std);
            out += ',';
            if (pt.qber_defined) {
                out += fmt(pt.qber_mean);
                out += ',';
                out += fmt(pt.qber_std);
            } else {
                out += ',';
            }
        } else {
            out += ",,,";
        }
        out += '\n';
    }
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("cannot open output file: " + path);
    file.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!file) throw std::runtime_error("write failed: " + path);
}

}  // namespace bellsim::io
