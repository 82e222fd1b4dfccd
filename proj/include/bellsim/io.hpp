#pragma once

#include <string>
#include <vector>

#include "bellsim/apps.hpp"
#include "bellsim/shadows.hpp"

namespace bellsim::io {

inline constexpr int kSchemaVersion = 1;

// GeoJSON FeatureCollection with one Point feature per evaluated cell.
// Field names are documented in docs/output-schema.md.
std::string shadow_map_to_geojson(const shadows::ShadowMap& map);

// Flat CSV with one row per evaluated cell. Aux columns are the union of
// aux keys over all cells, in sorted order.
std::string shadow_map_to_csv(const shadows::ShadowMap& map);

std::string timeseries_to_csv(const std::vector<apps::TimeSeriesPoint>& series);

void write_file(const std::string& path, const std::string& content);

}  // namespace bellsim::io
