#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bellsim/belltest.hpp"
#include "bellsim/channel.hpp"
#include "bellsim/geodyn.hpp"
#include "bellsim/photonsim.hpp"

namespace bellsim::shadows {

enum class CellStatus : int {
    outside_visibility = 0,
    visible_no_violation = 1,
    violation = 2,
};

const char* to_string(CellStatus status);

// Regular lat/lon lattice over the whole globe. Cell ids are global, so RNG
// streams keyed by cell id are independent of which subregion is evaluated.
struct GeoGrid {
    double lat_step_deg = 0.25;
    double lon_step_deg = 0.25;

    int n_lat() const;
    int n_lon() const;
    std::uint64_t cell_id(int lat_index, int lon_index) const;
    double cell_lat_deg(int lat_index) const;
    double cell_lon_deg(int lon_index) const;
    // Exact spherical band area of one cell at the given latitude row.
    double cell_area_km2(int lat_index, double earth_radius_m) const;
    // Indices of the cell containing (lat, lon).
    int lat_index_of(double lat_deg) const;
    int lon_index_of(double lon_deg) const;
};

struct ShadowCell {
    std::uint64_t cell_id = 0;
    double lat_deg = 0.0;
    double lon_deg = 0.0;
    double area_km2 = 0.0;
    CellStatus status = CellStatus::outside_visibility;
    double s_mean = 0.0;
    double s_std = 0.0;
    int valid_runs = 0;
    int satellite = -1;  // owning satellite index in constellation maps
    int component = -1;  // connected-component id in constellation maps
    std::map<std::string, double> aux;  // scenario-specific scalars
};

struct ShadowMap {
    GeoGrid grid;
    std::vector<ShadowCell> cells;  // one entry per evaluated cell
    std::string scenario;
    double epoch_s = 0.0;
    std::uint64_t seed = 0;
    int n_components = 0;
};

// Everything a cell evaluation needs besides geometry.
struct ScenarioParams {
    geodyn::EarthModel earth;
    channel::ChannelParams channel;
    photonsim::SourceParams source;
    photonsim::NoiseParams noise;
    photonsim::MeasurementBases bases = photonsim::MeasurementBases::chsh_optimal();
    belltest::BellTestConfig bell;
    double slot_duration_s = 0.0;  // <= 0: one source period
    std::uint64_t seed = 0;
    int workers = 1;
};

// Bell shadow for a single link between the satellite and each grid cell.
// Downlink: source and one detector on the satellite (dark counts only),
// travelling partner to the cell (background + dark). Uplink: source and
// local detector at the cell, travelling partner to the satellite.
ShadowMap bell_shadow_single_link(const geodyn::OrbitSpec& orbit,
                                  const ScenarioParams& params, const GeoGrid& grid,
                                  double epoch_s, channel::Direction direction);

// Bell shadow between a fixed ground station and each grid cell, both arms
// downlinks from the satellite. Noise side A is the fixed station, side B
// the roaming cell. Throws if the fixed station cannot see the satellite.
ShadowMap bell_shadow_double_downlink(const geodyn::OrbitSpec& orbit,
                                      const geodyn::GroundStation& fixed_gs,
                                      const ScenarioParams& params, const GeoGrid& grid,
                                      double epoch_s);

// As the double downlink, but with the event stream produced by two
// independent stored downlinks combined through entanglement swapping.
ShadowMap bell_shadow_swapped(const geodyn::OrbitSpec& orbit,
                              const geodyn::GroundStation& fixed_gs,
                              const ScenarioParams& params, const GeoGrid& grid,
                              double p_sw, double epoch_s);

enum class ConstellationMode {
    double_downlink,  // per-satellite double-downlink shadows, fixed station at nadir
    repeater,         // per-satellite single-downlink shadows, satellites linked
};

// Union of per-satellite shadows with connected-component labels. In
// double_downlink mode components merge only through shared cells; in
// repeater mode they also merge through chains of mutually visible
// satellites.
ShadowMap constellation_shadow(const std::vector<geodyn::OrbitSpec>& orbits,
                               ConstellationMode mode, const ScenarioParams& params,
                               const GeoGrid& grid, double epoch_s);

// Sum of cell areas with status >= filter.
double shadow_area_km2(const ShadowMap& map, CellStatus filter);

// Number of cells with status >= filter.
std::size_t shadow_cell_count(const ShadowMap& map, CellStatus filter);

// Cell-wise set operations over maps on the same grid. Intersection keeps
// the weaker status per cell (missing counts as outside_visibility); union
// keeps the stronger one. Statistics ride along from the cell that decided
// the status.
ShadowMap shadow_intersection(const ShadowMap& a, const ShadowMap& b);
ShadowMap shadow_union(const ShadowMap& a, const ShadowMap& b);

// Cells whose centers lie within the visibility cap(s), plus a surrounding
// margin ring marked outside_visibility. Exposed for reuse by the apps
// module.
std::vector<ShadowCell> seed_cells(const GeoGrid& grid,
                                   const std::vector<geodyn::VisibilityCap>& caps,
                                   const geodyn::EarthModel& earth);

}  // namespace bellsim::shadows
