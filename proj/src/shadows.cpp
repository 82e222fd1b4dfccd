#include "bellsim/shadows.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "bellsim/parallel.hpp"

namespace bellsim::shadows {

namespace {

constexpr std::uint64_t kPurposeSingle = 0;
constexpr std::uint64_t kPurposeLink1 = 1;
constexpr std::uint64_t kPurposeLink2 = 2;
// Constellation evaluations offset the purpose by satellite index so that
// overlapping caps draw independent streams.
constexpr std::uint64_t kPurposeSatStride = 16;

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

const char* to_string(CellStatus status) {
    switch (status) {
        case CellStatus::outside_visibility: return "outside_visibility";
        case CellStatus::visible_no_violation: return "visible_no_violation";
        case CellStatus::violation: return "violation";
    }
    return "unknown";
}

int GeoGrid::n_lat() const {
    return static_cast<int>(std::lround(180.0 / lat_step_deg));
}

int GeoGrid::n_lon() const {
    return static_cast<int>(std::lround(360.0 / lon_step_deg));
}

std::uint64_t GeoGrid::cell_id(int lat_index, int lon_index) const {
    return static_cast<std::uint64_t>(lat_index) * static_cast<std::uint64_t>(n_lon()) +
           static_cast<std::uint64_t>(lon_index);
}

double GeoGrid::cell_lat_deg(int lat_index) const {
    return -90.0 + (lat_index + 0.5) * lat_step_deg;
}

double GeoGrid::cell_lon_deg(int lon_index) const {
    return -180.0 + (lon_index + 0.5) * lon_step_deg;
}

double GeoGrid::cell_area_km2(int lat_index, double earth_radius_m) const {
    const double lat_lo = mathutil::deg2rad(-90.0 + lat_index * lat_step_deg);
    const double lat_hi = mathutil::deg2rad(-90.0 + (lat_index + 1) * lat_step_deg);
    const double dlon = mathutil::deg2rad(lon_step_deg);
    const double r_km = earth_radius_m / 1000.0;
    return r_km * r_km * dlon * (std::sin(lat_hi) - std::sin(lat_lo));
}

int GeoGrid::lat_index_of(double lat_deg) const {
    int i = static_cast<int>(std::floor((lat_deg + 90.0) / lat_step_deg));
    return std::clamp(i, 0, n_lat() - 1);
}

int GeoGrid::lon_index_of(double lon_deg) const {
    int j = static_cast<int>(std::floor((lon_deg + 180.0) / lon_step_deg));
    return std::clamp(j, 0, n_lon() - 1);
}

std::vector<ShadowCell> seed_cells(const GeoGrid& grid,
                                   const std::vector<geodyn::VisibilityCap>& caps,
                                   const geodyn::EarthModel& earth) {
    const double margin_rad =
        mathutil::deg2rad(2.0 * std::max(grid.lat_step_deg, grid.lon_step_deg));
    std::vector<ShadowCell> cells;
    for (int i = 0; i < grid.n_lat(); ++i) {
        const double lat = mathutil::deg2rad(grid.cell_lat_deg(i));
        for (int j = 0; j < grid.n_lon(); ++j) {
            const double lon = mathutil::deg2rad(grid.cell_lon_deg(j));
            bool near = false;
            for (const auto& cap : caps) {
                const double dist = geodyn::central_angle_rad(cap.center_lat_rad,
                                                              cap.center_lon_rad, lat, lon);
                if (dist <= cap.central_angle_rad + margin_rad) {
                    near = true;
                    break;
                }
            }
            if (!near) continue;
            ShadowCell cell;
            cell.cell_id = grid.cell_id(i, j);
            cell.lat_deg = grid.cell_lat_deg(i);
            cell.lon_deg = grid.cell_lon_deg(j);
            cell.area_km2 = grid.cell_area_km2(i, earth.radius_m);
            cells.push_back(cell);
        }
    }
    return cells;
}

namespace {

// Shared per-cell Bell evaluation loop. The eta_for_run callback returns the
// (eta_a, eta_b) pair for one run, or false when the link is broken.
template <typename EtaFn>
belltest::BellTestResult evaluate_cell(const ScenarioParams& params,
                                       std::uint64_t cell_id, double epoch_s,
                                       std::uint64_t purpose, const EtaFn& eta_for_run) {
    std::vector<std::optional<double>> per_run;
    per_run.reserve(params.bell.n_runs);
    for (int r = 0; r < params.bell.n_runs; ++r) {
        const double t = epoch_s + r * params.bell.t_acq_s;
        double eta_a = 0.0, eta_b = 0.0;
        if (!eta_for_run(t, eta_a, eta_b)) {
            per_run.push_back(std::nullopt);
            continue;
        }
        photonsim::RunConfig rc;
        rc.t_acq_s = params.bell.t_acq_s;
        rc.eta_a = eta_a;
        rc.eta_b = eta_b;
        rc.slot_duration_s = params.slot_duration_s;
        rc.stream = rng::StreamKey{params.seed, cell_id,
                                   static_cast<std::uint64_t>(r), purpose};
        per_run.push_back(belltest::chsh_from_records(
            photonsim::simulate_run(params.source, params.noise, params.bases, rc)));
    }
    return belltest::aggregate_runs(per_run, params.bell);
}

template <typename SwapEtaFn>
belltest::BellTestResult evaluate_cell_swapped(const ScenarioParams& params,
                                               std::uint64_t cell_id, double epoch_s,
                                               double p_sw, const SwapEtaFn& eta_for_run) {
    std::vector<std::optional<double>> per_run;
    per_run.reserve(params.bell.n_runs);
    const photonsim::SwapConfig swap{p_sw, false};
    for (int r = 0; r < params.bell.n_runs; ++r) {
        const double t = epoch_s + r * params.bell.t_acq_s;
        double eta_fixed = 0.0, eta_cell = 0.0;
        if (!eta_for_run(t, eta_fixed, eta_cell)) {
            per_run.push_back(std::nullopt);
            continue;
        }
        photonsim::RunConfig link1;
        link1.t_acq_s = params.bell.t_acq_s;
        link1.eta_a = 1.0;  // satellite memory arm
        link1.eta_b = eta_fixed;
        link1.slot_duration_s = params.slot_duration_s;
        link1.stream = rng::StreamKey{params.seed, cell_id,
                                      static_cast<std::uint64_t>(r), kPurposeLink1};
        photonsim::RunConfig link2 = link1;
        link2.eta_b = eta_cell;
        link2.stream.purpose = kPurposeLink2;
        per_run.push_back(belltest::chsh_from_records(photonsim::simulate_swap_run(
            link1, link2, params.source, params.noise, params.bases, swap)));
    }
    return belltest::aggregate_runs(per_run, params.bell);
}

void store_result(ShadowCell& cell, const belltest::BellTestResult& res) {
    cell.s_mean = res.s_mean;
    cell.s_std = res.s_std;
    cell.valid_runs = res.valid_runs;
    cell.status = res.verdict ? CellStatus::violation : CellStatus::visible_no_violation;
}

ShadowMap make_map(const GeoGrid& grid, const ScenarioParams& params,
                   const std::string& scenario, double epoch_s) {
    ShadowMap map;
    map.grid = grid;
    map.scenario = scenario;
    map.epoch_s = epoch_s;
    map.seed = params.seed;
    return map;
}

}  // namespace

ShadowMap bell_shadow_single_link(const geodyn::OrbitSpec& orbit,
                                  const ScenarioParams& params, const GeoGrid& grid,
                                  double epoch_s, channel::Direction direction) {
    ShadowMap map = make_map(grid, params,
                             direction == channel::Direction::downlink
                                 ? "single_downlink"
                                 : "single_uplink",
                             epoch_s);
    const auto sat0 = geodyn::propagate(orbit, params.earth, epoch_s);
    const auto cap = geodyn::visibility_footprint(sat0, params.earth);
    map.cells = seed_cells(grid, {cap}, params.earth);

    const double eta_local = channel::local_arm_efficiency(params.channel, direction);
    parallel::for_index(map.cells.size(), params.workers, [&](std::size_t idx) {
        ShadowCell& cell = map.cells[idx];
        geodyn::GroundStation gs{mathutil::deg2rad(cell.lat_deg),
                                 mathutil::deg2rad(cell.lon_deg), ""};
        const auto geom0 = geodyn::link_geometry(sat0, gs, params.earth, epoch_s);
        if (!geom0.visible) {
            cell.status = CellStatus::outside_visibility;
            return;
        }
        auto res = evaluate_cell(
            params, cell.cell_id, epoch_s, kPurposeSingle,
            [&](double t, double& eta_a, double& eta_b) {
                const auto sat = geodyn::propagate(orbit, params.earth, t);
                const auto geom = geodyn::link_geometry(sat, gs, params.earth, t);
                if (!geom.visible) return false;
                eta_a = eta_local;
                eta_b = channel::receiver_arm_efficiency(params.channel, geom, direction);
                return true;
            });
        store_result(cell, res);
    });
    return map;
}

ShadowMap bell_shadow_double_downlink(const geodyn::OrbitSpec& orbit,
                                      const geodyn::GroundStation& fixed_gs,
                                      const ScenarioParams& params, const GeoGrid& grid,
                                      double epoch_s) {
    const auto sat0 = geodyn::propagate(orbit, params.earth, epoch_s);
    if (!geodyn::link_geometry(sat0, fixed_gs, params.earth, epoch_s).visible) {
        throw std::invalid_argument(
            "bell_shadow_double_downlink: fixed station cannot see the satellite");
    }
    ShadowMap map = make_map(grid, params, "double_downlink", epoch_s);
    const auto cap = geodyn::visibility_footprint(sat0, params.earth);
    map.cells = seed_cells(grid, {cap}, params.earth);

    parallel::for_index(map.cells.size(), params.workers, [&](std::size_t idx) {
        ShadowCell& cell = map.cells[idx];
        geodyn::GroundStation gs{mathutil::deg2rad(cell.lat_deg),
                                 mathutil::deg2rad(cell.lon_deg), ""};
        const auto geom0 = geodyn::link_geometry(sat0, gs, params.earth, epoch_s);
        if (!geom0.visible) {
            cell.status = CellStatus::outside_visibility;
            return;
        }
        auto res = evaluate_cell(
            params, cell.cell_id, epoch_s, kPurposeSingle,
            [&](double t, double& eta_a, double& eta_b) {
                const auto sat = geodyn::propagate(orbit, params.earth, t);
                const auto geom_fixed =
                    geodyn::link_geometry(sat, fixed_gs, params.earth, t);
                const auto geom_cell = geodyn::link_geometry(sat, gs, params.earth, t);
                if (!geom_fixed.visible || !geom_cell.visible) return false;
                eta_a = channel::receiver_arm_efficiency(params.channel, geom_fixed,
                                                         channel::Direction::downlink);
                eta_b = channel::receiver_arm_efficiency(params.channel, geom_cell,
                                                         channel::Direction::downlink);
                return true;
            });
        store_result(cell, res);
    });
    return map;
}

ShadowMap bell_shadow_swapped(const geodyn::OrbitSpec& orbit,
                              const geodyn::GroundStation& fixed_gs,
                              const ScenarioParams& params, const GeoGrid& grid,
                              double p_sw, double epoch_s) {
    if (p_sw < 0.0 || p_sw > 1.0)
        throw std::invalid_argument("p_sw must lie in [0, 1]");
    const auto sat0 = geodyn::propagate(orbit, params.earth, epoch_s);
    if (!geodyn::link_geometry(sat0, fixed_gs, params.earth, epoch_s).visible) {
        throw std::invalid_argument(
            "bell_shadow_swapped: fixed station cannot see the satellite");
    }
    ShadowMap map = make_map(grid, params, "swap_double", epoch_s);
    const auto cap = geodyn::visibility_footprint(sat0, params.earth);
    map.cells = seed_cells(grid, {cap}, params.earth);

    parallel::for_index(map.cells.size(), params.workers, [&](std::size_t idx) {
        ShadowCell& cell = map.cells[idx];
        geodyn::GroundStation gs{mathutil::deg2rad(cell.lat_deg),
                                 mathutil::deg2rad(cell.lon_deg), ""};
        const auto geom0 = geodyn::link_geometry(sat0, gs, params.earth, epoch_s);
        if (!geom0.visible) {
            cell.status = CellStatus::outside_visibility;
            return;
        }
        auto res = evaluate_cell_swapped(
            params, cell.cell_id, epoch_s, p_sw,
            [&](double t, double& eta_fixed, double& eta_cell) {
                const auto sat = geodyn::propagate(orbit, params.earth, t);
                const auto geom_fixed =
                    geodyn::link_geometry(sat, fixed_gs, params.earth, t);
                const auto geom_cell = geodyn::link_geometry(sat, gs, params.earth, t);
                if (!geom_fixed.visible || !geom_cell.visible) return false;
                eta_fixed = channel::receiver_arm_efficiency(params.channel, geom_fixed,
                                                             channel::Direction::downlink);
                eta_cell = channel::receiver_arm_efficiency(params.channel, geom_cell,
                                                            channel::Direction::downlink);
                return true;
            });
        store_result(cell, res);
    });
    return map;
}

ShadowMap constellation_shadow(const std::vector<geodyn::OrbitSpec>& orbits,
                               ConstellationMode mode, const ScenarioParams& params,
                               const GeoGrid& grid, double epoch_s) {
    if (orbits.empty())
        throw std::invalid_argument("constellation_shadow: need at least one satellite");

    const int n_sats = static_cast<int>(orbits.size());
    std::vector<geodyn::SatelliteState> sats;
    sats.reserve(n_sats);
    for (const auto& orbit : orbits)
        sats.push_back(geodyn::propagate(orbit, params.earth, epoch_s));

    // Per-satellite shadow maps, evaluated over each satellite's own cap.
    std::vector<ShadowMap> per_sat(n_sats);
    for (int s = 0; s < n_sats; ++s) {
        // Offset the stream purpose so overlapping caps stay independent.
        const std::uint64_t purpose_base = kPurposeSatStride * (s + 1);
        const auto cap = geodyn::visibility_footprint(sats[s], params.earth);
        ShadowMap map = make_map(grid, params, "constellation", epoch_s);
        map.cells = seed_cells(grid, {cap}, params.earth);

        if (mode == ConstellationMode::double_downlink) {
            geodyn::GroundStation nadir{cap.center_lat_rad, cap.center_lon_rad, ""};
            parallel::for_index(map.cells.size(), params.workers, [&](std::size_t idx) {
                ShadowCell& cell = map.cells[idx];
                geodyn::GroundStation gs{mathutil::deg2rad(cell.lat_deg),
                                         mathutil::deg2rad(cell.lon_deg), ""};
                const auto geom0 =
                    geodyn::link_geometry(sats[s], gs, params.earth, epoch_s);
                if (!geom0.visible) {
                    cell.status = CellStatus::outside_visibility;
                    return;
                }
                auto res = evaluate_cell(
                    params, cell.cell_id, epoch_s, purpose_base,
                    [&](double t, double& eta_a, double& eta_b) {
                        const auto sat = geodyn::propagate(orbits[s], params.earth, t);
                        const auto gf = geodyn::link_geometry(sat, nadir, params.earth, t);
                        const auto gc = geodyn::link_geometry(sat, gs, params.earth, t);
                        if (!gf.visible || !gc.visible) return false;
                        eta_a = channel::receiver_arm_efficiency(
                            params.channel, gf, channel::Direction::downlink);
                        eta_b = channel::receiver_arm_efficiency(
                            params.channel, gc, channel::Direction::downlink);
                        return true;
                    });
                store_result(cell, res);
                cell.satellite = s;
            });
        } else {
            const double eta_local = channel::local_arm_efficiency(
                params.channel, channel::Direction::downlink);
            parallel::for_index(map.cells.size(), params.workers, [&](std::size_t idx) {
                ShadowCell& cell = map.cells[idx];
                geodyn::GroundStation gs{mathutil::deg2rad(cell.lat_deg),
                                         mathutil::deg2rad(cell.lon_deg), ""};
                const auto geom0 =
                    geodyn::link_geometry(sats[s], gs, params.earth, epoch_s);
                if (!geom0.visible) {
                    cell.status = CellStatus::outside_visibility;
                    return;
                }
                auto res = evaluate_cell(
                    params, cell.cell_id, epoch_s, purpose_base,
                    [&](double t, double& eta_a, double& eta_b) {
                        const auto sat = geodyn::propagate(orbits[s], params.earth, t);
                        const auto geom = geodyn::link_geometry(sat, gs, params.earth, t);
                        if (!geom.visible) return false;
                        eta_a = eta_local;
                        eta_b = channel::receiver_arm_efficiency(
                            params.channel, geom, channel::Direction::downlink);
                        return true;
                    });
                store_result(cell, res);
                cell.satellite = s;
            });
        }
        per_sat[s] = std::move(map);
    }

    // Merge per-satellite cells; track which satellites put a violation on
    // each cell so overlapping shadows can bridge components.
    ShadowMap merged = make_map(grid, params,
                                mode == ConstellationMode::double_downlink
                                    ? "constellation_double"
                                    : "constellation_repeater",
                                epoch_s);
    std::unordered_map<std::uint64_t, std::size_t> index_of;
    std::unordered_map<std::uint64_t, std::vector<int>> violators;
    for (int s = 0; s < n_sats; ++s) {
        for (const auto& cell : per_sat[s].cells) {
            auto [it, inserted] = index_of.try_emplace(cell.cell_id, merged.cells.size());
            if (inserted) {
                merged.cells.push_back(cell);
            } else {
                ShadowCell& existing = merged.cells[it->second];
                if (static_cast<int>(cell.status) > static_cast<int>(existing.status)) {
                    existing = cell;
                }
            }
            if (cell.status == CellStatus::violation)
                violators[cell.cell_id].push_back(s);
        }
    }
    std::sort(merged.cells.begin(), merged.cells.end(),
              [](const ShadowCell& a, const ShadowCell& b) { return a.cell_id < b.cell_id; });

    UnionFind uf(n_sats);
    for (const auto& [cell_id, sats_here] : violators) {
        for (std::size_t i = 1; i < sats_here.size(); ++i)
            uf.unite(sats_here[0], sats_here[i]);
    }
    if (mode == ConstellationMode::repeater) {
        for (int i = 0; i < n_sats; ++i)
            for (int j = i + 1; j < n_sats; ++j)
                if (geodyn::intersat_visible(sats[i], sats[j], params.earth))
                    uf.unite(i, j);
    }

    // Dense component ids over satellites that own at least one violation cell.
    std::vector<bool> sat_has_cells(n_sats, false);
    for (const auto& [cell_id, sats_here] : violators)
        for (int s : sats_here) sat_has_cells[s] = true;
    std::unordered_map<int, int> component_id;
    for (int s = 0; s < n_sats; ++s) {
        if (!sat_has_cells[s]) continue;
        const int root = uf.find(s);
        component_id.try_emplace(root, static_cast<int>(component_id.size()));
    }
    merged.n_components = static_cast<int>(component_id.size());
    for (auto& cell : merged.cells) {
        if (cell.status == CellStatus::violation && cell.satellite >= 0) {
            cell.component = component_id[uf.find(cell.satellite)];
        }
    }
    return merged;
}

namespace {

enum class SetOp { intersection, union_ };

ShadowMap combine_maps(const ShadowMap& a, const ShadowMap& b, SetOp op) {
    if (std::abs(a.grid.lat_step_deg - b.grid.lat_step_deg) > 1e-12 ||
        std::abs(a.grid.lon_step_deg - b.grid.lon_step_deg) > 1e-12) {
        throw std::invalid_argument("shadow set operations need matching grids");
    }
    std::unordered_map<std::uint64_t, const ShadowCell*> other;
    other.reserve(b.cells.size());
    for (const auto& cell : b.cells) other.emplace(cell.cell_id, &cell);

    ShadowMap out;
    out.grid = a.grid;
    out.scenario = (op == SetOp::intersection ? "intersection(" : "union(") +
                   a.scenario + "," + b.scenario + ")";
    out.epoch_s = a.epoch_s;
    out.seed = a.seed;

    std::unordered_map<std::uint64_t, ShadowCell> merged;
    for (const auto& cell : a.cells) {
        const auto it = other.find(cell.cell_id);
        const ShadowCell* mate = it == other.end() ? nullptr : it->second;
        if (op == SetOp::intersection) {
            ShadowCell weak = cell;
            weak.status = CellStatus::outside_visibility;
            if (mate) {
                weak = static_cast<int>(cell.status) <= static_cast<int>(mate->status)
                           ? cell
                           : *mate;
            }
            merged.emplace(cell.cell_id, weak);
        } else {
            merged.emplace(cell.cell_id,
                           mate && static_cast<int>(mate->status) >
                                       static_cast<int>(cell.status)
                               ? *mate
                               : cell);
        }
    }
    if (op == SetOp::union_) {
        for (const auto& cell : b.cells) merged.emplace(cell.cell_id, cell);
    }
    out.cells.reserve(merged.size());
    for (const auto& [id, cell] : merged) out.cells.push_back(cell);
    std::sort(out.cells.begin(), out.cells.end(),
              [](const ShadowCell& x, const ShadowCell& y) { return x.cell_id < y.cell_id; });
    return out;
}

}  // namespace

ShadowMap shadow_intersection(const ShadowMap& a, const ShadowMap& b) {
    return combine_maps(a, b, SetOp::intersection);
}

ShadowMap shadow_union(const ShadowMap& a, const ShadowMap& b) {
    return combine_maps(a, b, SetOp::union_);
}

double shadow_area_km2(const ShadowMap& map, CellStatus filter) {
    double area = 0.0;
    for (const auto& cell : map.cells) {
        if (static_cast<int>(cell.status) >= static_cast<int>(filter))
            area += cell.area_km2;
    }
    return area;
}

std::size_t shadow_cell_count(const ShadowMap& map, CellStatus filter) {
    std::size_t n = 0;
    for (const auto& cell : map.cells) {
        if (static_cast<int>(cell.status) >= static_cast<int>(filter)) ++n;
    }
    return n;
}

}  // namespace bellsim::shadows
