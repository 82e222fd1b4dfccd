#include "bellsim/apps.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bellsim/parallel.hpp"

namespace bellsim::apps {

namespace {

constexpr std::uint64_t kPurposeQkd = 4;
constexpr std::uint64_t kPurposeUplinkBell = 5;

struct QkdRunAccumulator {
    std::vector<std::optional<double>> s_per_run;
    std::vector<std::optional<double>> qber_per_run;
    std::vector<long> sifted_per_run;
};

// One pass per run: shared stream split between Bell and key purposes.
template <typename EtaFn>
QkdRunAccumulator run_qkd_cell(const shadows::ScenarioParams& params,
                               const QkdConfig& qkd, std::uint64_t cell_id,
                               double epoch_s, const EtaFn& eta_for_run) {
    QkdRunAccumulator acc;
    acc.s_per_run.reserve(params.bell.n_runs);
    for (int r = 0; r < params.bell.n_runs; ++r) {
        const double t = epoch_s + r * params.bell.t_acq_s;
        double eta_a = 0.0, eta_b = 0.0;
        if (!eta_for_run(t, eta_a, eta_b)) {
            acc.s_per_run.push_back(std::nullopt);
            acc.qber_per_run.push_back(std::nullopt);
            acc.sifted_per_run.push_back(0);
            continue;
        }
        photonsim::RunConfig rc;
        rc.t_acq_s = params.bell.t_acq_s;
        rc.eta_a = eta_a;
        rc.eta_b = eta_b;
        rc.slot_duration_s = params.slot_duration_s;
        rc.stream = rng::StreamKey{params.seed, cell_id,
                                   static_cast<std::uint64_t>(r), kPurposeQkd};
        const auto out = photonsim::simulate_run_dual(params.source, params.noise,
                                                      params.bases, qkd.key_bases,
                                                      qkd.key_fraction, rc);
        acc.s_per_run.push_back(belltest::chsh_from_records(out.bell));
        long sifted = 0;
        acc.qber_per_run.push_back(qber_single_run(out.key, &sifted));
        acc.sifted_per_run.push_back(sifted);
    }
    return acc;
}

}  // namespace

std::optional<double> qber_single_run(std::span<const photonsim::CoincidenceRecord> records,
                                      long* sifted_count) {
    long sifted = 0;
    long errors = 0;
    for (const auto& rec : records) {
        if (rec.alice_basis != rec.bob_basis) continue;
        ++sifted;
        if (rec.alice_outcome * rec.bob_outcome > 0) ++errors;
    }
    if (sifted_count) *sifted_count = sifted;
    if (sifted == 0) return std::nullopt;
    return static_cast<double>(errors) / static_cast<double>(sifted);
}

QberResult aggregate_qber(const std::vector<std::optional<double>>& per_run,
                          const std::vector<long>& sifted_counts) {
    QberResult res;
    double sum = 0.0;
    for (std::size_t i = 0; i < per_run.size(); ++i) {
        res.sifted_count += i < sifted_counts.size() ? sifted_counts[i] : 0;
        if (per_run[i]) {
            sum += *per_run[i];
            ++res.valid_runs;
        }
    }
    if (res.valid_runs == 0) return res;
    res.defined = true;
    res.qber_mean = sum / res.valid_runs;
    double sq = 0.0;
    for (const auto& q : per_run) {
        if (q) sq += (*q - res.qber_mean) * (*q - res.qber_mean);
    }
    res.qber_std = std::sqrt(sq / res.valid_runs);
    return res;
}

PairStats evaluate_station_pair(const geodyn::OrbitSpec& orbit,
                                const geodyn::GroundStation& gs_a,
                                const geodyn::GroundStation& gs_b,
                                const shadows::ScenarioParams& params,
                                const QkdConfig& qkd, double epoch_s,
                                std::uint64_t stream_cell_id) {
    PairStats stats;
    const auto sat0 = geodyn::propagate(orbit, params.earth, epoch_s);
    const auto ga0 = geodyn::link_geometry(sat0, gs_a, params.earth, epoch_s);
    const auto gb0 = geodyn::link_geometry(sat0, gs_b, params.earth, epoch_s);
    stats.visible = ga0.visible && gb0.visible;
    if (!stats.visible) return stats;

    auto acc = run_qkd_cell(
        params, qkd, stream_cell_id, epoch_s,
        [&](double t, double& eta_a, double& eta_b) {
            const auto sat = geodyn::propagate(orbit, params.earth, t);
            const auto ga = geodyn::link_geometry(sat, gs_a, params.earth, t);
            const auto gb = geodyn::link_geometry(sat, gs_b, params.earth, t);
            if (!ga.visible || !gb.visible) return false;
            eta_a = channel::receiver_arm_efficiency(params.channel, ga,
                                                     channel::Direction::downlink);
            eta_b = channel::receiver_arm_efficiency(params.channel, gb,
                                                     channel::Direction::downlink);
            return true;
        });
    stats.bell = belltest::aggregate_runs(acc.s_per_run, params.bell);
    stats.qber = aggregate_qber(acc.qber_per_run, acc.sifted_per_run);
    return stats;
}

shadows::ShadowMap qber_shadow(const geodyn::OrbitSpec& orbit,
                               const geodyn::GroundStation& fixed_gs,
                               const shadows::ScenarioParams& params,
                               const QkdConfig& qkd, const shadows::GeoGrid& grid,
                               double epoch_s) {
    const auto sat0 = geodyn::propagate(orbit, params.earth, epoch_s);
    if (!geodyn::link_geometry(sat0, fixed_gs, params.earth, epoch_s).visible) {
        throw std::invalid_argument("qber_shadow: fixed station cannot see the satellite");
    }
    shadows::ShadowMap map;
    map.grid = grid;
    map.scenario = "qkd";
    map.epoch_s = epoch_s;
    map.seed = params.seed;
    const auto cap = geodyn::visibility_footprint(sat0, params.earth);
    map.cells = shadows::seed_cells(grid, {cap}, params.earth);

    parallel::for_index(map.cells.size(), params.workers, [&](std::size_t idx) {
        shadows::ShadowCell& cell = map.cells[idx];
        geodyn::GroundStation gs{mathutil::deg2rad(cell.lat_deg),
                                 mathutil::deg2rad(cell.lon_deg), ""};
        if (!geodyn::link_geometry(sat0, gs, params.earth, epoch_s).visible) {
            cell.status = shadows::CellStatus::outside_visibility;
            return;
        }
        const PairStats stats =
            evaluate_station_pair(orbit, fixed_gs, gs, params, qkd, epoch_s, cell.cell_id);
        cell.s_mean = stats.bell.s_mean;
        cell.s_std = stats.bell.s_std;
        cell.valid_runs = stats.bell.valid_runs;
        cell.status = stats.qber.defined && stats.qber.qber_mean < qkd.qber_threshold
                          ? shadows::CellStatus::violation
                          : shadows::CellStatus::visible_no_violation;
        cell.aux["qber_mean"] = stats.qber.qber_mean;
        cell.aux["qber_std"] = stats.qber.qber_std;
        cell.aux["bell_violation"] = stats.bell.verdict ? 1.0 : 0.0;
    });
    return map;
}

double t_bin(const QcsConfig& cfg, double pair_rate_hz,
             const geodyn::LinkGeometry& geom, double eta) {
    if (geom.radial_velocity_mps == 0.0) return 0.0;
    if (eta <= 0.0) throw std::invalid_argument("t_bin: eta must be > 0");
    if (pair_rate_hz <= 0.0) throw std::invalid_argument("t_bin: pair rate must be > 0");
    return cfg.n_min * std::abs(geom.radial_velocity_mps) /
           (pair_rate_hz * eta * mathutil::kSpeedOfLight);
}

shadows::ShadowMap precision_shadow(const geodyn::OrbitSpec& orbit,
                                    const shadows::ScenarioParams& params,
                                    const QcsConfig& qcs, const shadows::GeoGrid& grid,
                                    double epoch_s, bool secure) {
    shadows::ShadowMap map;
    map.grid = grid;
    map.scenario = secure ? "qcs_secure" : "qcs_precision";
    map.epoch_s = epoch_s;
    map.seed = params.seed;
    const auto sat0 = geodyn::propagate(orbit, params.earth, epoch_s);
    const auto cap = geodyn::visibility_footprint(sat0, params.earth);
    map.cells = shadows::seed_cells(grid, {cap}, params.earth);

    // The secure variant intersects with the one-sigma single-uplink Bell
    // shadow: local detection at the transmitting ground station (dark
    // counts only), travelling partner to the satellite (dark counts plus
    // any configured satellite-side background).
    shadows::ScenarioParams uplink_params = params;
    uplink_params.bell.confidence_n = 1.0;
    uplink_params.noise.bkg_rate_a_hz = 0.0;
    uplink_params.noise.bkg_rate_b_hz = qcs.sat_bkg_rate_hz;

    const double eta_local =
        channel::local_arm_efficiency(params.channel, channel::Direction::uplink);

    parallel::for_index(map.cells.size(), params.workers, [&](std::size_t idx) {
        shadows::ShadowCell& cell = map.cells[idx];
        geodyn::GroundStation gs{mathutil::deg2rad(cell.lat_deg),
                                 mathutil::deg2rad(cell.lon_deg), ""};
        const auto geom = geodyn::link_geometry(sat0, gs, params.earth, epoch_s);
        if (!geom.visible) {
            cell.status = shadows::CellStatus::outside_visibility;
            return;
        }
        const auto eff =
            channel::link_efficiency(params.channel, geom, channel::Direction::uplink);
        double bin = std::numeric_limits<double>::infinity();
        if (eff.eta_total > 0.0) {
            bin = t_bin(qcs, params.source.pair_rate_hz, geom, eff.eta_total);
        }
        cell.aux["t_bin"] = bin;
        bool in_shadow = bin <= qcs.target_precision_s;

        if (secure && in_shadow) {
            // Only cells that already meet the precision target need the
            // Bell intersection; others are outside either way.
            std::vector<std::optional<double>> per_run;
            for (int r = 0; r < uplink_params.bell.n_runs; ++r) {
                const double t = epoch_s + r * uplink_params.bell.t_acq_s;
                const auto sat = geodyn::propagate(orbit, params.earth, t);
                const auto g = geodyn::link_geometry(sat, gs, params.earth, t);
                if (!g.visible) {
                    per_run.push_back(std::nullopt);
                    continue;
                }
                photonsim::RunConfig rc;
                rc.t_acq_s = uplink_params.bell.t_acq_s;
                rc.eta_a = eta_local;
                rc.eta_b = channel::receiver_arm_efficiency(params.channel, g,
                                                            channel::Direction::uplink);
                rc.slot_duration_s = params.slot_duration_s;
                rc.stream = rng::StreamKey{params.seed, cell.cell_id,
                                           static_cast<std::uint64_t>(r),
                                           kPurposeUplinkBell};
                per_run.push_back(belltest::chsh_from_records(photonsim::simulate_run(
                    uplink_params.source, uplink_params.noise, uplink_params.bases, rc)));
            }
            const auto bell = belltest::aggregate_runs(per_run, uplink_params.bell);
            cell.s_mean = bell.s_mean;
            cell.s_std = bell.s_std;
            cell.valid_runs = bell.valid_runs;
            in_shadow = bell.verdict;
        }
        cell.status = in_shadow ? shadows::CellStatus::violation
                                : shadows::CellStatus::visible_no_violation;
    });
    return map;
}

std::vector<TimeSeriesPoint> station_pair_timeseries(
    const geodyn::OrbitSpec& orbit, const geodyn::GroundStation& gs_a,
    const geodyn::GroundStation& gs_b, const shadows::ScenarioParams& params,
    const QkdConfig& qkd, double t_start_s, double t_end_s, double t_step_s) {
    if (t_step_s <= 0.0) throw std::invalid_argument("t_step must be > 0");
    const std::size_t n =
        static_cast<std::size_t>(std::floor((t_end_s - t_start_s) / t_step_s)) + 1;
    std::vector<TimeSeriesPoint> series(n);
    parallel::for_index(n, params.workers, [&](std::size_t i) {
        const double t = t_start_s + static_cast<double>(i) * t_step_s;
        TimeSeriesPoint& pt = series[i];
        pt.t_s = t;
        const PairStats stats =
            evaluate_station_pair(orbit, gs_a, gs_b, params, qkd, t, i);
        pt.visible = stats.visible;
        if (stats.visible) {
            pt.s_mean = stats.bell.s_mean;
            pt.s_std = stats.bell.s_std;
            pt.qber_mean = stats.qber.qber_mean;
            pt.qber_std = stats.qber.qber_std;
            pt.qber_defined = stats.qber.defined;
        }
    });
    return series;
}

}  // namespace bellsim::apps
