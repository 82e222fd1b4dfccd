#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bellsim/shadows.hpp"

namespace bellsim::apps {

struct QkdConfig {
    photonsim::MeasurementBases key_bases = photonsim::MeasurementBases::qkd_key();
    double qber_threshold = 0.11;
    double key_fraction = 0.5;  // fraction of coincidences routed to key generation
};

struct QberResult {
    double qber_mean = 0.0;
    double qber_std = 0.0;
    long sifted_count = 0;  // across all runs
    int valid_runs = 0;
    bool defined = false;
};

// Error fraction of one sifted key block. Sifting keeps records whose basis
// indices match; for the singlet a matched-basis genuine round is perfectly
// anti-correlated, so an error is a +1 outcome product. Empty sift gives
// nullopt.
std::optional<double> qber_single_run(std::span<const photonsim::CoincidenceRecord> records,
                                      long* sifted_count = nullptr);

// Mean/std over runs, excluding runs with an empty sift.
QberResult aggregate_qber(const std::vector<std::optional<double>>& per_run,
                          const std::vector<long>& sifted_counts);

// Combined Bell + QBER statistics for one station pair at one epoch, sharing
// one event stream split between the two purposes.
struct PairStats {
    belltest::BellTestResult bell;
    QberResult qber;
    bool visible = false;
};
PairStats evaluate_station_pair(const geodyn::OrbitSpec& orbit,
                                const geodyn::GroundStation& gs_a,
                                const geodyn::GroundStation& gs_b,
                                const shadows::ScenarioParams& params,
                                const QkdConfig& qkd, double epoch_s,
                                std::uint64_t stream_cell_id);

// Double-downlink QBER shadow with a fixed reference station. Cell status
// reflects qber_mean < threshold; the Bell verdict for the same cells is
// carried in aux["bell_violation"] for overlap analysis.
shadows::ShadowMap qber_shadow(const geodyn::OrbitSpec& orbit,
                               const geodyn::GroundStation& fixed_gs,
                               const shadows::ScenarioParams& params,
                               const QkdConfig& qkd, const shadows::GeoGrid& grid,
                               double epoch_s);

struct QcsConfig {
    double n_min = 30.0;              // minimum mean exchanged pairs
    double target_precision_s = 1e-9; // t_bin threshold for the shadow
    double sat_bkg_rate_hz = 0.0;     // satellite-side background for the uplink test
};

// Clock-synchronization bin width:
//   t_bin = N_min |v_rel_radial| / (R eta c).
// Returns 0 at zero radial velocity; throws std::invalid_argument for
// eta <= 0.
double t_bin(const QcsConfig& cfg, double pair_rate_hz,
             const geodyn::LinkGeometry& geom, double eta);

// Cells where the satellite can synchronize clocks at the target precision
// through the uplink channel. With secure = true the cell must also pass a
// one-sigma single-uplink Bell test. aux["t_bin"] carries the bin width.
shadows::ShadowMap precision_shadow(const geodyn::OrbitSpec& orbit,
                                    const shadows::ScenarioParams& params,
                                    const QcsConfig& qcs, const shadows::GeoGrid& grid,
                                    double epoch_s, bool secure);

struct TimeSeriesPoint {
    double t_s = 0.0;
    bool visible = false;
    double s_mean = 0.0;
    double s_std = 0.0;
    double qber_mean = 0.0;
    double qber_std = 0.0;
    bool qber_defined = false;
};

// Time trace of Bell and QBER statistics for one station pair in the
// double-downlink configuration.
std::vector<TimeSeriesPoint> station_pair_timeseries(
    const geodyn::OrbitSpec& orbit, const geodyn::GroundStation& gs_a,
    const geodyn::GroundStation& gs_b, const shadows::ScenarioParams& params,
    const QkdConfig& qkd, double t_start_s, double t_end_s, double t_step_s);

}  // namespace bellsim::apps
