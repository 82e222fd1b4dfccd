#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "bellsim/apps.hpp"

using namespace bellsim;
using namespace bellsim::apps;

namespace {

const geodyn::OrbitSpec kOrbit;

shadows::ScenarioParams base_params() {
    shadows::ScenarioParams params;
    params.channel.atm_zenith_transmittance = 1.0;
    params.bell.t_acq_s = 5e-3;
    params.bell.confidence_n = 1.0;
    params.bell.n_runs = 10;
    params.seed = 777;
    params.workers = 2;
    return params;
}

geodyn::LinkGeometry geom_with_velocity(double v) {
    geodyn::LinkGeometry g;
    g.distance_m = 1000e3;
    g.visible = true;
    g.radial_velocity_mps = v;
    return g;
}

}  // namespace

TEST_CASE("qber of synthetic key streams") {
    rng::Stream rng(rng::StreamKey{61, 0, 0, 0});
    const auto key_bases = photonsim::MeasurementBases::qkd_key();

    SUBCASE("noiseless genuine stream has zero error") {
        const auto records = photonsim::synthesize_records(4000, 1.0, key_bases, rng);
        long sifted = 0;
        const auto q = qber_single_run(records, &sifted);
        REQUIRE(q.has_value());
        CHECK(sifted > 1500);
        CHECK(*q == doctest::Approx(0.0));
    }
    SUBCASE("contaminated stream approaches one half") {
        const auto records = photonsim::synthesize_records(8000, 0.0, key_bases, rng);
        const auto q = qber_single_run(records);
        REQUIRE(q.has_value());
        CHECK(*q == doctest::Approx(0.5).epsilon(0.06));
    }
    SUBCASE("genuine fraction f gives QBER = (1 - f)/2") {
        for (double f : {0.6, 0.78, 0.9}) {
            double total_err = 0.0;
            long total_sift = 0;
            for (int r = 0; r < 30; ++r) {
                const auto records = photonsim::synthesize_records(4000, f, key_bases, rng);
                long sifted = 0;
                const auto q = qber_single_run(records, &sifted);
                total_err += *q * sifted;
                total_sift += sifted;
            }
            const double qber = total_err / total_sift;
            const double expected = (1.0 - f) / 2.0;
            const double se = std::sqrt(expected * (1 - expected) / total_sift);
            CHECK(std::abs(qber - expected) < 4 * se);
        }
    }
    SUBCASE("empty sift is undefined") {
        CHECK_FALSE(qber_single_run({}).has_value());
        const auto res = aggregate_qber({std::nullopt, std::nullopt}, {0, 0});
        CHECK_FALSE(res.defined);
        CHECK(res.sifted_count == 0);
    }
}

TEST_CASE("qber and chsh sit on the mixing line") {
    // S = 2 sqrt(2) (1 - 2 QBER) for genuine fraction f; checked through the
    // full record pipeline at f = 0.78 where QBER crosses the 11% threshold.
    rng::Stream rng(rng::StreamKey{62, 0, 0, 0});
    const double f = 0.78;
    double s_sum = 0.0, s_sq = 0.0;
    double q_sum = 0.0, q_sq = 0.0;
    const int runs = 40;
    for (int r = 0; r < runs; ++r) {
        const auto bell = photonsim::synthesize_records(
            4000, f, photonsim::MeasurementBases::chsh_optimal(), rng);
        const double s = std::abs(*belltest::chsh_from_records(bell));
        s_sum += s;
        s_sq += s * s;
        const auto key = photonsim::synthesize_records(
            4000, f, photonsim::MeasurementBases::qkd_key(), rng);
        const double q = *qber_single_run(key);
        q_sum += q;
        q_sq += q * q;
    }
    const double s_mean = s_sum / runs;
    const double q_mean = q_sum / runs;
    const double s_se = std::sqrt((s_sq / runs - s_mean * s_mean) / runs);
    const double q_se = std::sqrt((q_sq / runs - q_mean * q_mean) / runs);
    CHECK(std::abs(q_mean - 0.11) < 0.01);
    const double predicted = 2.0 * std::sqrt(2.0) * (1.0 - 2.0 * q_mean);
    const double combined = std::sqrt(s_se * s_se +
                                      std::pow(4.0 * std::sqrt(2.0) * q_se, 2));
    CHECK(std::abs(s_mean - predicted) < 3.0 * combined + 1e-3);
}

TEST_CASE("t_bin formula") {
    QcsConfig cfg;
    cfg.n_min = 30.0;

    SUBCASE("reference evaluation") {
        CHECK(t_bin(cfg, 1e7, geom_with_velocity(7000.0), 1e-3) ==
              doctest::Approx(7.004845999161193e-08).epsilon(1e-12));
    }
    SUBCASE("sign of the radial velocity is irrelevant") {
        CHECK(t_bin(cfg, 1e7, geom_with_velocity(-7000.0), 1e-3) ==
              t_bin(cfg, 1e7, geom_with_velocity(7000.0), 1e-3));
    }
    SUBCASE("closest approach gives zero") {
        CHECK(t_bin(cfg, 1e7, geom_with_velocity(0.0), 1e-3) == 0.0);
    }
    SUBCASE("linear in n_min") {
        QcsConfig doubled = cfg;
        doubled.n_min = 60.0;
        CHECK(t_bin(doubled, 1e7, geom_with_velocity(7000.0), 1e-3) ==
              doctest::Approx(2.0 * t_bin(cfg, 1e7, geom_with_velocity(7000.0), 1e-3))
                  .epsilon(1e-15));
    }
    SUBCASE("dead channel is an error") {
        CHECK_THROWS_AS(t_bin(cfg, 1e7, geom_with_velocity(7000.0), 0.0),
                        std::invalid_argument);
    }
}

TEST_CASE("precision shadows") {
    const shadows::GeoGrid grid{4.0, 4.0};
    auto params = base_params();
    params.noise.dark_rate_a_hz = 100.0;
    params.noise.dark_rate_b_hz = 100.0;
    QcsConfig qcs;
    qcs.n_min = 30.0;

    SUBCASE("infinite target recovers the visibility footprint") {
        qcs.target_precision_s = 1e9;
        const auto map = precision_shadow(kOrbit, params, qcs, grid, 0.0, false);
        CHECK(shadow_cell_count(map, shadows::CellStatus::violation) ==
              shadow_cell_count(map, shadows::CellStatus::visible_no_violation));
    }
    SUBCASE("shadow shrinks as n_min grows and secure is contained in plain") {
        qcs.target_precision_s = 1e-9;
        std::size_t prev = static_cast<std::size_t>(-1);
        for (double n_min : {5.0, 15.0, 30.0, 45.0}) {
            qcs.n_min = n_min;
            const auto plain = precision_shadow(kOrbit, params, qcs, grid, 0.0, false);
            const auto secure = precision_shadow(kOrbit, params, qcs, grid, 0.0, true);
            const auto plain_cells =
                shadow_cell_count(plain, shadows::CellStatus::violation);
            CHECK(plain_cells <= prev);
            prev = plain_cells;
            // Containment cell-by-cell.
            REQUIRE(plain.cells.size() == secure.cells.size());
            for (std::size_t i = 0; i < plain.cells.size(); ++i) {
                if (secure.cells[i].status == shadows::CellStatus::violation) {
                    CHECK(plain.cells[i].status == shadows::CellStatus::violation);
                }
            }
        }
    }
    SUBCASE("large n_min makes the secure shadow identical to the plain one") {
        qcs.target_precision_s = 1e-9;
        bool converged = false;
        for (double n_min : {5.0, 10.0, 20.0, 30.0, 40.0, 50.0}) {
            qcs.n_min = n_min;
            const auto plain = precision_shadow(kOrbit, params, qcs, grid, 0.0, false);
            const auto secure = precision_shadow(kOrbit, params, qcs, grid, 0.0, true);
            bool identical = true;
            for (std::size_t i = 0; i < plain.cells.size(); ++i) {
                if (plain.cells[i].status != secure.cells[i].status) {
                    identical = false;
                    break;
                }
            }
            if (identical &&
                shadow_cell_count(plain, shadows::CellStatus::violation) > 0) {
                converged = true;
                break;
            }
        }
        CHECK(converged);
    }
}

TEST_CASE("qber shadow carries both verdicts") {
    const shadows::GeoGrid grid{4.0, 4.0};
    auto params = base_params();
    params.bell.n_runs = 10;
    params.bell.t_acq_s = 5e-3;
    params.noise.bkg_rate_a_hz = 1e4;
    params.noise.bkg_rate_b_hz = 1e4;
    const geodyn::GroundStation nadir{0.0, 0.0, "ref"};
    QkdConfig qkd;
    const auto map = qber_shadow(kOrbit, nadir, params, qkd, grid, 0.0);

    std::size_t qber_cells = 0, bell_cells = 0, both = 0;
    for (const auto& cell : map.cells) {
        if (cell.status == shadows::CellStatus::outside_visibility) continue;
        REQUIRE(cell.aux.count("qber_mean") == 1);
        REQUIRE(cell.aux.count("bell_violation") == 1);
        const bool in_qber = cell.status == shadows::CellStatus::violation;
        const bool in_bell = cell.aux.at("bell_violation") > 0.5;
        qber_cells += in_qber;
        bell_cells += in_bell;
        both += in_qber && in_bell;
    }
    CHECK(qber_cells > 0);
    CHECK(bell_cells > 0);
    // Overlap: nearly every Bell cell also clears the QBER threshold.
    CHECK(static_cast<double>(both) >= 0.9 * static_cast<double>(bell_cells));
}

TEST_CASE("time series peaks align between CHSH and QBER") {
    auto params = base_params();
    params.bell.t_acq_s = 2e-3;
    params.bell.n_runs = 10;
    params.noise.bkg_rate_a_hz = 2e4;
    params.noise.bkg_rate_b_hz = 2e4;

    // Stations straddling the ground track; the pass tops out mid-window.
    const geodyn::GroundStation a{mathutil::deg2rad(1.5), mathutil::deg2rad(-1.0), "a"};
    const geodyn::GroundStation b{mathutil::deg2rad(-1.5), mathutil::deg2rad(1.0), "b"};
    QkdConfig qkd;
    const auto series =
        station_pair_timeseries(kOrbit, a, b, params, qkd, -240.0, 240.0, 30.0);
    REQUIRE(series.size() == 17);

    int best_s = -1, best_q = -1;
    double max_s = -10.0, min_q = 10.0;
    for (int i = 0; i < static_cast<int>(series.size()); ++i) {
        if (!series[i].visible || !series[i].qber_defined) continue;
        if (std::abs(series[i].s_mean) > max_s) {
            max_s = std::abs(series[i].s_mean);
            best_s = i;
        }
        if (series[i].qber_mean < min_q) {
            min_q = series[i].qber_mean;
            best_q = i;
        }
    }
    REQUIRE(best_s >= 0);
    REQUIRE(best_q >= 0);
    CHECK(std::abs(best_s - best_q) <= 1);

    SUBCASE("stations below the horizon are flagged invisible") {
        const auto far = station_pair_timeseries(kOrbit, a, b, params, qkd, 2000.0,
                                                 2100.0, 50.0);
        for (const auto& pt : far) CHECK_FALSE(pt.visible);
    }
}
