#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "bellsim/photonsim.hpp"

using namespace bellsim;
using namespace bellsim::photonsim;

namespace {

RunConfig lossless_run(double t_acq_s, std::uint64_t seed) {
    RunConfig cfg;
    cfg.t_acq_s = t_acq_s;
    cfg.eta_a = 1.0;
    cfg.eta_b = 1.0;
    cfg.stream = rng::StreamKey{seed, 0, 0, 0};
    return cfg;
}

// Closed-form genuine fraction re-derived from the slotted model, kept
// independent of SlotProbabilities for cross-checking.
double oracle_genuine_fraction(double p_pair, double eta_a, double eta_b, double p_na,
                               double p_nb, double xa, double xb) {
    const double ra = p_pair * eta_a / (p_pair * eta_a + xa);
    const double rb = p_pair * eta_b / (p_pair * eta_b + xb);
    const double ga = eta_a * (1 - p_na * (1 - ra));
    const double gb = eta_b * (1 - p_nb * (1 - rb));
    const double na = (1 - eta_a) * p_na + eta_a * p_na * (1 - ra);
    const double nb = (1 - eta_b) * p_nb + eta_b * p_nb * (1 - rb);
    const double p_gg = p_pair * ga * gb;
    const double p_coinc =
        p_pair * (ga + na) * (gb + nb) + (1 - p_pair) * p_na * p_nb;
    return p_gg / p_coinc;
}

}  // namespace

TEST_CASE("born rule statistics") {
    rng::Stream rng(rng::StreamKey{31, 0, 0, 0});

    SUBCASE("equal angles are perfectly anti-correlated") {
        for (int i = 0; i < 2000; ++i) {
            const auto [a, b] = born_outcome(0.7, 0.7, rng);
            CHECK(a * b == -1);
        }
    }
    SUBCASE("45 degree separation is uncorrelated") {
        double sum = 0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            const auto [a, b] = born_outcome(mathutil::deg2rad(45.0), 0.0, rng);
            sum += a * b;
        }
        CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
    }
    SUBCASE("22.5 degree separation gives E = -sqrt(2)/2") {
        double sum = 0;
        const int n = 1000000;
        for (int i = 0; i < n; ++i) {
            const auto [a, b] = born_outcome(0.0, mathutil::deg2rad(22.5), rng);
            sum += a * b;
        }
        CHECK(sum / n == doctest::Approx(-std::sqrt(2.0) / 2).epsilon(0.0043));
    }
}

TEST_CASE("lossless noiseless run detects every pair") {
    const SourceParams src;  // 1e7 pairs/s, slot = 100 ns -> 1 pair per slot
    const NoiseParams noise;
    const auto records =
        simulate_run(src, noise, MeasurementBases::chsh_optimal(), lossless_run(1e-4, 5));
    CHECK(records.size() == 1000);
    for (const auto& rec : records) {
        CHECK(rec.provenance == Provenance::genuine);
    }
}

TEST_CASE("pure-noise stream is all contaminated") {
    const SourceParams src{0.0};  // source off
    NoiseParams noise;
    noise.bkg_rate_a_hz = 2e5;
    noise.bkg_rate_b_hz = 2e5;
    RunConfig cfg = lossless_run(1e-2, 6);
    cfg.eta_a = 0.0;
    cfg.eta_b = 0.0;
    cfg.slot_duration_s = 1e-7;
    const auto records = simulate_run(src, noise, MeasurementBases::chsh_optimal(), cfg);
    CHECK(records.size() > 0);
    double sum = 0;
    for (const auto& rec : records) {
        CHECK(rec.provenance == Provenance::contaminated);
        sum += rec.alice_outcome * rec.bob_outcome;
    }
    // Uncorrelated outcomes.
    CHECK(std::abs(sum / records.size()) < 4.0 / std::sqrt(records.size()));
}

TEST_CASE("genuine coincidence counts follow the binomial mean") {
    const SourceParams src;
    const NoiseParams noise;
    RunConfig cfg = lossless_run(1e-3, 7);  // 10000 slots
    cfg.eta_a = 0.8;
    cfg.eta_b = 0.5;
    const double p = 0.4;
    const int runs = 100;
    double total = 0;
    for (int r = 0; r < runs; ++r) {
        cfg.stream.run_index = r;
        total += simulate_run(src, noise, MeasurementBases::chsh_optimal(), cfg).size();
    }
    const double mean = total / runs;
    const double se = std::sqrt(10000 * p * (1 - p) / runs);
    CHECK(std::abs(mean - 4000.0) < 3 * se);
}

TEST_CASE("identical seeds give bit-identical record lists") {
    const SourceParams src;
    NoiseParams noise;
    noise.bkg_rate_b_hz = 1e4;
    noise.dark_rate_a_hz = 1e3;
    RunConfig cfg = lossless_run(1e-3, 42);
    cfg.eta_a = 0.5;
    cfg.eta_b = 0.1;
    const auto a = simulate_run(src, noise, MeasurementBases::chsh_optimal(), cfg);
    const auto b = simulate_run(src, noise, MeasurementBases::chsh_optimal(), cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].alice_basis == b[i].alice_basis);
        CHECK(a[i].bob_basis == b[i].bob_basis);
        CHECK(a[i].alice_outcome == b[i].alice_outcome);
        CHECK(a[i].bob_outcome == b[i].bob_outcome);
        CHECK((a[i].provenance == b[i].provenance));
    }
}

TEST_CASE("genuine rate converges to R eta_a eta_b") {
    const SourceParams src;
    const NoiseParams noise;
    RunConfig cfg = lossless_run(0.1, 81);  // 1e6 slots
    cfg.eta_a = 0.2;
    cfg.eta_b = 0.2;
    const auto records = simulate_run(src, noise, MeasurementBases::chsh_optimal(), cfg);
    const double rate = static_cast<double>(records.size()) / cfg.t_acq_s;
    const double expected = src.pair_rate_hz * cfg.eta_a * cfg.eta_b;
    CHECK(std::abs(rate - expected) / expected < 0.02);
}

TEST_CASE("contamination fraction matches the closed form") {
    const SourceParams src;
    NoiseParams noise;
    noise.bkg_rate_a_hz = 2e4;
    noise.dark_rate_a_hz = 1e3;
    noise.bkg_rate_b_hz = 5e4;
    noise.dark_rate_b_hz = 1e3;
    RunConfig cfg = lossless_run(1e-3, 9);
    cfg.eta_a = 0.5;
    cfg.eta_b = 0.2;

    const double dt = 1e-7;
    const double p_na = 1 - (1 - noise.bkg_rate_a_hz * dt) * (1 - noise.dark_rate_a_hz * dt);
    const double p_nb = 1 - (1 - noise.bkg_rate_b_hz * dt) * (1 - noise.dark_rate_b_hz * dt);
    const double f = oracle_genuine_fraction(1.0, cfg.eta_a, cfg.eta_b, p_na, p_nb,
                                             (noise.bkg_rate_a_hz + noise.dark_rate_a_hz) * dt,
                                             (noise.bkg_rate_b_hz + noise.dark_rate_b_hz) * dt);

    // The implementation's own closed form must agree with the re-derivation.
    CHECK(slot_probabilities(src, noise, cfg).genuine_fraction() ==
          doctest::Approx(f).epsilon(1e-12));

    long genuine = 0, total = 0;
    for (int r = 0; r < 200; ++r) {
        cfg.stream.run_index = r;
        for (const auto& rec :
             simulate_run(src, noise, MeasurementBases::chsh_optimal(), cfg)) {
            ++total;
            if (rec.provenance == Provenance::genuine) ++genuine;
        }
    }
    const double empirical = static_cast<double>(genuine) / total;
    const double sigma = std::sqrt(f * (1 - f) / total);
    CHECK(std::abs(empirical - f) < 3 * sigma);
}

TEST_CASE("genuine correlators converge to -cos 2(a - b)") {
    const SourceParams src;
    const NoiseParams noise;
    const auto bases = MeasurementBases::chsh_optimal();
    const auto records = simulate_run(src, noise, bases, lossless_run(2e-2, 10));
    double sums[2][2] = {{0, 0}, {0, 0}};
    long counts[2][2] = {{0, 0}, {0, 0}};
    for (const auto& rec : records) {
        sums[rec.alice_basis - 1][rec.bob_basis - 1] += rec.alice_outcome * rec.bob_outcome;
        counts[rec.alice_basis - 1][rec.bob_basis - 1] += 1;
    }
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            REQUIRE(counts[i][j] > 1000);
            const double expected = -std::cos(2 * (bases.alice[i] - bases.bob[j]));
            const double tolerance = 4.0 / std::sqrt(static_cast<double>(counts[i][j]));
            CHECK(std::abs(sums[i][j] / counts[i][j] - expected) < tolerance);
        }
    }
}

TEST_CASE("swap run semantics") {
    const SourceParams src;
    const NoiseParams noise;
    const auto bases = MeasurementBases::chsh_optimal();
    RunConfig link1 = lossless_run(1e-4, 11);  // 1000 slots
    link1.stream.purpose = 1;
    RunConfig link2 = lossless_run(1e-4, 11);
    link2.stream.purpose = 2;

    SUBCASE("certain swap keeps every stored pair") {
        const auto recs = simulate_swap_run(link1, link2, src, noise, bases, {1.0, false});
        CHECK(recs.size() == 1000);  // lossless: n1 = n2 = slots
        for (const auto& rec : recs) CHECK(rec.provenance == Provenance::genuine);
    }
    SUBCASE("heralded failures thin the record count") {
        const auto recs = simulate_swap_run(link1, link2, src, noise, bases, {0.0, true});
        CHECK(recs.empty());
        const auto half = simulate_swap_run(link1, link2, src, noise, bases, {0.5, true});
        const double sigma = std::sqrt(1000 * 0.25);
        CHECK(std::abs(static_cast<double>(half.size()) - 500.0) < 3 * sigma);
        for (const auto& rec : half) CHECK(rec.provenance == Provenance::genuine);
    }
    SUBCASE("unheralded failures contaminate instead of thinning") {
        const auto recs = simulate_swap_run(link1, link2, src, noise, bases, {0.0, false});
        CHECK(recs.size() == 1000);
        for (const auto& rec : recs) CHECK(rec.provenance == Provenance::contaminated);

        const auto mixed = simulate_swap_run(link1, link2, src, noise, bases, {0.6, false});
        CHECK(mixed.size() == 1000);
        long genuine = 0;
        for (const auto& rec : mixed) {
            if (rec.provenance == Provenance::genuine) ++genuine;
        }
        const double sigma = std::sqrt(1000 * 0.6 * 0.4);
        CHECK(std::abs(static_cast<double>(genuine) - 600.0) < 3 * sigma);
    }
    SUBCASE("asymmetric links are limited by the weaker one") {
        RunConfig weak = link2;
        weak.eta_b = 0.25;
        const auto recs = simulate_swap_run(link1, weak, src, noise, bases, {1.0, false});
        const double sigma = std::sqrt(1000 * 0.25 * 0.75);
        CHECK(std::abs(static_cast<double>(recs.size()) - 250.0) < 4 * sigma);
    }
}

TEST_CASE("dual-stream run splits coincidences by purpose") {
    const SourceParams src;
    const NoiseParams noise;
    RunConfig cfg = lossless_run(1e-3, 12);
    const auto out = simulate_run_dual(src, noise, MeasurementBases::chsh_optimal(),
                                       MeasurementBases::qkd_key(), 0.5, cfg);
    const auto total = out.bell.size() + out.key.size();
    CHECK(total == 10000);
    const double sigma = std::sqrt(10000 * 0.25);
    CHECK(std::abs(static_cast<double>(out.key.size()) - 5000.0) < 4 * sigma);
}

TEST_CASE("synthesized streams honor balance and genuine fraction") {
    rng::Stream rng(rng::StreamKey{33, 0, 0, 0});
    const auto records =
        synthesize_records(4000, 0.75, MeasurementBases::chsh_optimal(), rng, true);
    long counts[2][2] = {{0, 0}, {0, 0}};
    long genuine = 0;
    for (const auto& rec : records) {
        counts[rec.alice_basis - 1][rec.bob_basis - 1]++;
        if (rec.provenance == Provenance::genuine) ++genuine;
    }
    CHECK(counts[0][0] == 1000);
    CHECK(counts[0][1] == 1000);
    CHECK(counts[1][0] == 1000);
    CHECK(counts[1][1] == 1000);
    const double sigma = std::sqrt(4000 * 0.75 * 0.25);
    CHECK(std::abs(static_cast<double>(genuine) - 3000.0) < 4 * sigma);
    CHECK_THROWS_AS(synthesize_records(10, 0.5, MeasurementBases::chsh_optimal(), rng, true),
                    std::invalid_argument);
}

TEST_CASE("records stay in range for arbitrary valid configs") {
    rng::Stream fuzz(rng::StreamKey{34, 0, 0, 0});
    for (int trial = 0; trial < 40; ++trial) {
        SourceParams src{1e6 + fuzz.next_double() * 9e6};
        NoiseParams noise;
        noise.bkg_rate_a_hz = fuzz.next_double() * 1e5;
        noise.bkg_rate_b_hz = fuzz.next_double() * 1e5;
        noise.dark_rate_a_hz = fuzz.next_double() * 1e4;
        noise.dark_rate_b_hz = fuzz.next_double() * 1e4;
        RunConfig cfg;
        cfg.t_acq_s = 1e-4 + fuzz.next_double() * 1e-3;
        cfg.eta_a = fuzz.next_double();
        cfg.eta_b = fuzz.next_double();
        cfg.stream = rng::StreamKey{35, static_cast<std::uint64_t>(trial), 0, 0};
        const double dt = 1.0 / src.pair_rate_hz;
        const auto slots = static_cast<std::size_t>(std::llround(cfg.t_acq_s / dt));
        const auto records =
            simulate_run(src, noise, MeasurementBases::chsh_optimal(), cfg);
        REQUIRE(records.size() <= slots);
        for (const auto& rec : records) {
            REQUIRE((rec.alice_basis == 1 || rec.alice_basis == 2));
            REQUIRE((rec.bob_basis == 1 || rec.bob_basis == 2));
            REQUIRE((rec.alice_outcome == 1 || rec.alice_outcome == -1));
            REQUIRE((rec.bob_outcome == 1 || rec.bob_outcome == -1));
        }
    }
}

TEST_CASE("slot validation rejects over-coarse slots") {
    const SourceParams src;
    NoiseParams noise;
    noise.bkg_rate_b_hz = 2e7;  // two expected clicks per 100 ns slot
    CHECK_THROWS_AS(
        simulate_run(src, noise, MeasurementBases::chsh_optimal(), lossless_run(1e-3, 13)),
        std::invalid_argument);

    SourceParams fast{3e7};  // three expected pairs per explicit 100 ns slot
    RunConfig cfg = lossless_run(1e-3, 14);
    cfg.slot_duration_s = 1e-7;
    CHECK_THROWS_AS(simulate_run(fast, NoiseParams{}, MeasurementBases::chsh_optimal(), cfg),
                    std::invalid_argument);
}
