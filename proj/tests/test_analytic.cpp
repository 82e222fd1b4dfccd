#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <map>

#include "bellsim/analytic.hpp"
#include "bellsim/belltest.hpp"
#include "bellsim/photonsim.hpp"

using namespace bellsim;
using namespace bellsim::analytic;

namespace {

// Test-side binomial pmf via Pascal-style products, independent of the
// implementation's log-gamma route.
double oracle_binom(int n, int k, double p) {
    double c = 1.0;
    for (int i = 0; i < k; ++i) c *= static_cast<double>(n - i) / (k - i);
    return c * std::pow(p, k) * std::pow(1 - p, n - k);
}

}  // namespace

TEST_CASE("p_s_given_n on known points") {
    SUBCASE("deterministic outcomes pile onto S = 4") {
        CHECK(p_s_given_n(1.0, 8, 4.0) == doctest::Approx(1.0));
        CHECK(p_s_given_n(1.0, 8, 3.0) == 0.0);
        CHECK(p_s_given_n(1.0, 8, -4.0) == 0.0);
    }
    SUBCASE("fair outcomes at n = 4") {
        CHECK(p_s_given_n(0.5, 4, 0.0) == doctest::Approx(0.375).epsilon(1e-12));
        CHECK(p_s_given_n(0.5, 4, 2.0) == doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("off-lattice values carry no mass") {
        CHECK(p_s_given_n(0.7, 8, 0.3) == 0.0);
        CHECK(p_s_given_n(0.7, 8, 5.0) == 0.0);
    }
    SUBCASE("invalid n") {
        CHECK_THROWS_AS(p_s_given_n(0.5, 0, 0.0), std::invalid_argument);
    }
}

TEST_CASE("distribution normalizes exactly") {
    for (int n : {1, 2, 3, 4, 7, 20, 50, 100, 200}) {
        for (double p1 = 0.0; p1 <= 1.0 + 1e-12; p1 += 0.01) {
            const double p = std::min(p1, 1.0);
            double total = 0.0;
            for (const auto& point : s_distribution(p, n)) total += point.prob;
            REQUIRE(std::abs(total - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("mean of P(S, n) at the quantum optimum is 2 sqrt(2)") {
    const double p1 = (2.0 + std::sqrt(2.0)) / 4.0;
    for (int n : {4, 17, 40, 160}) {
        double mean = 0.0;
        for (const auto& point : s_distribution(p1, n)) mean += point.s * point.prob;
        CHECK(mean == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("p_s matches brute-force enumeration at nbar = 4") {
    const double nbar = 4.0;
    const double p1 = 0.9;
    // Exhaustive oracle over n <= 60 with its own Poisson series.
    // Keyed on the exact double: both sides compute s as 4(2k - n)/n, and
    // equal rational values round to the same double.
    std::map<double, double> expected;
    double pois = std::exp(-nbar);
    for (int n = 1; n <= 60; ++n) {
        pois *= nbar / n;
        for (int k = 0; k <= n; ++k) {
            const double s = 4.0 * (2.0 * k - n) / n;
            expected[s] += pois * oracle_binom(n, k, p1);
        }
    }
    for (const auto& [s, mass] : expected) {
        if (std::abs(mass) < 1e-15) continue;
        CHECK(p_s(p1, nbar, s, 60) == doctest::Approx(mass).epsilon(1e-9));
    }
    SUBCASE("symmetric distribution at p1 = 1/2") {
        for (double s : {0.5, 1.0, 2.0, 4.0}) {
            CHECK(p_s(0.5, 6.0, s) == doctest::Approx(p_s(0.5, 6.0, -s)).epsilon(1e-12));
        }
    }
}

TEST_CASE("moments match the closed binomial/Poisson formulas") {
    for (auto [p1, nbar] : std::vector<std::pair<double, double>>{
             {0.8535533905932737, 40.0}, {0.7, 12.0}, {0.5, 6.0}}) {
        const auto m = s_moments(p1, nbar);
        // E[S | n >= 1] = 4 (2 p1 - 1) independent of n.
        CHECK(m.mean == doctest::Approx(4.0 * (2.0 * p1 - 1.0)).epsilon(1e-9));
        // Var[S | n >= 1] = 64 p1 (1 - p1) E[1/n | n >= 1].
        double pois = std::exp(-nbar);
        double inv_mean = 0.0, mass = 0.0;
        for (int n = 1; n <= poisson_tail_cutoff(nbar); ++n) {
            pois *= nbar / n;
            inv_mean += pois / n;
            mass += pois;
        }
        inv_mean /= mass;
        CHECK(m.variance ==
              doctest::Approx(64.0 * p1 * (1.0 - p1) * inv_mean).epsilon(1e-9));
        CHECK(m.mass == doctest::Approx(1.0 - std::exp(-nbar)).epsilon(1e-12));
    }
}

TEST_CASE("success probability") {
    SUBCASE("certain violation, Poisson-limited") {
        CHECK(p_success(1.0, 10.0) == doctest::Approx(0.9999546000702375).epsilon(1e-10));
    }
    SUBCASE("fair coin stays below one half and decreases with nbar") {
        double prev = 0.5;
        for (double nbar : {4.0, 8.0, 16.0, 32.0}) {
            const double p = p_success(0.5, nbar);
            CHECK(p < 0.5);
            CHECK(p < prev);
            prev = p;
        }
    }
    SUBCASE("quantum optimum concentrates above 2") {
        CHECK(p_success((2.0 + std::sqrt(2.0)) / 4.0, 400.0) > 0.9999);
    }
}

TEST_CASE("werner state visibility") {
    CHECK(werner_chsh(1.0) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
    CHECK(werner_chsh(0.0) == 0.0);
    CHECK(werner_chsh(1.0 / std::sqrt(2.0)) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(werner_chsh(1.5), std::invalid_argument);
    CHECK(visibility_from_mixing_weight(0.0) == doctest::Approx(1.0));
    CHECK(visibility_from_mixing_weight(4.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(visibility_from_mixing_weight(-0.1), std::invalid_argument);
}

TEST_CASE("effective p1 bridge") {
    CHECK(effective_p1(1.0) == doctest::Approx(0.8535533905932737).epsilon(1e-15));
    CHECK(effective_p1(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(effective_p1(0.5) == doctest::Approx(0.6767766952966369).epsilon(1e-15));
    // E[S] = 4 (2 p1 - 1) = sqrt(2) at f = 1/2.
    CHECK(4.0 * (2.0 * effective_p1(0.5) - 1.0) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("success probability agrees with the full engine") {
    // Runs with a random (near-Poisson) detection count: the empirical
    // P(|S| > 2) must track p_success(effective_p1(1), nbar). The engine
    // draws bases uniformly rather than in exact quarters, which widens the
    // S distribution slightly; the tolerance absorbs that.
    const double nbar = 40.0;
    photonsim::SourceParams src;
    photonsim::NoiseParams noise;
    photonsim::RunConfig cfg;
    cfg.t_acq_s = 1e-3;  // 10^4 slots
    cfg.eta_a = 0.08;
    cfg.eta_b = 0.05;    // per-slot coincidence probability 0.004
    const int runs = 4000;
    int successes = 0;
    for (int r = 0; r < runs; ++r) {
        cfg.stream = rng::StreamKey{56, 0, static_cast<std::uint64_t>(r), 0};
        const auto records = photonsim::simulate_run(
            src, noise, photonsim::MeasurementBases::chsh_optimal(), cfg);
        const auto s = belltest::chsh_from_records(records);
        if (s && std::abs(*s) > 2.0) ++successes;
    }
    const double empirical = static_cast<double>(successes) / runs;
    const double analytic = p_success(effective_p1(1.0), nbar);
    CHECK(std::abs(empirical - analytic) < 0.02);
}

TEST_CASE("simulated S histogram matches the analytic distribution") {
    // Balanced bases, fixed n per run: the sign-flipped empirical S lies on
    // the 4(k - l)/n lattice and follows p_s_given_n(effective_p1(f), n).
    const int n = 40;
    const int runs = 2000;
    const double f = 0.5;
    rng::Stream rng(rng::StreamKey{55, 0, 0, 0});
    std::map<long, double> histogram;
    for (int r = 0; r < runs; ++r) {
        const auto records = photonsim::synthesize_records(
            n, f, photonsim::MeasurementBases::chsh_optimal(), rng, true);
        const auto s = belltest::chsh_from_records(records);
        REQUIRE(s.has_value());
        histogram[std::lround(-*s * 1e6)] += 1.0 / runs;
    }
    double tv = 0.0;
    for (const auto& point : s_distribution(effective_p1(f), n)) {
        const auto it = histogram.find(std::lround(point.s * 1e6));
        const double empirical = it == histogram.end() ? 0.0 : it->second;
        tv += std::abs(empirical - point.prob);
    }
    CHECK(tv / 2.0 < 0.08);
}
