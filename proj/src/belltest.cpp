#include "bellsim/belltest.hpp"

#include <cmath>
#include <limits>

namespace bellsim::belltest {

std::optional<double> chsh_from_records(
    std::span<const photonsim::CoincidenceRecord> records) {
    long sums[2][2] = {{0, 0}, {0, 0}};
    long counts[2][2] = {{0, 0}, {0, 0}};
    for (const auto& rec : records) {
        const int i = rec.alice_basis - 1;
        const int j = rec.bob_basis - 1;
        sums[i][j] += rec.alice_outcome * rec.bob_outcome;
        counts[i][j] += 1;
    }
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            if (counts[i][j] == 0) return std::nullopt;
    const double e11 = static_cast<double>(sums[0][0]) / counts[0][0];
    const double e12 = static_cast<double>(sums[0][1]) / counts[0][1];
    const double e21 = static_cast<double>(sums[1][0]) / counts[1][0];
    const double e22 = static_cast<double>(sums[1][1]) / counts[1][1];
    return e11 + e12 - e21 + e22;
}

BellTestResult aggregate_runs(const std::vector<std::optional<double>>& per_run,
                              const BellTestConfig& cfg) {
    BellTestResult res;
    res.total_runs = static_cast<int>(per_run.size());
    res.per_run_s.reserve(per_run.size());
    double sum = 0.0;
    for (const auto& s : per_run) {
        if (s) {
            res.per_run_s.push_back(*s);
            sum += *s;
            ++res.valid_runs;
        } else {
            res.per_run_s.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    if (res.valid_runs > 0) {
        res.s_mean = sum / res.valid_runs;
        double sq = 0.0;
        for (const auto& s : per_run) {
            if (s) sq += (*s - res.s_mean) * (*s - res.s_mean);
        }
        res.s_std = std::sqrt(sq / res.valid_runs);
    }
    res.verdict = res.valid_runs >= cfg.min_valid_runs &&
                  std::abs(res.s_mean) - cfg.confidence_n * res.s_std >= 2.0;
    return res;
}

BellTestResult run_bell_test(const RunSimulator& simulate, const BellTestConfig& cfg) {
    std::vector<std::optional<double>> per_run;
    per_run.reserve(cfg.n_runs);
    for (int r = 0; r < cfg.n_runs; ++r) {
        per_run.push_back(chsh_from_records(simulate(r)));
    }
    return aggregate_runs(per_run, cfg);
}

}  // namespace bellsim::belltest
