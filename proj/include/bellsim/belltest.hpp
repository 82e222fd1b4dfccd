#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "bellsim/photonsim.hpp"

namespace bellsim::belltest {

struct BellTestConfig {
    int n_runs = 30;
    double t_acq_s = 1e-3;
    double confidence_n = 1.0;
    int min_valid_runs = 2;
};

struct BellTestResult {
    double s_mean = 0.0;  // over valid runs
    double s_std = 0.0;   // population standard deviation over valid runs
    int valid_runs = 0;
    int total_runs = 0;
    bool verdict = false;
    std::vector<double> per_run_s;  // NaN marks runs with an empty correlator
};

// S = E11 + E12 - E21 + E22 with E_ij the sample mean of outcome products in
// basis pair (i, j). Empty correlator groups make S undefined.
std::optional<double> chsh_from_records(std::span<const photonsim::CoincidenceRecord> records);

// Verdict rule applied to per-run S values: runs with undefined S are
// excluded from mean/std but counted; the test succeeds when
// valid_runs >= min_valid_runs and |s_mean| - confidence_n * s_std >= 2.
BellTestResult aggregate_runs(const std::vector<std::optional<double>>& per_run,
                              const BellTestConfig& cfg);

// Executes cfg.n_runs sequential runs; the simulator callback owns geometry
// refresh and RNG stream derivation for each run index.
using RunSimulator =
    std::function<std::vector<photonsim::CoincidenceRecord>(int run_index)>;
BellTestResult run_bell_test(const RunSimulator& simulate, const BellTestConfig& cfg);

}  // namespace bellsim::belltest
