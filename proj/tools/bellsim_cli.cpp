#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bellsim/config.hpp"
#include "bellsim/scenario.hpp"
#include "bellsim/version.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_path;
    std::string format;
    long long seed = -1;
    int workers = -1;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "scenario config file")->required();
    cmd->add_option("--seed", opts.seed, "override the global seed");
    cmd->add_option("--out", opts.out_path, "override the output path stem");
    cmd->add_option("--format", opts.format, "output format: geojson, csv or both")
        ->check(CLI::IsMember({"geojson", "csv", "both"}));
    cmd->add_option("--workers", opts.workers,
                    "worker threads (default: BELLSIM_WORKERS or hardware)");
}

int default_workers() {
    if (const char* env = std::getenv("BELLSIM_WORKERS")) {
        const int value = std::atoi(env);
        if (value > 0) return value;
    }
    return 0;  // resolved to hardware concurrency downstream
}

int execute(const CommonOptions& opts, bellsim::scenario::Verb verb) {
    try {
        auto cfg = bellsim::config::load_config_file(opts.config_path);
        if (opts.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed);
        if (!opts.out_path.empty()) cfg.out_path = opts.out_path;
        if (!opts.format.empty()) cfg.format = opts.format;
        cfg.workers = opts.workers > 0 ? opts.workers
                                       : (cfg.workers > 0 ? cfg.workers : default_workers());
        const auto result = bellsim::scenario::run_scenario(cfg, verb);
        for (const auto& file : result.data_files) std::cout << file << "\n";
        std::cout << result.manifest_file << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Satellite Bell-test shadow simulator"};
    app.set_version_flag("--version", bellsim::kVersion);
    app.require_subcommand(1);

    CommonOptions shadow_opts, series_opts, analytic_opts, sweep_opts;
    auto* shadow = app.add_subcommand(
        "shadow", "compute shadow maps for the configured scenario");
    add_common(shadow, shadow_opts);
    auto* series = app.add_subcommand(
        "timeseries", "Bell/QBER time trace for a station pair");
    add_common(series, series_opts);
    auto* analytic = app.add_subcommand(
        "analytic", "closed-form CHSH distribution tables");
    add_common(analytic, analytic_opts);
    auto* sweep = app.add_subcommand(
        "sweep", "shadow-area ladder over one parameter");
    add_common(sweep, sweep_opts);

    CLI11_PARSE(app, argc, argv);

    if (shadow->parsed()) return execute(shadow_opts, bellsim::scenario::Verb::shadow);
    if (series->parsed()) return execute(series_opts, bellsim::scenario::Verb::timeseries);
    if (analytic->parsed()) return execute(analytic_opts, bellsim::scenario::Verb::analytic);
    if (sweep->parsed()) return execute(sweep_opts, bellsim::scenario::Verb::sweep);
    return 1;
}
