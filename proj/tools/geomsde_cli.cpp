// Experiment runner: parses a key-value config (or picks an experiment by
// name with its defaults), runs replica-parallel, writes CSV + summary, and
// exits 0 iff every assertion passed (2: config error, 3: abort excess).

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "geomsde/config.hpp"
#include "geomsde/errors.hpp"
#include "geomsde/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"geometric SDE experiment runner"};
    app.require_subcommand(0, 1);

    std::string config_path, out_dir = "out", experiment;
    std::uint64_t seed = 0;
    int replicas = 0, workers = 0;
    bool have_seed = false;

    app.add_option("--config", config_path, "config file (key = value lines)");
    app.add_option("--out", out_dir, "output directory");
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed override");
    app.add_option("--replicas", replicas, "replica count override");
    app.add_option("--workers", workers, "worker thread count override");
    app.add_option("--experiment", experiment, "experiment name (see list-experiments)");

    auto* list_cmd = app.add_subcommand("list-experiments",
                                        "print the experiment catalog with defaults");

    CLI11_PARSE(app, argc, argv);

    if (list_cmd->parsed()) {
        std::cout << geomsde::experiments::list_experiments_text();
        return 0;
    }

    have_seed = seed_opt->count() > 0;
    try {
        geomsde::config::Config cfg;
        if (!config_path.empty()) cfg = geomsde::config::Config::parse_file(config_path);
        if (!experiment.empty()) cfg.set("experiment", experiment);
        if (have_seed) cfg.set("seed", std::to_string(seed));
        if (replicas > 0) cfg.set("replicas", std::to_string(replicas));
        if (workers > 0) cfg.set("workers", std::to_string(workers));
        if (!cfg.has("experiment")) {
            std::cerr << "error: no experiment selected (use --experiment or a config file)\n";
            return 2;
        }

        const auto result = geomsde::experiments::run_experiment(cfg);
        const int status = geomsde::experiments::write_artifacts(result, out_dir);
        std::cout << geomsde::experiments::render_summary(result);
        return status;
    } catch (const geomsde::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
