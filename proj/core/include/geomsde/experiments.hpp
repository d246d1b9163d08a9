#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "geomsde/config.hpp"

namespace geomsde::experiments {

struct AssertionResult {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    std::string relation; // "<=", "<", ">=", "in" (bound encodes the edge used)
    bool pass = false;
};

struct CsvRow {
    std::string experiment;
    std::string manifold;
    double scale = 0.0;
    std::uint64_t replicates = 0;
    double mean = 0.0;
    double se = 0.0;
    std::optional<double> slope;
    bool pass = true;
};

struct ExperimentResult {
    std::string name;
    std::vector<CsvRow> rows;
    std::vector<AssertionResult> assertions;
    double abort_fraction = 0.0;
    double abort_limit = 1e-3;

    bool all_pass() const;
    bool abort_exceeded() const { return abort_fraction > abort_limit; }
};

struct ExperimentInfo {
    std::string name;
    std::string description; // one line: what it measures and the claim checked
    std::string module;      // primary module exercised
    std::vector<std::pair<std::string, std::string>> defaults;
    ExperimentResult (*run)(const config::Config&);
};

// Stable-ordered catalog of the eight experiments.
const std::vector<ExperimentInfo>& catalog();
const ExperimentInfo* find_experiment(const std::string& name);

// Dispatches on cfg["experiment"].
ExperimentResult run_experiment(const config::Config& cfg);

std::string render_csv(const ExperimentResult& r);
std::string render_summary(const ExperimentResult& r);
std::string list_experiments_text();

// Writes <out_dir>/<name>.csv and <out_dir>/<name>.summary; returns the
// process exit status: 0 all assertions pass, 1 otherwise, 3 when the abort
// fraction exceeded its limit.
int write_artifacts(const ExperimentResult& r, const std::string& out_dir);

// Deterministic replica-parallel map: body(i) for i in [0, n), results must be
// written into per-index slots so aggregation order is scheduling-independent.
void parallel_replicas(int n, int workers, const std::function<void(int)>& body);

} // namespace geomsde::experiments
