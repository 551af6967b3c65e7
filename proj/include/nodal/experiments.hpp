#pragma once

#include "nodal/config.hpp"
#include "nodal/kernel_spec.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace nodal {

enum class Scenario {
    ConvergeNu,
    KnotCensus,
    BettiScaling,
    WillmoreAudit,
    KostlanLocalLimit,
    KacRiceVsEmpirical,
    Diagnostics,
};

std::string scenario_name(Scenario scenario);
Scenario parse_scenario(const std::string& name);

// Scenario description read from a key-value file (schema in the README).
// The sweep is R_list, L_list or d_list depending on the scenario.
struct ExperimentConfig {
    Scenario scenario = Scenario::ConvergeNu;
    KernelSpec spec;
    std::vector<double> sweep;
    std::uint64_t seed_first = 1;
    std::uint64_t seed_last = 1;
    double h = 0.1;
    double padding = 1.0;
    double R = 4.0;  // cube half width where the sweep is not over R
    std::string output_dir = "out";
    int threads = 1;
    bool project_vertices = true;
    int refine_cells = 48;
    std::size_t kacrice_samples = 1000000;
    double tolerance = 0.05;
    std::size_t sphere_samples = 1000000;
    int sphere_runs = 10;
    double bulinskaya_h = 0.05;

    static ExperimentConfig from_config(const KeyValueConfig& config);
    static ExperimentConfig load(const std::string& path);
    KeyValueConfig to_config() const;
    std::uint64_t hash() const;

    // Throws ConfigError: empty seed range, sweep not strictly increasing,
    // or a model the scenario cannot run.
    void validate() const;

    // "R", "L" or "d".
    std::string sweep_key() const;
    std::size_t seed_count() const { return static_cast<std::size_t>(seed_last - seed_first + 1); }

    // Spec and grid for one sweep value.
    KernelSpec spec_for(double param) const;
    double cube_for(double param) const;
};

struct CheckResult {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string detail;
};

struct RunOutcome {
    std::vector<CheckResult> checks;
    std::size_t cells_total = 0;
    std::size_t cells_run = 0;     // computed in this invocation (the rest came from the ledger)
    std::size_t faulty_cells = 0;
    bool pass = true;
};

struct RunOptions {
    bool resume = false;
    int threads = 0;  // 0: take the config value
    // Stop after this many newly computed cells (simulates an interrupted run).
    std::size_t max_new_cells = static_cast<std::size_t>(-1);
};

// Runs the configured scenario into config.output_dir:
//   ledger.json             completion markers, config hash, shard hashes
//   shards/<key>=<v>/<seed>.json   one file per (parameter, seed) cell
//   cells.csv, components.csv      per-realization and per-component rows
//   <scenario>.csv, checks.json    reduced summary and pass/fail checks
// Rerunning with resume skips completed cells; reduction is single-threaded
// and the outputs are byte-identical for identical inputs.
RunOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// Analytic sup over |u|, |v| <= 2 (step 0.25 per coordinate) of
// |K_{x,d}(u, v) - exp(-|u - v|^2 / 2)|, and the same sup restricted to u = v.
struct LocalLimitRow {
    int degree = 0;
    double sup_difference = 0.0;
    double diagonal_difference = 0.0;
};
LocalLimitRow kostlan_local_limit(int n, int degree);

// Wilson score interval for k successes out of N at 95%.
std::pair<double, double> wilson_interval(std::size_t k, std::size_t N);

// Pooled class frequencies over realizations (each a label -> count map),
// sorted by label, with Wilson intervals.
struct KnotFrequency {
    std::string label;
    std::size_t count = 0;
    std::size_t N = 0;
    double mu = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};
std::vector<KnotFrequency> knot_frequencies(const std::vector<std::map<std::string, std::size_t>>& realizations);

std::string render_checks_json(const std::vector<CheckResult>& checks);

}  // namespace nodal
