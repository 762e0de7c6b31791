#pragma once

// Run configuration, sweep orchestration and result files.
//
// A config is a YAML document with the sections run, model, spin, axes,
// grid, solver and output. Unknown keys are rejected with their line.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sbo/misf_phase.hpp"
#include "sbo/mott_spin.hpp"

namespace sbo {

enum class RunScenario { misf_afm, misf_fm, misf_field_T, mott1_diagram, mott2_diagram, qc_curve };

const char* run_scenario_name(RunScenario s);
/// Throws ConfigError listing the supported names.
RunScenario parse_run_scenario(const std::string& name);
Method parse_method(const std::string& name);

struct AxisSpec {
    double min = 0.0;
    double max = 1.0;
    int points = 2;
    Axis axis() const { return {min, max, points}; }
};

struct SpinBlock {
    std::optional<double> J1, J2;     ///< direct couplings
    std::optional<double> theta, J;   ///< polar form, theta in units of pi
    std::optional<double> t;          ///< hopping: couplings from U0, U2
    double lambda = 0.0;
    double q = 0.0;
};

struct SolverBlock {
    double damping = 0.5;
    double tolerance = 1e-8;
    int max_iterations = 10000;
    double t_tolerance = 1e-6;
    int search_iterations = 1500;
};

struct OutputBlock {
    std::string table = "results.csv";
    std::string metadata = "metadata.json";
    std::string plot = "plot.gp";  ///< empty: no plot script
};

struct RunConfig {
    RunScenario scenario = RunScenario::misf_afm;
    Method method = Method::analytic;
    int workers = 0;  ///< 0: hardware concurrency
    std::uint64_t seed = 0;

    double U0 = 1.0;
    double U2 = 0.1;
    double eta = 0.0;
    int dim = 2;
    std::vector<double> temperatures{0.0};  ///< units of U0

    SpinBlock spin;
    std::map<std::string, AxisSpec> axes;
    int L = 16;
    SolverBlock solver;
    OutputBlock output;

    /// Scenario-dependent checks (required axes, parameter domains).
    void validate() const;
};

/// Parses a config document. `source` names it in error messages.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// The resolved config as a JSON document; parse_config accepts it back.
std::string config_to_json(const RunConfig& config);

struct ResultTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::string to_csv() const;
};

struct RunResult {
    ResultTable table;
    std::string metadata;  ///< JSON text
    std::string plot;      ///< empty when not requested
    int failures = 0;      ///< points that failed hard
    long long total_iterations = 0;
};

/// Runs every point of the configured sweep.
RunResult execute(const RunConfig& config);

/// Gnuplot script for a results table at `table_file` (relative path).
std::string emit_plot_script(RunScenario scenario, const std::string& table_file);

/// Writes the table, metadata and plot script into `dir` (created if needed).
void write_outputs(const RunConfig& config, const RunResult& result, const std::filesystem::path& dir);

/// Formats a double for result tables (fixed, locale-free).
std::string format_number(double x);

} // namespace sbo
