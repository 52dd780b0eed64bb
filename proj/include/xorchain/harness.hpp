#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "xorchain/analytic.hpp"
#include "xorchain/collision.hpp"
#include "xorchain/errors.hpp"
#include "xorchain/simulator.hpp"
#include "xorchain/topology.hpp"

namespace xorchain {

enum class OutputFormat { Text, Csv, Json };

OutputFormat parse_output_format(const std::string& text);

struct ScenarioRow {
    std::string name;
    Scenario scenario;
    std::optional<double> delta;  // overrides calibration and the global delta
};

// Calibrate delta on one (scenario, gamma) row against a target throughput.
// Cells with the same flow count and gamma use the result; an entry whose
// retransmission/coding flags match the cell wins over a plain one.
struct CalibrationEntry {
    Scenario scenario;
    double gamma = 0.0;
    double target_theta = 0.0;
    double lo = 0.0;
    double hi = 5e-3;
};

enum class SweepAxis { Gamma, Delta, Beta, PMix };

struct SweepSpec {
    SweepAxis axis = SweepAxis::Delta;
    std::vector<double> values;
    bool simulate = false;
};

struct ExperimentConfig {
    int k = 5;
    double mu = kDefaultServiceRate;
    double delta = 0.0;
    std::vector<double> gammas;
    std::vector<ScenarioRow> scenarios;
    std::vector<CalibrationEntry> calibration;
    SolverOptions solver;
    SimOptions sim;
    int replications = 10;
    OutputFormat format = OutputFormat::Text;
    std::optional<SweepSpec> sweep;
};

/// Parses the JSON experiment schema (see README). Throws ConfigError naming
/// the offending line/column or field path.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct ComparisonRow {
    std::string scenario;
    Scenario spec;
    double gamma_1 = 0.0;
    double gamma_k = 0.0;
    double delta = 0.0;
    std::optional<double> analytic;
    std::optional<double> simulated;
    double ci_half_width = 0.0;
    double std_error = 0.0;
    int replications = 0;
    std::optional<double> relative_error;
    // Sweep rows only.
    std::string axis;
    double axis_value = 0.0;
    bool monotonicity_alarm = false;
    // Empty when the row succeeded.
    std::string failure;
    std::optional<ErrorKind> failure_kind;

    bool ok() const noexcept { return failure.empty(); }
};

using ComparisonTable = std::vector<ComparisonRow>;

struct CalibrationResult {
    double delta = 0.0;
    double theta = 0.0;
    int bisections = 0;
};

/// Bisection on delta until |theta(delta) - target| < rel_tol * target.
/// theta is non-increasing in delta; a delta at which analysis fails
/// (saturated window, instability, non-convergence) is treated as lying above
/// every target.
CalibrationResult calibrate_delta(const ChainTopology& topo, const Scenario& scenario, const ModelParams& base,
                                  double target_theta, double lo, double hi, const SolverOptions& opts = {},
                                  double rel_tol = 1e-3);

enum class RunMode { Analyze, Simulate, Compare };

/// One row per (scenario, gamma) cell in config order.
ComparisonTable run_table(const ExperimentConfig& config, RunMode mode);
inline ComparisonTable run_compare(const ExperimentConfig& config) { return run_table(config, RunMode::Compare); }

/// One row per (scenario, gamma, axis value). Requires config.sweep.
ComparisonTable run_sweep(const ExperimentConfig& config);

/// Delta used for one cell (explicit override, calibration, or global).
double cell_delta(const ExperimentConfig& config, const ScenarioRow& row, double gamma);

struct CalibrationRow {
    CalibrationEntry entry;
    std::optional<CalibrationResult> result;
    std::string failure;
};
std::vector<CalibrationRow> run_calibration(const ExperimentConfig& config);

void write_table(std::ostream& out, const ComparisonTable& table, OutputFormat format);
void write_calibration(std::ostream& out, const std::vector<CalibrationRow>& rows, OutputFormat format);

}  // namespace xorchain
