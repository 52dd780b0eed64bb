// xorchain: analysis, simulation and comparison runs on a chain with XOR coding.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "xorchain/harness.hpp"

using namespace xorchain;

namespace {

struct Overrides {
    std::optional<double> damping;
    std::optional<double> tolerance;
    std::optional<int> max_iterations;
    std::optional<std::string> interference;
    std::optional<double> horizon;
    std::optional<double> warmup;
    std::optional<std::uint64_t> seed;
    std::optional<int> replications;
    std::optional<double> defer_jitter;
    std::optional<int> sense_hops;
    std::optional<std::string> format;
    std::string out;
    std::string trace;
};

void add_common(CLI::App* cmd, std::string& config_path, Overrides& o, bool sim_flags) {
    cmd->add_option("config", config_path, "Experiment config (JSON)")->required();
    cmd->add_option("--damping", o.damping, "Fixed-point damping in (0, 1]");
    cmd->add_option("--tolerance", o.tolerance, "Fixed-point residual tolerance");
    cmd->add_option("--max-iterations", o.max_iterations, "Fixed-point iteration cap");
    cmd->add_option("--interference-rate", o.interference, "Interferer rate in coding scenarios")
        ->check(CLI::IsMember({"total", "native_only"}));
    cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "csv", "json"}));
    cmd->add_option("--out", o.out, "Write results to this file instead of stdout");
    if (sim_flags) {
        cmd->add_option("--horizon", o.horizon, "Simulated seconds per replication");
        cmd->add_option("--warmup", o.warmup, "Seconds discarded before measuring");
        cmd->add_option("--seed", o.seed, "Master seed");
        cmd->add_option("--replications", o.replications, "Independent replications per cell");
        cmd->add_option("--defer-jitter", o.defer_jitter, "Upper bound (s) of the restart wait after deferral");
        cmd->add_option("--sense-hops", o.sense_hops, "Carrier-sense range in hops");
        cmd->add_option("--trace", o.trace, "Write the packet event trace of replication 0 to this file");
    }
}

void apply(ExperimentConfig& cfg, const Overrides& o) {
    if (o.damping) cfg.solver.damping = *o.damping;
    if (o.tolerance) cfg.solver.tolerance = *o.tolerance;
    if (o.max_iterations) cfg.solver.max_iterations = *o.max_iterations;
    if (o.interference) cfg.solver.interference = parse_interference_rate(*o.interference);
    check(cfg.solver);
    if (o.horizon) cfg.sim.horizon_s = *o.horizon;
    if (o.warmup) cfg.sim.warmup_s = *o.warmup;
    if (o.seed) cfg.sim.seed = *o.seed;
    if (o.replications) cfg.replications = *o.replications;
    if (o.defer_jitter) cfg.sim.defer_jitter_s = *o.defer_jitter;
    if (o.sense_hops) cfg.sim.sense_hops = *o.sense_hops;
    if (o.format) cfg.format = parse_output_format(*o.format);
    if (!(cfg.sim.horizon_s > cfg.sim.warmup_s) || cfg.sim.warmup_s < 0.0)
        throw ConfigError("need 0 <= warmup < horizon");
    if (cfg.replications < 1) throw ConfigError("replications must be at least 1");
}

int table_exit(const ComparisonTable& table) {
    for (const auto& r : table) {
        if (!r.ok()) return exit_code(*r.failure_kind);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Throughput analysis and simulation of a wireless chain with XOR network coding"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides o;
    auto* analyze_cmd = app.add_subcommand("analyze", "Analytic throughput for every scenario/gamma cell");
    auto* simulate_cmd = app.add_subcommand("simulate", "Simulated throughput for every scenario/gamma cell");
    auto* compare_cmd = app.add_subcommand("compare", "Analysis next to simulation with relative error");
    auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one axis (gamma, delta, beta, p_mix)");
    auto* calibrate_cmd = app.add_subcommand("calibrate", "Fit delta to target throughputs");
    add_common(analyze_cmd, config_path, o, false);
    add_common(simulate_cmd, config_path, o, true);
    add_common(compare_cmd, config_path, o, true);
    add_common(sweep_cmd, config_path, o, true);
    add_common(calibrate_cmd, config_path, o, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        ExperimentConfig cfg = load_config(config_path);
        apply(cfg, o);

        std::unique_ptr<std::ofstream> trace;
        if (!o.trace.empty()) {
            trace = std::make_unique<std::ofstream>(o.trace);
            if (!*trace) throw ConfigError("cannot open trace file '" + o.trace + "'");
            cfg.sim.trace = trace.get();
        }
        std::unique_ptr<std::ofstream> file;
        if (!o.out.empty()) {
            file = std::make_unique<std::ofstream>(o.out);
            if (!*file) throw ConfigError("cannot open output file '" + o.out + "'");
        }
        std::ostream& out = file ? *file : std::cout;

        if (calibrate_cmd->parsed()) {
            const auto rows = run_calibration(cfg);
            write_calibration(out, rows, cfg.format);
            for (const auto& r : rows) {
                if (!r.result) return exit_code(ErrorKind::Calibration);
            }
            return 0;
        }
        ComparisonTable table;
        if (sweep_cmd->parsed())
            table = run_sweep(cfg);
        else if (analyze_cmd->parsed())
            table = run_table(cfg, RunMode::Analyze);
        else if (simulate_cmd->parsed())
            table = run_table(cfg, RunMode::Simulate);
        else
            table = run_compare(cfg);
        write_table(out, table, cfg.format);
        return table_exit(table);
    } catch (const Error& e) {
        std::fprintf(stderr, "error (%s): %s\n", to_string(e.kind()), e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
