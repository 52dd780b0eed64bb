#include "xorchain/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace xorchain {

namespace {

using nlohmann::json;

// Walks a JSON object, tracking the field path for diagnostics and rejecting
// keys nobody asked for.
class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) fail("expected an object");
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError("config: " + (path_.empty() ? std::string("<root>") : path_) + ": " + msg);
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    double number(const std::string& key, double fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_number()) throw ConfigError("config: " + child(key) + ": expected a number");
        return v->get<double>();
    }

    long long integer(const std::string& key, long long fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_number_integer() && !v->is_number_unsigned())
            throw ConfigError("config: " + child(key) + ": expected an integer");
        return v->get<long long>();
    }

    bool boolean(const std::string& key, bool fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_boolean()) throw ConfigError("config: " + child(key) + ": expected true or false");
        return v->get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_string()) throw ConfigError("config: " + child(key) + ": expected a string");
        return v->get<std::string>();
    }

    std::vector<double> numbers(const std::string& key) {
        const json* v = find(key);
        if (!v) return {};
        if (!v->is_array()) throw ConfigError("config: " + child(key) + ": expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v->size(); ++i) {
            if (!(*v)[i].is_number())
                throw ConfigError("config: " + child(key) + "[" + std::to_string(i) + "]: expected a number");
            out.push_back((*v)[i].get<double>());
        }
        return out;
    }

    void finish() const {
        for (const auto& [key, value] : node_.items()) {
            if (!seen_.count(key)) throw ConfigError("config: " + child(key) + ": unknown field");
        }
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

Scenario read_scenario(Reader& r) {
    Scenario s;
    const long long flows = r.integer("flows", 1);
    if (flows != 1 && flows != 2) throw ConfigError("config: " + r.child("flows") + ": must be 1 or 2");
    s.flows = static_cast<int>(flows);
    s.retransmission = r.boolean("retransmission", false);
    s.coding = r.boolean("coding", false);
    const long long beta = r.integer("beta", s.retransmission ? 7 : 1);
    if (beta < 1 || beta > 1000) throw ConfigError("config: " + r.child("beta") + ": must be in [1, 1000]");
    s.beta = static_cast<int>(beta);
    s.p_mix = r.number("p_mix", s.coding ? 1.0 : 0.0);
    return s;
}

SweepAxis parse_axis(const std::string& text, const Reader& r) {
    if (text == "gamma") return SweepAxis::Gamma;
    if (text == "delta") return SweepAxis::Delta;
    if (text == "beta") return SweepAxis::Beta;
    if (text == "p_mix") return SweepAxis::PMix;
    r.fail("axis must be gamma, delta, beta or p_mix (got '" + text + "')");
}

const char* axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::Gamma: return "gamma";
        case SweepAxis::Delta: return "delta";
        case SweepAxis::Beta: return "beta";
        case SweepAxis::PMix: return "p_mix";
    }
    return "?";
}

ModelParams cell_params(const ExperimentConfig& config, const Scenario& s, double gamma, double delta) {
    return ModelParams{delta, config.mu, gamma, s.flows == 2 ? gamma : 0.0};
}

bool same_gamma(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

void record_failure(ComparisonRow& row, const Error& e) {
    if (!row.failure.empty()) row.failure += "; ";
    row.failure += e.what();
    if (!row.failure_kind) row.failure_kind = e.kind();
}

void record_failure(ComparisonRow& row, const std::exception& e) {
    if (!row.failure.empty()) row.failure += "; ";
    row.failure += e.what();
    if (!row.failure_kind) row.failure_kind = ErrorKind::Simulation;
}

// Fills analysis and/or simulation for one prepared row.
void evaluate(const ExperimentConfig& config, const ChainTopology& topo, ComparisonRow& row, bool analysis,
              bool simulation) {
    const ModelParams params{row.delta, config.mu, row.gamma_1, row.gamma_k};
    if (analysis) {
        try {
            row.analytic = analyze(topo, row.spec, params, config.solver).theta;
        } catch (const Error& e) {
            record_failure(row, e);
        }
    }
    if (simulation) {
        try {
            if (config.sim.trace) {
                *config.sim.trace << "# " << row.scenario << " gamma=" << row.gamma_1 << " delta=" << row.delta
                                  << "\n";
            }
            validate(row.spec, params, topo);
            const SimResult r = run_replications(topo, row.spec, params, config.sim, config.replications);
            row.simulated = r.theta;
            row.ci_half_width = r.ci_half_width;
            row.std_error = r.std_error;
            row.replications = r.replications;
        } catch (const Error& e) {
            record_failure(row, e);
        } catch (const std::exception& e) {
            record_failure(row, e);
        }
    }
    if (row.analytic && row.simulated && *row.analytic > 0.0)
        row.relative_error = std::abs(*row.simulated - *row.analytic) / *row.analytic;
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string opt(const std::optional<double>& v, const char* spec) { return v ? fmt(spec, *v) : std::string("-"); }

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void write_aligned(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        if (width.size() < r.size()) width.resize(r.size(), 0);
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) line += "  ";
            line += r[i];
            if (i + 1 < r.size()) line.append(width[i] - r[i].size(), ' ');
        }
        out << line << "\n";
    }
}

json number_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

OutputFormat parse_output_format(const std::string& text) {
    if (text == "text") return OutputFormat::Text;
    if (text == "csv") return OutputFormat::Csv;
    if (text == "json") return OutputFormat::Json;
    throw ConfigError("unknown output format '" + text + "' (expected text, csv or json)");
}

ExperimentConfig parse_config(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    ExperimentConfig cfg;
    Reader root(doc, "");

    if (const json* t = root.find("topology")) {
        Reader r(*t, "topology");
        const long long k = r.integer("k", cfg.k);
        if (k < 3 || k > 10000) throw ConfigError("config: topology.k: must be in [3, 10000]");
        cfg.k = static_cast<int>(k);
        r.finish();
    }

    if (const json* p = root.find("parameters")) {
        Reader r(*p, "parameters");
        cfg.mu = r.number("mu", cfg.mu);
        cfg.delta = r.number("delta", cfg.delta);
        cfg.gammas = r.numbers("gammas");
        r.finish();
    }
    if (!(cfg.mu > 0.0) || !std::isfinite(cfg.mu)) throw ConfigError("config: parameters.mu: must be positive");
    if (!(cfg.delta >= 0.0) || !std::isfinite(cfg.delta))
        throw ConfigError("config: parameters.delta: must be non-negative");
    if (cfg.gammas.empty()) throw ConfigError("config: parameters.gammas: grid must not be empty");
    for (std::size_t i = 0; i < cfg.gammas.size(); ++i) {
        if (!(cfg.gammas[i] >= 0.0) || !std::isfinite(cfg.gammas[i]))
            throw ConfigError("config: parameters.gammas[" + std::to_string(i) + "]: must be non-negative");
    }

    if (const json* sc = root.find("scenarios")) {
        if (!sc->is_array()) throw ConfigError("config: scenarios: expected an array");
        for (std::size_t i = 0; i < sc->size(); ++i) {
            const std::string path = "scenarios[" + std::to_string(i) + "]";
            Reader r((*sc)[i], path);
            ScenarioRow row;
            row.scenario = read_scenario(r);
            row.name = r.string("name", row.scenario.label());
            if (r.find("delta")) {
                const double d = r.number("delta", 0.0);
                if (!(d >= 0.0) || !std::isfinite(d)) throw ConfigError("config: " + path + ".delta: must be non-negative");
                row.delta = d;
            }
            r.finish();
            cfg.scenarios.push_back(std::move(row));
        }
    }

    if (const json* cal = root.find("calibration")) {
        if (!cal->is_array()) throw ConfigError("config: calibration: expected an array");
        for (std::size_t i = 0; i < cal->size(); ++i) {
            const std::string path = "calibration[" + std::to_string(i) + "]";
            Reader r((*cal)[i], path);
            CalibrationEntry e;
            e.scenario = read_scenario(r);
            e.gamma = r.number("gamma", 0.0);
            e.target_theta = r.number("target_theta", 0.0);
            e.lo = r.number("delta_lo", e.lo);
            e.hi = r.number("delta_hi", e.hi);
            r.finish();
            if (!(e.gamma > 0.0)) throw ConfigError("config: " + path + ".gamma: must be positive");
            if (!(e.target_theta > 0.0)) throw ConfigError("config: " + path + ".target_theta: must be positive");
            if (!(e.lo >= 0.0) || !(e.hi > e.lo)) throw ConfigError("config: " + path + ": need 0 <= delta_lo < delta_hi");
            cfg.calibration.push_back(e);
        }
    }

    if (const json* s = root.find("solver")) {
        Reader r(*s, "solver");
        cfg.solver.damping = r.number("damping", cfg.solver.damping);
        cfg.solver.tolerance = r.number("tolerance", cfg.solver.tolerance);
        cfg.solver.max_iterations = static_cast<int>(r.integer("max_iterations", cfg.solver.max_iterations));
        const std::string mode = r.string("interference_rate", to_string(cfg.solver.interference));
        try {
            cfg.solver.interference = parse_interference_rate(mode);
        } catch (const Error& e) {
            throw ConfigError("config: solver.interference_rate: " + std::string(e.what()));
        }
        r.finish();
        try {
            check(cfg.solver);
        } catch (const Error& e) {
            throw ConfigError("config: solver: " + std::string(e.what()));
        }
    }

    if (const json* s = root.find("simulation")) {
        Reader r(*s, "simulation");
        cfg.sim.horizon_s = r.number("horizon", cfg.sim.horizon_s);
        cfg.sim.warmup_s = r.number("warmup", cfg.sim.warmup_s);
        const long long seed = r.integer("seed", static_cast<long long>(cfg.sim.seed));
        if (seed < 0) throw ConfigError("config: simulation.seed: must be non-negative");
        cfg.sim.seed = static_cast<std::uint64_t>(seed);
        cfg.replications = static_cast<int>(r.integer("replications", cfg.replications));
        cfg.sim.defer_jitter_s = r.number("defer_jitter", cfg.sim.defer_jitter_s);
        cfg.sim.sense_hops = static_cast<int>(r.integer("sense_hops", cfg.sim.sense_hops));
        const long long cap = r.integer("queue_cap", static_cast<long long>(cfg.sim.queue_cap));
        if (cap < 1) throw ConfigError("config: simulation.queue_cap: must be positive");
        cfg.sim.queue_cap = static_cast<std::size_t>(cap);
        cfg.sim.batches = static_cast<int>(r.integer("batches", cfg.sim.batches));
        r.finish();
        if (!(cfg.sim.horizon_s > cfg.sim.warmup_s) || cfg.sim.warmup_s < 0.0)
            throw ConfigError("config: simulation: need 0 <= warmup < horizon");
        if (cfg.replications < 1) throw ConfigError("config: simulation.replications: must be at least 1");
    }

    if (const json* o = root.find("output")) {
        Reader r(*o, "output");
        const std::string f = r.string("format", "text");
        try {
            cfg.format = parse_output_format(f);
        } catch (const Error& e) {
            throw ConfigError("config: output.format: " + std::string(e.what()));
        }
        r.finish();
    }

    if (const json* s = root.find("sweep")) {
        Reader r(*s, "sweep");
        SweepSpec sw;
        sw.axis = parse_axis(r.string("axis", "delta"), r);
        sw.values = r.numbers("values");
        sw.simulate = r.boolean("simulate", false);
        r.finish();
        if (sw.values.empty()) throw ConfigError("config: sweep.values: must not be empty");
        for (std::size_t i = 0; i < sw.values.size(); ++i) {
            const double v = sw.values[i];
            const bool bad = !std::isfinite(v) || v < 0.0 || (sw.axis == SweepAxis::Beta && (v < 1.0 || v != std::floor(v))) ||
                             (sw.axis == SweepAxis::PMix && v > 1.0);
            if (bad) throw ConfigError("config: sweep.values[" + std::to_string(i) + "]: out of range for axis " + axis_name(sw.axis));
        }
        cfg.sweep = sw;
    }
    root.finish();

    // Every row must be valid on its own.
    const ChainTopology topo = build_chain(cfg.k);
    for (std::size_t i = 0; i < cfg.scenarios.size(); ++i) {
        const ScenarioRow& row = cfg.scenarios[i];
        for (double g : cfg.gammas) {
            try {
                validate(row.scenario, cell_params(cfg, row.scenario, g, row.delta.value_or(cfg.delta)), topo);
            } catch (const Error& e) {
                throw ConfigError("config: scenarios[" + std::to_string(i) + "] (" + row.name + "): " + e.what());
            }
        }
    }
    for (std::size_t i = 0; i < cfg.calibration.size(); ++i) {
        const CalibrationEntry& e = cfg.calibration[i];
        try {
            validate(e.scenario, cell_params(cfg, e.scenario, e.gamma, e.lo), topo);
        } catch (const Error& err) {
            throw ConfigError("config: calibration[" + std::to_string(i) + "]: " + err.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

CalibrationResult calibrate_delta(const ChainTopology& topo, const Scenario& scenario, const ModelParams& base,
                                  double target_theta, double lo, double hi, const SolverOptions& opts,
                                  double rel_tol) {
    if (!(target_theta > 0.0) || !(lo >= 0.0) || !(hi > lo))
        throw CalibrationError("calibration needs target > 0 and 0 <= lo < hi");
    const double tol = rel_tol * target_theta;

    auto theta_at = [&](double delta) -> std::optional<double> {
        ModelParams p = base;
        p.delta = delta;
        try {
            return analyze(topo, scenario, p, opts).theta;
        } catch (const ConfigError&) {
            throw;
        } catch (const ScenarioError&) {
            throw;
        } catch (const Error&) {
            return std::nullopt;
        }
    };

    const auto at_lo = theta_at(lo);
    if (!at_lo) throw CalibrationError("analysis fails at the lower bracket delta=" + fmt("%g", lo));
    if (std::abs(*at_lo - target_theta) < tol) return {lo, *at_lo, 0};
    if (*at_lo < target_theta)
        throw CalibrationError("target " + fmt("%g", target_theta) + " above theta(delta_lo)=" + fmt("%g", *at_lo));
    const auto at_hi = theta_at(hi);
    if (at_hi && std::abs(*at_hi - target_theta) < tol) return {hi, *at_hi, 0};
    if (at_hi && *at_hi > target_theta)
        throw CalibrationError("target " + fmt("%g", target_theta) + " below theta(delta_hi)=" + fmt("%g", *at_hi));

    for (int i = 1; i <= 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const auto th = theta_at(mid);
        if (th && std::abs(*th - target_theta) < tol) return {mid, *th, i};
        if (th && *th > target_theta)
            lo = mid;
        else
            hi = mid;
    }
    throw CalibrationError("bisection did not reach the target within 200 steps");
}

double cell_delta(const ExperimentConfig& config, const ScenarioRow& row, double gamma) {
    if (row.delta) return *row.delta;
    const CalibrationEntry* plain = nullptr;
    const CalibrationEntry* exact = nullptr;
    for (const auto& e : config.calibration) {
        if (e.scenario.flows != row.scenario.flows || !same_gamma(e.gamma, gamma)) continue;
        if (e.scenario.retransmission == row.scenario.retransmission && e.scenario.coding == row.scenario.coding) {
            if (!exact) exact = &e;
        } else if (!e.scenario.retransmission && !e.scenario.coding) {
            if (!plain) plain = &e;
        }
    }
    const CalibrationEntry* use = exact ? exact : plain;
    if (!use) return config.delta;
    const ChainTopology topo = build_chain(config.k);
    return calibrate_delta(topo, use->scenario, cell_params(config, use->scenario, use->gamma, 0.0),
                           use->target_theta, use->lo, use->hi, config.solver)
        .delta;
}

ComparisonTable run_table(const ExperimentConfig& config, RunMode mode) {
    const ChainTopology topo = build_chain(config.k);
    ComparisonTable table;
    for (const auto& sr : config.scenarios) {
        for (double g : config.gammas) {
            ComparisonRow row;
            row.scenario = sr.name;
            row.spec = sr.scenario;
            row.gamma_1 = g;
            row.gamma_k = sr.scenario.flows == 2 ? g : 0.0;
            try {
                row.delta = cell_delta(config, sr, g);
            } catch (const Error& e) {
                record_failure(row, e);
                table.push_back(std::move(row));
                continue;
            }
            evaluate(config, topo, row, mode != RunMode::Simulate, mode != RunMode::Analyze);
            table.push_back(std::move(row));
        }
    }
    return table;
}

ComparisonTable run_sweep(const ExperimentConfig& config) {
    if (!config.sweep) throw ConfigError("config: sweep section required for the sweep command");
    const SweepSpec& sw = *config.sweep;
    const ChainTopology topo = build_chain(config.k);
    const std::vector<double> gammas = sw.axis == SweepAxis::Gamma ? sw.values : config.gammas;
    const std::vector<double> axis_values = sw.axis == SweepAxis::Gamma ? std::vector<double>{0.0} : sw.values;

    ComparisonTable table;
    for (const auto& sr : config.scenarios) {
        for (double g : gammas) {
            std::optional<double> previous;
            for (double v : axis_values) {
                ComparisonRow row;
                row.scenario = sr.name;
                row.spec = sr.scenario;
                row.gamma_1 = g;
                row.gamma_k = sr.scenario.flows == 2 ? g : 0.0;
                row.axis = axis_name(sw.axis);
                row.axis_value = sw.axis == SweepAxis::Gamma ? g : v;
                if (sw.axis == SweepAxis::Beta) row.spec.beta = static_cast<int>(v);
                if (sw.axis == SweepAxis::PMix) row.spec.p_mix = v;
                try {
                    row.delta = sw.axis == SweepAxis::Delta ? v : cell_delta(config, sr, g);
                } catch (const Error& e) {
                    record_failure(row, e);
                    table.push_back(std::move(row));
                    continue;
                }
                evaluate(config, topo, row, true, sw.simulate);
                if (sw.axis == SweepAxis::Delta && row.analytic) {
                    if (previous && *row.analytic > *previous * (1.0 + 1e-12)) row.monotonicity_alarm = true;
                    previous = row.analytic;
                }
                table.push_back(std::move(row));
            }
        }
    }
    return table;
}

std::vector<CalibrationRow> run_calibration(const ExperimentConfig& config) {
    const ChainTopology topo = build_chain(config.k);
    std::vector<CalibrationRow> rows;
    for (const auto& e : config.calibration) {
        CalibrationRow row{e, std::nullopt, {}};
        try {
            row.result = calibrate_delta(topo, e.scenario, cell_params(config, e.scenario, e.gamma, 0.0),
                                         e.target_theta, e.lo, e.hi, config.solver);
        } catch (const Error& err) {
            row.failure = err.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_table(std::ostream& out, const ComparisonTable& table, OutputFormat format) {
    const bool sweep = !table.empty() && !table.front().axis.empty();
    switch (format) {
        case OutputFormat::Text: {
            std::vector<std::vector<std::string>> rows;
            std::vector<std::string> head{"scenario", "gamma_1", "gamma_k", "delta"};
            if (sweep) head.insert(head.begin() + 1, {"axis", "value"});
            head.insert(head.end(), {"analysis", "simulation", "ci95", "rel_err", "status"});
            rows.push_back(head);
            for (const auto& r : table) {
                std::vector<std::string> line{r.scenario, fmt("%.3f", r.gamma_1), fmt("%.3f", r.gamma_k),
                                              fmt("%.6e", r.delta)};
                if (sweep) line.insert(line.begin() + 1, {r.axis, fmt("%g", r.axis_value)});
                line.push_back(opt(r.analytic, "%.4f"));
                line.push_back(opt(r.simulated, "%.4f"));
                line.push_back(r.simulated && r.replications > 0 ? fmt("%.4f", r.ci_half_width) : "-");
                line.push_back(r.relative_error ? fmt("%.3f%%", 100.0 * *r.relative_error) : "-");
                std::string status = r.ok() ? "ok" : "FAILED: " + r.failure;
                if (r.monotonicity_alarm) status = "ALARM: theta increased with delta" + (r.ok() ? "" : "; " + status);
                line.push_back(status);
                rows.push_back(std::move(line));
            }
            write_aligned(out, rows);
            break;
        }
        case OutputFormat::Csv: {
            out << "scenario,flows,retransmission,coding,beta,p_mix";
            if (sweep) out << ",axis,value";
            out << ",gamma_1,gamma_k,delta,analysis,simulation,ci95,std_error,replications,rel_error,"
                   "monotonicity_alarm,status,failure\n";
            for (const auto& r : table) {
                out << csv_quote(r.scenario) << ',' << r.spec.flows << ',' << (r.spec.retransmission ? 1 : 0) << ','
                    << (r.spec.coding ? 1 : 0) << ',' << r.spec.beta << ',' << fmt("%.10g", r.spec.p_mix);
                if (sweep) out << ',' << r.axis << ',' << fmt("%.10g", r.axis_value);
                out << ',' << fmt("%.10g", r.gamma_1) << ',' << fmt("%.10g", r.gamma_k) << ','
                    << fmt("%.10g", r.delta) << ',' << (r.analytic ? fmt("%.10g", *r.analytic) : "") << ','
                    << (r.simulated ? fmt("%.10g", *r.simulated) : "") << ','
                    << (r.simulated ? fmt("%.10g", r.ci_half_width) : "") << ','
                    << (r.simulated ? fmt("%.10g", r.std_error) : "") << ',' << r.replications << ','
                    << (r.relative_error ? fmt("%.10g", *r.relative_error) : "") << ','
                    << (r.monotonicity_alarm ? 1 : 0) << ',' << (r.ok() ? "ok" : "failed") << ','
                    << csv_quote(r.failure) << "\n";
            }
            break;
        }
        case OutputFormat::Json: {
            nlohmann::ordered_json rows = nlohmann::ordered_json::array();
            for (const auto& r : table) {
                nlohmann::ordered_json j;
                j["scenario"] = r.scenario;
                j["flows"] = r.spec.flows;
                j["retransmission"] = r.spec.retransmission;
                j["coding"] = r.spec.coding;
                j["beta"] = r.spec.beta;
                j["p_mix"] = r.spec.p_mix;
                if (sweep) {
                    j["axis"] = r.axis;
                    j["value"] = r.axis_value;
                    j["monotonicity_alarm"] = r.monotonicity_alarm;
                }
                j["gamma_1"] = r.gamma_1;
                j["gamma_k"] = r.gamma_k;
                j["delta"] = r.delta;
                j["analysis"] = number_or_null(r.analytic);
                j["simulation"] = number_or_null(r.simulated);
                j["ci95"] = r.simulated ? json(r.ci_half_width) : json(nullptr);
                j["std_error"] = r.simulated ? json(r.std_error) : json(nullptr);
                j["replications"] = r.replications;
                j["rel_error"] = number_or_null(r.relative_error);
                j["status"] = r.ok() ? "ok" : "failed";
                if (!r.ok()) {
                    j["failure"] = r.failure;
                    j["failure_kind"] = to_string(*r.failure_kind);
                }
                rows.push_back(std::move(j));
            }
            out << rows.dump(2) << "\n";
            break;
        }
    }
}

void write_calibration(std::ostream& out, const std::vector<CalibrationRow>& rows, OutputFormat format) {
    switch (format) {
        case OutputFormat::Text: {
            std::vector<std::vector<std::string>> lines{
                {"scenario", "gamma", "target", "delta", "theta", "bisections", "status"}};
            for (const auto& r : rows) {
                lines.push_back({r.entry.scenario.label(), fmt("%.3f", r.entry.gamma),
                                 fmt("%.4f", r.entry.target_theta), r.result ? fmt("%.6e", r.result->delta) : "-",
                                 r.result ? fmt("%.4f", r.result->theta) : "-",
                                 r.result ? std::to_string(r.result->bisections) : "-",
                                 r.result ? "ok" : "FAILED: " + r.failure});
            }
            write_aligned(out, lines);
            break;
        }
        case OutputFormat::Csv: {
            out << "scenario,gamma,target_theta,delta,theta,bisections,status,failure\n";
            for (const auto& r : rows) {
                out << csv_quote(r.entry.scenario.label()) << ',' << fmt("%.10g", r.entry.gamma) << ','
                    << fmt("%.10g", r.entry.target_theta) << ','
                    << (r.result ? fmt("%.10g", r.result->delta) : "") << ','
                    << (r.result ? fmt("%.10g", r.result->theta) : "") << ','
                    << (r.result ? std::to_string(r.result->bisections) : "") << ','
                    << (r.result ? "ok" : "failed") << ',' << csv_quote(r.failure) << "\n";
            }
            break;
        }
        case OutputFormat::Json: {
            nlohmann::ordered_json arr = nlohmann::ordered_json::array();
            for (const auto& r : rows) {
                nlohmann::ordered_json j;
                j["scenario"] = r.entry.scenario.label();
                j["gamma"] = r.entry.gamma;
                j["target_theta"] = r.entry.target_theta;
                j["delta"] = r.result ? json(r.result->delta) : json(nullptr);
                j["theta"] = r.result ? json(r.result->theta) : json(nullptr);
                j["bisections"] = r.result ? json(r.result->bisections) : json(nullptr);
                j["status"] = r.result ? "ok" : "failed";
                if (!r.result) j["failure"] = r.failure;
                arr.push_back(std::move(j));
            }
            out << arr.dump(2) << "\n";
            break;
        }
    }
}

}  // namespace xorchain
