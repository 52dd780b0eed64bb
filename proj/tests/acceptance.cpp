// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "xorchain/harness.hpp"

using namespace xorchain;

namespace {

const std::string kConfigs = XORCHAIN_CONFIG_DIR;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

struct Gate {
    std::vector<std::string> notes;
    bool ok = true;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            notes.push_back("  miss: " + what);
        }
    }
    void note(const std::string& what) { notes.push_back("  " + what); }
};

std::string num(double v, int prec = 6) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

const std::vector<Scenario> kSteps{{1, false, false, 1, 0}, {2, false, false, 1, 0}, {1, true, false, 7, 0},
                                   {2, true, false, 7, 0},  {2, false, true, 1, 0.5}, {2, true, true, 7, 0.5}};

ModelParams load(const Scenario& s, double g, double d) { return {d, 250, g, s.flows == 2 ? g : 0.0}; }

void criterion1(Gate& g) {
    const auto table = run_table(load_config(kConfigs + "/table_retx.json"), RunMode::Analyze);
    g.expect(table.size() == 8, "eight table rows");
    for (const auto& row : table) {
        const double offered = row.gamma_1 + row.gamma_k;
        g.expect(row.ok() && row.analytic && rel(*row.analytic, offered) <= 1e-9,
                 row.scenario + " gamma=" + num(row.gamma_1) + " theta=" + (row.analytic ? num(*row.analytic, 12) : "-"));
    }
    // any stable delta, not only the fitted ones
    const auto t = build_chain(5);
    for (int flows : {1, 2}) {
        const Scenario s{flows, true, false, 7, 0};
        for (double gamma : {10.0, 14.286, 20.0, 25.0}) {
            for (double d : {0.0, 5e-5, 2e-4, 6e-4}) {
                const auto r = analyze(t, s, load(s, gamma, d));
                g.expect(rel(r.theta, flows * gamma) <= 1e-9, s.label() + " gamma=" + num(gamma) + " delta=" + num(d));
            }
        }
    }
}

void criterion2(Gate& g) {
    const auto cfg = load_config(kConfigs + "/table_coding.json");
    for (const auto& row : run_table(cfg, RunMode::Analyze)) {
        if (!row.spec.retransmission) continue;
        const double target = row.gamma_1 == 25.0 ? 49.98 : 2 * row.gamma_1;
        const bool pass = row.ok() && row.analytic && rel(*row.analytic, target) <= 5e-3;
        g.expect(pass, "gamma=" + num(row.gamma_1) + " theta=" + (row.analytic ? num(*row.analytic) : row.failure));
        if (row.gamma_1 == 25.0) g.note("gamma=25 calibrated on its own row: delta=" + num(row.delta) + " theta=" + num(*row.analytic));
    }
    // the gamma=25 row also at the delta fitted on the no-retransmission two-flow row
    const auto t = build_chain(5);
    const Scenario plain{2, false, false, 1, 0};
    const Scenario s6{2, true, true, 7, 0.5};
    const auto fit = calibrate_delta(t, plain, load(plain, 25, 0), 46.82, 0.0, 5e-3);
    const double theta = analyze(t, s6, load(s6, 25, fit.delta)).theta;
    g.note("gamma=25 at the two-flow fitted delta=" + num(fit.delta) + ": theta=" + num(theta));
    g.expect(rel(theta, 49.98) <= 5e-3, "gamma=25 at the two-flow fitted delta");
}

void criterion3(Gate& g) {
    const auto t = build_chain(5);
    struct Row {
        int flows;
        double gamma, target, tol;
    };
    for (const Row r : {Row{1, 10, 9.37, 0.01}, Row{2, 10, 18.73, 0.02}}) {
        const Scenario s{r.flows, false, false, 1, 0};
        const auto fit = calibrate_delta(t, s, load(s, r.gamma, 0), r.target, 0.0, 5e-3);
        const double theta = analyze(t, s, load(s, r.gamma, fit.delta)).theta;
        g.note(std::to_string(r.flows) + " flow(s): delta*=" + num(fit.delta) + " theta=" + num(theta));
        g.expect(std::abs(theta - r.target) <= r.tol, "round trip for " + std::to_string(r.flows) + " flow(s)");
    }
}

void criterion4(Gate& g) {
    const auto cfg = load_config(kConfigs + "/agreement.json");
    g.expect(cfg.sim.horizon_s == 170.0 && cfg.replications == 10 && cfg.mu == 250.0, "grid settings");
    const auto table = run_compare(cfg);
    g.expect(table.size() == 8, "eight cells");
    int inside = 0;
    for (const auto& row : table) {
        if (!row.ok() || !row.relative_error) {
            g.expect(false, row.scenario + " failed: " + row.failure);
            continue;
        }
        const bool covered = std::abs(*row.simulated - *row.analytic) <= row.ci_half_width;
        inside += covered ? 1 : 0;
        g.note(row.scenario + " gamma=" + num(row.gamma_1) + " analysis=" + num(*row.analytic) + " sim=" +
               num(*row.simulated) + " +-" + num(row.ci_half_width, 3) + " err=" + num(100 * *row.relative_error, 3) +
               "%" + (covered ? "" : " (outside CI)"));
        g.expect(*row.relative_error <= 0.02, row.scenario + " gamma=" + num(row.gamma_1) + " above 2%");
    }
    g.note("analysis inside CI in " + std::to_string(inside) + "/8 cells");
    g.expect(inside >= 7, "CI containment in at least 7 of 8 cells");
}

double fixed_point_residual(const ChainTopology& t, const Scenario& s, const ModelParams& p, const ThroughputReport& r) {
    const auto ledger = propagate_rates(t, s, r.p, p);
    const auto f = evaluate_success(t, s, p.delta, ledger);
    double worst = 0.0;
    for (const auto& [link, prob] : r.p) worst = std::max(worst, std::abs(prob - f.at(link)));
    for (NodeId i = 1; i <= t.size(); ++i) worst = std::max(worst, std::abs(ledger.at(i).total - r.ledger.at(i).total));
    return worst;
}

void criterion5(Gate& g) {
    double worst = 0.0;
    int configs = 0;
    for (int k : {3, 5, 8}) {
        const auto t = build_chain(k);
        for (const Scenario& s : kSteps) {
            for (double gamma : {10.0, 14.286, 20.0, 25.0}) {
                for (double d : {0.0, 1e-4, 3e-4, 6e-4}) {
                    try {
                        const auto p = load(s, gamma, d);
                        const auto r = analyze(t, s, p);
                        worst = std::max({worst, r.diagnostics.residual, fixed_point_residual(t, s, p, r)});
                        ++configs;
                    } catch (const StabilityError&) {
                    } catch (const ModelDomainError&) {
                    }
                }
            }
        }
    }
    g.note("worst residual " + num(worst, 3) + " over " + std::to_string(configs) + " configurations");
    g.expect(worst <= 1e-9, "residual <= 1e-9");

    const auto t = build_chain(5);
    const Scenario s{1, false, false, 1, 0};
    double gap = 0.0;
    for (double gamma : {10.0, 20.0}) {
        for (double d : {1e-4, 5e-4, 1e-3}) {
            const auto r = analyze(t, s, load(s, gamma, d));
            const auto ref = oracle::picard_chain5(gamma, d);
            gap = std::max({gap, std::abs(r.p.at({1, 2}) - ref.p[0]), std::abs(r.p.at({2, 3}) - ref.p[1]),
                            std::abs(r.p.at({3, 4}) - ref.p[2]), std::abs(r.p.at({4, 5}) - ref.p[3])});
        }
    }
    g.note("largest gap to the Picard oracle " + num(gap, 3));
    g.expect(gap <= 1e-6, "oracle agreement to 1e-6");
}

void criterion6(Gate& g) {
    const auto t = build_chain(5);
    const std::vector<Scenario> coding{{2, false, true, 1, 0.5}, {2, true, true, 7, 0.5}};

    double worst = 0.0;
    bool zeros = true;
    for (const Scenario& s : coding) {
        for (double gamma : {10.0, 20.0}) {
            for (double d : {0.0, 1e-4, 4e-4}) {
                const auto r = analyze(t, s, load(s, gamma, d));
                for (NodeId i = 1; i <= 5; ++i) {
                    const auto& n = r.ledger.at(i);
                    const double rhs = n.flow[0] + n.flow[1];
                    const double lhs = n.native_queue[0] + n.native_queue[1] + 2 * n.coded_queue;
                    worst = std::max(worst, std::abs(lhs - rhs) / std::max(rhs, 1e-300));
                }
                const auto& a = r.ledger.at(1);
                const auto& b = r.ledger.at(5);
                zeros = zeros && a.native_out[1] == 0.0 && b.native_out[0] == 0.0 && a.coded_out == 0.0 &&
                        b.coded_out == 0.0 && a.coded_in[0] == 0.0 && r.ledger.at(2).coded_in[0] == 0.0 &&
                        r.ledger.at(4).coded_in[1] == 0.0 && b.coded_in[1] == 0.0;
                if (!s.retransmission) zeros = zeros && a.native_out[0] == gamma && b.native_out[1] == gamma;
            }
        }
    }
    g.expect(worst <= 1e-12, "conservation identity (worst " + num(worst, 3) + ")");
    g.expect(zeros, "boundary zeros");

    bool monotone = true, lossless = true;
    for (const Scenario& s : kSteps) {
        double prev = 1e300;
        for (double d : {0.0, 1e-5, 1e-4, 1e-3}) {
            const double theta = analyze(t, s, load(s, 10, d)).theta;
            monotone = monotone && theta <= prev;
            if (d == 0.0) lossless = lossless && theta == s.flows * 10.0;
            prev = theta;
        }
    }
    g.expect(monotone, "theta non-increasing over the delta grid");
    g.expect(lossless, "delta=0 analysis equals the offered load");

    double pmix_gap = 0.0;
    for (bool retx : {false, true}) {
        const Scenario c{2, retx, true, 7, 0.0}, n{2, retx, false, 7, 0.0};
        pmix_gap = std::max(pmix_gap, std::abs(analyze(t, c, load(c, 15, 3e-4)).theta - analyze(t, n, load(n, 15, 3e-4)).theta));
    }
    g.expect(pmix_gap <= 1e-8, "P_mix=0 equals no coding (gap " + num(pmix_gap, 3) + ")");

    SimOptions o;
    o.seed = 606;
    bool within = true, balanced = true, repeat = true;
    for (const Scenario& s : kSteps) {
        const auto r = simulate(t, s, load(s, 10, 0.0), o);
        within = within && std::abs(r.theta - s.flows * 10.0) <= 3 * r.std_error;
        const auto busy = simulate(t, s, load(s, 20, 3e-4), o);
        for (int f = 0; f < s.flows; ++f) balanced = balanced && busy.flows[static_cast<std::size_t>(f)].balanced();
        const auto again = simulate(t, s, load(s, 20, 3e-4), o);
        repeat = repeat && again.theta == busy.theta && again.events == busy.events;
    }
    g.expect(within, "delta=0 simulation within 3 standard errors");
    g.expect(balanced, "simulator packet conservation");
    g.expect(repeat, "simulator determinism per seed");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Gate&)>>> criteria{
        {"retransmission identity", criterion1},
        {"coding with retransmission", criterion2},
        {"calibration round trip", criterion3},
        {"analysis/simulation agreement", criterion4},
        {"solver correctness", criterion5},
        {"property suite", criterion6},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Gate g;
        try {
            criteria[i].second(g);
        } catch (const std::exception& e) {
            g.expect(false, std::string("exception: ") + e.what());
        }
        std::printf("%s criterion %zu: %s\n", g.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str());
        for (const auto& n : g.notes) std::printf("%s\n", n.c_str());
        failed += g.ok ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
