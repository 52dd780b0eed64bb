#include "xorchain/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "xorchain/errors.hpp"

namespace xorchain {

namespace {

double prob(const LinkProbMap& p, NodeId from, NodeId to) {
    const auto it = p.find({from, to});
    if (it == p.end()) {
        throw ModelDomainError("no success probability for link " + to_string(Link{from, to}));
    }
    return it->second;
}

// Closed form of lambda = inflow + lambda * (1 - p).
double with_retransmission(double inflow, double p, NodeId from, NodeId to) {
    if (!(p > 0.0)) {
        throw ModelDomainError("zero success probability on retransmitting link " + to_string(Link{from, to}));
    }
    return inflow / p;
}

}  // namespace

RateLedger rates_no_coding(const ChainTopology& topo, const Scenario& scenario, const LinkProbMap& p,
                           const ModelParams& params) {
    if (scenario.coding) throw ScenarioError("rates_no_coding called for a coding scenario");
    const int k = topo.size();
    RateLedger ledger(k);

    for (NodeId i = 1; i <= k; ++i) {
        NodeRates& n = ledger.at(i);
        const double inflow = i == 1 ? params.gamma_1 : ledger.at(i - 1).flow[0] * prob(p, i - 1, i);
        const double lambda =
            scenario.retransmission && i < k ? with_retransmission(inflow, prob(p, i, i + 1), i, i + 1) : inflow;
        n.native_in[0] = inflow;
        n.flow[0] = lambda;
        n.native_queue[0] = lambda;
        n.native_out[0] = i == k ? 0.0 : lambda;
    }

    if (scenario.flows == 2) {
        for (NodeId i = k; i >= 1; --i) {
            NodeRates& n = ledger.at(i);
            const double inflow = i == k ? params.gamma_k : ledger.at(i + 1).flow[1] * prob(p, i + 1, i);
            const double lambda =
                scenario.retransmission && i > 1 ? with_retransmission(inflow, prob(p, i, i - 1), i, i - 1) : inflow;
            n.native_in[1] = inflow;
            n.flow[1] = lambda;
            n.native_queue[1] = lambda;
            n.native_out[1] = i == 1 ? 0.0 : lambda;
        }
    }

    for (NodeId i = 1; i <= k; ++i) {
        NodeRates& n = ledger.at(i);
        n.total = n.flow[0] + n.flow[1];
    }
    return ledger;
}

RateLedger rates_coding(const ChainTopology& topo, const Scenario& scenario, const LinkProbMap& p,
                        const ModelParams& params, const SolverOptions& opts) {
    if (!scenario.coding || scenario.flows != 2) {
        throw ScenarioError("rates_coding needs a two-flow coding scenario");
    }
    const int k = topo.size();
    const auto sz = static_cast<std::size_t>(k) + 2;
    std::vector<double> l1(sz, 0.0), l2(sz, 0.0);
    std::vector<double> in_n1(sz, 0.0), in_n2(sz, 0.0), in_c1(sz, 0.0), in_c2(sz, 0.0);
    std::vector<double> n1(sz, 0.0), n2(sz, 0.0), c(sz, 0.0);
    std::vector<double> out_n1(sz, 0.0), out_n2(sz, 0.0), out_c(sz, 0.0);

    RateLedger ledger(k);
    const double clamp_tol = opts.tolerance;
    auto non_negative = [&](double v, const char* what, NodeId i) {
        if (v >= 0.0) return v;
        if (-v < clamp_tol) {
            std::ostringstream os;
            os << "clamped " << what << " at N" << i << " from " << v << " to 0";
            ledger.warnings.push_back(os.str());
            std::clog << "warning: " << os.str() << '\n';
            return 0.0;
        }
        std::ostringstream os;
        os << "negative " << what << " at N" << i << ": " << v;
        throw ModelDomainError(os.str());
    };

    // Probability that a coded packet gets through within beta attempts.
    auto within_beta = [&](double q) { return 1.0 - std::pow(1.0 - q, scenario.beta); };

    // Encoder split and stable-state departures.
    auto split = [&](NodeId i) {
        const auto u = static_cast<std::size_t>(i);
        if (i == 1 || i == k) {
            c[u] = 0.0;
            n1[u] = l1[u];
            n2[u] = l2[u];
            out_n1[u] = i == 1 ? l1[u] : 0.0;
            out_n2[u] = i == k ? l2[u] : 0.0;
            out_c[u] = 0.0;
            return;
        }
        const double mixed = std::min(l1[u], l2[u]) * scenario.p_mix;
        c[u] = mixed;
        n1[u] = non_negative(l1[u] - mixed, "flow-1 native rate", i);
        n2[u] = non_negative(l2[u] - mixed, "flow-2 native rate", i);
        out_n1[u] = n1[u];
        out_n2[u] = n2[u];
        out_c[u] = c[u];
    };

    const double sweep_tol = opts.tolerance * 1e-2;
    double change = 0.0;
    int sweep = 0;
    bool converged = false;
    while (sweep < opts.max_iterations) {
        ++sweep;
        change = 0.0;
        for (NodeId i = 1; i <= k; ++i) {
            const auto u = static_cast<std::size_t>(i);
            in_n1[u] = i == 1 ? params.gamma_1 : out_n1[u - 1] * prob(p, i - 1, i);
            in_c1[u] = i <= 2 ? 0.0 : out_c[u - 1] * prob(p, i - 1, i);
            double next;
            if (i == k) {
                next = in_n1[u] + in_c1[u];
            } else if (scenario.retransmission) {
                const double decoded = i == 1 ? 0.0 : in_c1[u] * within_beta(prob(p, i + 1, i));
                next = with_retransmission(in_n1[u] + decoded, prob(p, i, i + 1), i, i + 1);
            } else {
                next = in_n1[u] + (i == 1 ? 0.0 : in_c1[u] * prob(p, i + 1, i));
            }
            change = std::max(change, std::abs(next - l1[u]));
            l1[u] = next;
            split(i);
        }
        for (NodeId i = k; i >= 1; --i) {
            const auto u = static_cast<std::size_t>(i);
            in_n2[u] = i == k ? params.gamma_k : out_n2[u + 1] * prob(p, i + 1, i);
            in_c2[u] = i >= k - 1 ? 0.0 : out_c[u + 1] * prob(p, i + 1, i);
            double next;
            if (i == 1) {
                next = in_n2[u] + in_c2[u];
            } else if (scenario.retransmission) {
                const double decoded = i == k ? 0.0 : in_c2[u] * within_beta(prob(p, i - 1, i));
                next = with_retransmission(in_n2[u] + decoded, prob(p, i, i - 1), i, i - 1);
            } else {
                next = in_n2[u] + (i == k ? 0.0 : in_c2[u] * prob(p, i - 1, i));
            }
            change = std::max(change, std::abs(next - l2[u]));
            l2[u] = next;
            split(i);
        }
        if (change <= sweep_tol) {
            converged = true;
            break;
        }
    }

    for (NodeId i = 1; i <= k; ++i) {
        const auto u = static_cast<std::size_t>(i);
        NodeRates& n = ledger.at(i);
        n.flow = {l1[u], l2[u]};
        n.native_in = {in_n1[u], in_n2[u]};
        n.coded_in = {in_c1[u], in_c2[u]};
        n.native_queue = {n1[u], n2[u]};
        n.native_out = {out_n1[u], out_n2[u]};
        n.coded_queue = c[u];
        n.coded_out = out_c[u];
        n.total = n1[u] + n2[u] + c[u];
    }
    ledger.sweeps = sweep;
    ledger.sweep_residual = change;
    ledger.sweep_converged = converged;
    return ledger;
}

RateLedger propagate_rates(const ChainTopology& topo, const Scenario& scenario, const LinkProbMap& p,
                           const ModelParams& params, const SolverOptions& opts) {
    return scenario.coding ? rates_coding(topo, scenario, p, params, opts) : rates_no_coding(topo, scenario, p, params);
}

double throughput(const RateLedger& ledger, const Scenario& scenario) {
    const int k = ledger.size();
    if (scenario.flows == 1) return ledger.at(k).flow[0];
    return ledger.at(1).flow[1] + ledger.at(k).flow[0];
}

ThroughputReport analyze(const ChainTopology& topo, const Scenario& scenario, const ModelParams& params,
                         const SolverOptions& opts) {
    validate(scenario, params, topo);
    check(opts);
    // Every packet a source generates passes through its own queue at least once.
    if (params.gamma_1 / params.mu >= 1.0) throw StabilityError(1, params.gamma_1 / params.mu);
    if (params.gamma_k / params.mu >= 1.0) throw StabilityError(topo.size(), params.gamma_k / params.mu);

    const RateModel model = [&](const LinkProbMap& p) { return propagate_rates(topo, scenario, p, params, opts); };
    JointSolution sol = solve_joint(topo, scenario, params, model, opts);
    if (!sol.diagnostics.converged) {
        std::ostringstream os;
        os << "joint solve did not converge in " << sol.diagnostics.iterations << " iterations (residual "
           << sol.diagnostics.residual << ")";
        throw ConvergenceError(os.str(), sol.diagnostics);
    }

    ThroughputReport report;
    report.theta = throughput(sol.ledger, scenario);
    for (NodeId i = 1; i <= topo.size(); ++i) {
        const double rho = sol.ledger.at(i).total / params.mu;
        if (rho >= 1.0) throw StabilityError(i, rho);
        report.utilization.push_back(rho);
    }
    report.p = std::move(sol.p);
    report.ledger = std::move(sol.ledger);
    report.diagnostics = sol.diagnostics;
    return report;
}

}  // namespace xorchain
