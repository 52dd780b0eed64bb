#include "xorchain/collision.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace xorchain {

std::string to_string(InterferenceRate mode) {
    return mode == InterferenceRate::Total ? "total" : "native_only";
}

InterferenceRate parse_interference_rate(const std::string& text) {
    if (text == "total") return InterferenceRate::Total;
    if (text == "native_only") return InterferenceRate::NativeOnly;
    throw ConfigError("interference_rate must be 'total' or 'native_only', got '" + text + "'");
}

void check(const SolverOptions& opts) {
    if (!(opts.damping > 0.0 && opts.damping <= 1.0)) throw ConfigError("damping must lie in (0, 1]");
    if (!(opts.tolerance > 0.0)) throw ConfigError("tolerance must be > 0");
    if (opts.max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
}

std::vector<Interferer> interferer_set(const ChainTopology& topo, NodeId i, NodeId j, const Scenario& scenario) {
    if (!topo.adjacent(i, j)) {
        throw TopologyError("N" + std::to_string(i) + " and N" + std::to_string(j) + " are not neighbours");
    }
    std::vector<NodeId> candidates{j};
    for (NodeId n : topo.neighbors(j)) {
        if (n != i) candidates.push_back(n);
    }
    std::sort(candidates.begin(), candidates.end());

    std::vector<Interferer> out;
    for (NodeId x : candidates) {
        if (x == topo.size()) {
            // With one flow N_k only receives.
            if (scenario.flows == 1) continue;
            out.push_back({x, RateSelector::FlowTwo});
        } else if (x == 1) {
            out.push_back({x, RateSelector::FlowOne});
        } else {
            out.push_back({x, RateSelector::Total});
        }
    }
    return out;
}

double interferer_rate(const Interferer& who, const RateLedger& ledger, const Scenario& scenario,
                       InterferenceRate mode) {
    const NodeRates& r = ledger.at(who.node);
    switch (who.rate) {
        case RateSelector::FlowOne: return r.flow[0];
        case RateSelector::FlowTwo: return r.flow[1];
        case RateSelector::Total: break;
    }
    if (scenario.coding && mode == InterferenceRate::NativeOnly) return r.total - r.coded_queue;
    return r.total;
}

double success_probability(std::span<const double> rates, double delta) {
    double p = 1.0;
    for (double rate : rates) {
        if (!(rate >= 0.0)) {
            throw ModelDomainError("negative or undefined transmit rate in collision term");
        }
        const double window = 2.0 * delta * rate;
        if (window >= 1.0) {
            std::ostringstream os;
            os << "collision window saturated: 2*delta*lambda = " << window << " >= 1";
            throw ModelDomainError(os.str());
        }
        p *= 1.0 - window;
    }
    return p;
}

double success_probability(std::span<const Interferer> interferers, double delta, const RateLedger& ledger,
                           const Scenario& scenario, InterferenceRate mode) {
    std::vector<double> rates;
    rates.reserve(interferers.size());
    for (const auto& who : interferers) rates.push_back(interferer_rate(who, ledger, scenario, mode));
    return success_probability(rates, delta);
}

LinkProbMap evaluate_success(const ChainTopology& topo, const Scenario& scenario, double delta,
                             const RateLedger& ledger, InterferenceRate mode) {
    LinkProbMap p;
    for (const Link& link : active_links(topo, scenario)) {
        const auto who = interferer_set(topo, link.from, link.to, scenario);
        p[link] = success_probability(who, delta, ledger, scenario, mode);
    }
    return p;
}

JointSolution solve_joint(const ChainTopology& topo, const Scenario& scenario, const ModelParams& params,
                          const RateModel& rate_model, const SolverOptions& opts) {
    check(opts);
    LinkProbMap p;
    for (const Link& link : active_links(topo, scenario)) p[link] = 1.0;

    SolverDiagnostics diag;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        RateLedger ledger = rate_model(p);
        const LinkProbMap f = evaluate_success(topo, scenario, params.delta, ledger, opts.interference);

        double residual = ledger.sweep_residual;
        for (const auto& [link, value] : p) residual = std::max(residual, std::abs(value - f.at(link)));

        diag.iterations = it;
        diag.residual = residual;
        if (residual <= opts.tolerance && ledger.sweep_converged) {
            diag.converged = true;
            return {std::move(p), std::move(ledger), diag};
        }
        for (auto& [link, value] : p) value = (1.0 - opts.damping) * value + opts.damping * f.at(link);
    }
    diag.converged = false;
    RateLedger ledger = rate_model(p);
    return {std::move(p), std::move(ledger), diag};
}

}  // namespace xorchain
