#include "xorchain/topology.hpp"

#include <cmath>
#include <sstream>

#include "xorchain/errors.hpp"

namespace xorchain {

std::string to_string(const Link& link) {
    std::ostringstream os;
    os << link.from << "->" << link.to;
    return os.str();
}

ChainTopology::ChainTopology(int k) : k_(k) {
    if (k < 3) {
        throw ConfigError("chain needs at least 3 nodes, got k=" + std::to_string(k));
    }
    neighbors_.resize(static_cast<std::size_t>(k) + 1);
    for (NodeId i = 1; i <= k; ++i) {
        auto& n = neighbors_[static_cast<std::size_t>(i)];
        if (i > 1) n.push_back(i - 1);
        if (i < k) n.push_back(i + 1);
    }
}

const std::vector<NodeId>& ChainTopology::neighbors(NodeId node) const {
    if (!contains(node)) {
        throw TopologyError("node N" + std::to_string(node) + " is not in a chain of " + std::to_string(k_));
    }
    return neighbors_[static_cast<std::size_t>(node)];
}

bool ChainTopology::adjacent(NodeId a, NodeId b) const noexcept {
    return contains(a) && contains(b) && hops(a, b) == 1;
}

ChainTopology build_chain(int k) { return ChainTopology(k); }

int Scenario::step() const noexcept {
    if (flows == 1 && !coding) return retransmission ? 3 : 1;
    if (flows == 2 && !coding) return retransmission ? 4 : 2;
    if (flows == 2 && coding) return retransmission ? 6 : 5;
    return 0;
}

std::string Scenario::label() const {
    std::ostringstream os;
    os << "step" << step() << ":flows=" << flows << ",retx=" << (retransmission ? "yes" : "no")
       << ",coding=" << (coding ? "yes" : "no");
    if (retransmission) os << ",beta=" << beta;
    if (coding) os << ",p_mix=" << p_mix;
    return os.str();
}

namespace {

bool finite_non_negative(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

ValidatedConfig validate(const Scenario& scenario, const ModelParams& params, const ChainTopology& topo) {
    if (scenario.flows != 1 && scenario.flows != 2) {
        throw ScenarioError("flows must be 1 or 2, got " + std::to_string(scenario.flows));
    }
    if (scenario.coding && scenario.flows != 2) {
        throw ScenarioError("coding requires two flows");
    }
    if (scenario.beta < 1) {
        throw ConfigError("beta must be >= 1, got " + std::to_string(scenario.beta));
    }
    if (!std::isfinite(scenario.p_mix) || scenario.p_mix < 0.0 || scenario.p_mix > 1.0) {
        throw ConfigError("p_mix must lie in [0, 1]");
    }
    if (!finite_non_negative(params.delta)) throw ConfigError("delta must be a finite value >= 0");
    if (!std::isfinite(params.mu) || params.mu <= 0.0) throw ConfigError("mu must be > 0");
    if (!finite_non_negative(params.gamma_1)) throw ConfigError("gamma_1 must be a finite value >= 0");
    if (!finite_non_negative(params.gamma_k)) throw ConfigError("gamma_k must be a finite value >= 0");
    if (params.gamma_1 <= 0.0 && params.gamma_k <= 0.0) {
        throw ConfigError("at least one source rate must be > 0");
    }
    if (scenario.flows == 2 && params.gamma_k <= 0.0) {
        throw ScenarioError("two flows need gamma_k > 0");
    }
    if (scenario.flows == 1 && params.gamma_k > 0.0) {
        throw ScenarioError("one flow runs N_1 -> N_k only; gamma_k must be 0");
    }

    ValidatedConfig cfg{topo, scenario, params, false};
    cfg.likely_unstable = params.gamma_1 >= params.mu || params.gamma_k >= params.mu;
    return cfg;
}

std::vector<Link> active_links(const ChainTopology& topo, const Scenario& scenario) {
    std::vector<Link> links;
    for (NodeId i = 1; i < topo.size(); ++i) links.push_back({i, i + 1});
    if (scenario.flows == 2) {
        for (NodeId i = topo.size(); i > 1; --i) links.push_back({i, i - 1});
    }
    return links;
}

}  // namespace xorchain
