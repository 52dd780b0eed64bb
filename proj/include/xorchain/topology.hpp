#pragma once

#include <compare>
#include <string>
#include <vector>

namespace xorchain {

// Nodes are 1-based: N_1 .. N_k.
using NodeId = int;

struct Link {
    NodeId from = 0;
    NodeId to = 0;

    auto operator<=>(const Link&) const = default;
};

std::string to_string(const Link& link);

class ChainTopology {
public:
    explicit ChainTopology(int k);

    int size() const noexcept { return k_; }
    const std::vector<NodeId>& neighbors(NodeId node) const;
    bool contains(NodeId node) const noexcept { return node >= 1 && node <= k_; }
    bool adjacent(NodeId a, NodeId b) const noexcept;
    bool is_endpoint(NodeId node) const noexcept { return node == 1 || node == k_; }
    int hops(NodeId a, NodeId b) const noexcept { return a > b ? a - b : b - a; }

    bool operator==(const ChainTopology& other) const = default;

private:
    int k_;
    std::vector<std::vector<NodeId>> neighbors_;  // index 0 unused
};

// Throws ConfigError for k < 3.
ChainTopology build_chain(int k);

// 2 Mbps link, 1000-byte datagrams.
inline constexpr double kDefaultServiceRate = 2.0e6 / (1000.0 * 8.0);

struct Scenario {
    int flows = 1;
    bool retransmission = false;
    bool coding = false;
    int beta = 1;
    double p_mix = 0.0;

    // Model step 1..6, or 0 for a combination with no step (coding with one flow).
    int step() const noexcept;
    std::string label() const;
};

struct ModelParams {
    double delta = 0.0;  // seconds
    double mu = kDefaultServiceRate;  // packets/s
    double gamma_1 = 0.0;  // packets/s
    double gamma_k = 0.0;  // packets/s
};

struct ValidatedConfig {
    ChainTopology topo;
    Scenario scenario;
    ModelParams params;
    // A source rate already at or above mu; the analytic engine makes the final call.
    bool likely_unstable = false;
};

ValidatedConfig validate(const Scenario& scenario, const ModelParams& params, const ChainTopology& topo);

// Directed links carrying traffic: i -> i+1 always, plus i+1 -> i with two flows.
std::vector<Link> active_links(const ChainTopology& topo, const Scenario& scenario);

// Destination of a flow (1 = N_1 -> N_k, 2 = N_k -> N_1).
inline NodeId flow_destination(const ChainTopology& topo, int flow) { return flow == 1 ? topo.size() : 1; }
inline NodeId flow_source(const ChainTopology& topo, int flow) { return flow == 1 ? 1 : topo.size(); }
inline NodeId next_hop(NodeId node, int flow) { return flow == 1 ? node + 1 : node - 1; }

}  // namespace xorchain
