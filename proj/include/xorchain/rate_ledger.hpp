#pragma once

#include <array>
#include <string>
#include <vector>

#include "xorchain/topology.hpp"

namespace xorchain {

// Per-node arrival/departure rates, packets/s. Flow index 0 is flow 1
// (N_1 -> N_k), index 1 is flow 2 (N_k -> N_1).
struct NodeRates {
    double total = 0.0;                        // arrival rate at the node's queueing system
    std::array<double, 2> flow{};              // decoder output per flow, retransmissions included
    std::array<double, 2> native_in{};         // native packets received per flow
    std::array<double, 2> coded_in{};          // coded packets received, by intended flow
    std::array<double, 2> native_queue{};      // arrival rate per flow into the native queue
    std::array<double, 2> native_out{};        // native departure rate per flow
    double coded_queue = 0.0;
    double coded_out = 0.0;
};

class RateLedger {
public:
    RateLedger() = default;
    explicit RateLedger(int k) : nodes_(static_cast<std::size_t>(k)) {}

    int size() const noexcept { return static_cast<int>(nodes_.size()); }
    NodeRates& at(NodeId node) { return nodes_.at(static_cast<std::size_t>(node - 1)); }
    const NodeRates& at(NodeId node) const { return nodes_.at(static_cast<std::size_t>(node - 1)); }

    // Fixed-point sweep bookkeeping (coding scenarios only).
    int sweeps = 0;
    double sweep_residual = 0.0;
    bool sweep_converged = true;
    std::vector<std::string> warnings;

private:
    std::vector<NodeRates> nodes_;
};

}  // namespace xorchain
