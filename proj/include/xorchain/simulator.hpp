#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <vector>

#include "xorchain/errors.hpp"
#include "xorchain/topology.hpp"

namespace xorchain {

// A queue grew past SimOptions::queue_cap.
class InstabilityError : public SimulationError {
public:
    InstabilityError(NodeId node, std::size_t length);
    NodeId node() const noexcept { return node_; }

private:
    NodeId node_;
};

enum class PacketKind { Native, Coded };

struct Packet {
    std::uint64_t id = 0;
    int flow = 1;
    PacketKind kind = PacketKind::Native;
    std::uint64_t partner_id = 0;  // coded only: the opposite-flow packet
    int attempts = 0;              // transmissions on the current hop

    int partner_flow() const noexcept { return flow == 1 ? 2 : 1; }
};

struct SimOptions {
    double horizon_s = 170.0;
    double warmup_s = 10.0;
    std::uint64_t seed = 1;
    std::size_t queue_cap = 100000;
    std::size_t history_capacity = 100000;
    int sense_hops = 2;
    // Upper bound of the uniform wait after a deferring node senses the channel
    // idle again; <= 0 selects 2 mean airtimes (2 / mu).
    double defer_jitter_s = 0.0;
    int batches = 10;
    std::ostream* trace = nullptr;
};

// Resolved transmissions per link; one still on the air at the horizon is not counted.
struct LinkCounters {
    std::uint64_t attempts = 0;
    std::uint64_t successes = 0;
    std::uint64_t collisions = 0;
};

// Per-flow packet accounting at the horizon.
struct FlowAccount {
    std::uint64_t generated = 0;
    std::uint64_t delivered = 0;
    std::uint64_t delivered_measured = 0;  // after warm-up
    std::uint64_t dropped = 0;             // retransmission limit reached
    std::uint64_t queued = 0;
    std::uint64_t in_flight = 0;
    std::uint64_t discarded_undecodable = 0;

    bool balanced() const noexcept {
        return generated == delivered + dropped + queued + in_flight + discarded_undecodable;
    }
};

struct SimResult {
    double theta = 0.0;           // delivered intended packets/s after warm-up
    double std_error = 0.0;
    double ci_half_width = 0.0;   // 95%
    int replications = 1;
    std::map<Link, LinkCounters> links;
    std::vector<double> mean_queue;      // time-averaged packets waiting, per node
    std::vector<double> departure_rate;  // transmissions started per second after warm-up, per node
    std::array<FlowAccount, 2> flows{};
    std::vector<std::uint64_t> seeds;
    std::uint64_t events = 0;
};

/// One replication. Throws SimulationError on invalid options or when a queue
/// exceeds queue_cap.
SimResult simulate(const ChainTopology& topo, const Scenario& scenario, const ModelParams& params,
                   const SimOptions& opts);

/// Seed of replication i: the master seed itself for i = 0, otherwise
/// splitmix64(master + i * 0x9E3779B97F4A7C15).
std::uint64_t replication_seed(std::uint64_t master, int index) noexcept;

/// n independent replications aggregated with a Student-t 95% interval.
/// Replications run on up to `threads` workers (0 = hardware concurrency); the
/// aggregate does not depend on the worker count.
SimResult run_replications(const ChainTopology& topo, const Scenario& scenario, const ModelParams& params,
                           const SimOptions& opts, int n_reps, unsigned threads = 0);

/// Two-sided 95% Student-t critical value for the given degrees of freedom.
double student_t95(int dof);

}  // namespace xorchain
