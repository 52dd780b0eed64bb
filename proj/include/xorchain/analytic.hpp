#pragma once

#include <vector>

#include "xorchain/collision.hpp"
#include "xorchain/rate_ledger.hpp"
#include "xorchain/topology.hpp"

namespace xorchain {

/// Rate propagation without coding (one or two flows, with or without
/// retransmission). The self-referential retransmission rows are solved in
/// closed form: lambda_i = inflow_i / p_{i,next}.
RateLedger rates_no_coding(const ChainTopology& topo, const Scenario& scenario, const LinkProbMap& p,
                           const ModelParams& params);

/// Rate propagation with XOR coding at the relays. The decoder, encoder and
/// boundary rows couple the two directions through min(); they are solved by
/// alternating forward (flow 1) and backward (flow 2) sweeps until no rate
/// moves by more than a small fraction of the solver tolerance.
RateLedger rates_coding(const ChainTopology& topo, const Scenario& scenario, const LinkProbMap& p,
                        const ModelParams& params, const SolverOptions& opts = {});

/// Dispatches on scenario.coding.
RateLedger propagate_rates(const ChainTopology& topo, const Scenario& scenario, const LinkProbMap& p,
                           const ModelParams& params, const SolverOptions& opts = {});

double throughput(const RateLedger& ledger, const Scenario& scenario);

struct ThroughputReport {
    double theta = 0.0;
    std::vector<double> utilization;  // index 0 is N_1
    LinkProbMap p;
    RateLedger ledger;
    SolverDiagnostics diagnostics;
};

/// End-to-end analysis: joint solve, throughput, stability check.
/// Throws StabilityError when some rho_i >= 1 and ConvergenceError when the
/// joint solve does not reach the tolerance.
ThroughputReport analyze(const ChainTopology& topo, const Scenario& scenario, const ModelParams& params,
                         const SolverOptions& opts = {});

}  // namespace xorchain
